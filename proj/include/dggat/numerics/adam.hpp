#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dggat/numerics/tensor.hpp"

namespace dggat::numerics {

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// First/second moment buffers for a fixed, ordered parameter list.
struct AdamState {
  AdamOptions options;
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
  std::int64_t step = 0;
};

AdamState make_adam_state(std::span<const Tensor> params, AdamOptions options = {});

/// One bias-corrected Adam update of every parameter from its gradient buffer.
/// Parameters without an allocated gradient are treated as having zero gradient.
/// Throws ContractViolation when parameter sizes no longer match the state.
void adam_step(std::span<Tensor> params, AdamState& state);

}  // namespace dggat::numerics
