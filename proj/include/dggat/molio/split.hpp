#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dggat/molio/molecule.hpp"

namespace dggat::molio {

struct SplitSizes {
  std::size_t train = 0;
  std::size_t test = 0;
  std::size_t validation = 0;
};

struct SplitSpec {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
  std::vector<std::size_t> validation;

  bool operator==(const SplitSpec&) const = default;
};

/// Throws ContractViolation unless the three lists are nonempty, disjoint and
/// index into a dataset of `dataset_size` molecules.
void validate(const SplitSpec& split, std::size_t dataset_size);

/// Shuffles indices with `seed`, then takes train, test and validation in that order.
SplitSpec split_dataset(const Dataset& d, SplitSizes sizes, std::uint64_t seed);

/// Standardizes one target: z = (y - mean) / std.
struct TargetScaler {
  double mean = 0.0;
  double std = 1.0;

  double transform(double y) const { return (y - mean) / std; }
  double inverse(double z) const { return z * std + mean; }
};

/// Mean and population standard deviation of `target` over the train split only.
TargetScaler fit_scaler(const Dataset& d, const SplitSpec& split, const std::string& target);

/// Values of `target` for the molecules at `indices`.
std::vector<double> target_values(const Dataset& d, std::span<const std::size_t> indices,
                                  const std::string& target);

}  // namespace dggat::molio
