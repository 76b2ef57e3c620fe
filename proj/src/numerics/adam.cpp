#include "dggat/numerics/adam.hpp"

#include <cmath>
#include <string>

#include "dggat/errors.hpp"

namespace dggat::numerics {

AdamState make_adam_state(std::span<const Tensor> params, AdamOptions options) {
  AdamState state;
  state.options = options;
  for (const Tensor& p : params) {
    state.first_moment.emplace_back(p.numel(), 0.0);
    state.second_moment.emplace_back(p.numel(), 0.0);
  }
  return state;
}

void adam_step(std::span<Tensor> params, AdamState& state) {
  if (params.size() != state.first_moment.size()) {
    throw ContractViolation("adam_step: " + std::to_string(params.size()) +
                            " parameters but state tracks " +
                            std::to_string(state.first_moment.size()));
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (params[k].numel() != state.first_moment[k].size()) {
      throw ContractViolation("adam_step: parameter " + std::to_string(k) + " has shape " +
                              shape_string(params[k].shape()) + ", state expects " +
                              std::to_string(state.first_moment[k].size()) + " values");
    }
  }
  const AdamOptions& o = state.options;
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double bias1 = 1.0 - std::pow(o.beta1, t);
  const double bias2 = 1.0 - std::pow(o.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor& p = params[k];
    const auto grad = p.grad();
    auto value = p.mutable_data();
    auto& m = state.first_moment[k];
    auto& v = state.second_moment[k];
    for (std::size_t i = 0; i < value.size(); ++i) {
      const double g = grad.empty() ? 0.0 : grad[i];
      m[i] = o.beta1 * m[i] + (1.0 - o.beta1) * g;
      v[i] = o.beta2 * v[i] + (1.0 - o.beta2) * g * g;
      const double m_hat = m[i] / bias1;
      const double v_hat = v[i] / bias2;
      value[i] -= o.lr * m_hat / (std::sqrt(v_hat) + o.eps);
    }
  }
}

}  // namespace dggat::numerics
