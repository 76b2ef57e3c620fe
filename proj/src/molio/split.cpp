#include "dggat/molio/split.hpp"

#include <cmath>
#include <numeric>

#include "dggat/errors.hpp"
#include "dggat/random.hpp"

namespace dggat::molio {

void validate(const SplitSpec& split, std::size_t dataset_size) {
  std::vector<bool> used(dataset_size, false);
  const auto check = [&](const std::vector<std::size_t>& part, const char* name) {
    if (part.empty()) throw ContractViolation(std::string("split '") + name + "' is empty");
    for (std::size_t i : part) {
      if (i >= dataset_size) {
        throw ContractViolation(std::string("split '") + name + "' index " + std::to_string(i) +
                                " out of range for " + std::to_string(dataset_size) + " molecules");
      }
      if (used[i]) {
        throw ContractViolation("molecule " + std::to_string(i) + " appears in more than one split");
      }
      used[i] = true;
    }
  };
  check(split.train, "train");
  check(split.test, "test");
  check(split.validation, "validation");
}

SplitSpec split_dataset(const Dataset& d, SplitSizes sizes, std::uint64_t seed) {
  const std::size_t n = d.molecules.size();
  if (sizes.train + sizes.test + sizes.validation > n) {
    throw ContractViolation("split sizes " + std::to_string(sizes.train) + "/" +
                            std::to_string(sizes.test) + "/" + std::to_string(sizes.validation) +
                            " exceed dataset of " + std::to_string(n) + " molecules");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  shuffle(order, rng);
  SplitSpec split;
  auto it = order.begin();
  split.train.assign(it, it + static_cast<std::ptrdiff_t>(sizes.train));
  it += static_cast<std::ptrdiff_t>(sizes.train);
  split.test.assign(it, it + static_cast<std::ptrdiff_t>(sizes.test));
  it += static_cast<std::ptrdiff_t>(sizes.test);
  split.validation.assign(it, it + static_cast<std::ptrdiff_t>(sizes.validation));
  return split;
}

std::vector<double> target_values(const Dataset& d, std::span<const std::size_t> indices,
                                  const std::string& target) {
  std::vector<double> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) {
    const auto& targets = d.molecules.at(i).targets;
    const auto it = targets.find(target);
    if (it == targets.end()) {
      throw ContractViolation("molecule '" + d.molecules[i].id + "' has no target '" + target + "'");
    }
    out.push_back(it->second);
  }
  return out;
}

TargetScaler fit_scaler(const Dataset& d, const SplitSpec& split, const std::string& target) {
  if (split.train.empty()) throw ContractViolation("fit_scaler: empty train split");
  const auto y = target_values(d, split.train, target);
  const double n = static_cast<double>(y.size());
  const double mean = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double var = 0.0;
  for (double v : y) var += (v - mean) * (v - mean);
  const double std = std::sqrt(var / n);
  if (!(std >= 1e-12)) {
    throw ContractViolation("fit_scaler: target '" + target + "' is constant on the train split");
  }
  return TargetScaler{mean, std};
}

}  // namespace dggat::molio
