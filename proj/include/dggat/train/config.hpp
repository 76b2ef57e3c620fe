#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "dggat/dggr/dg_graph.hpp"
#include "dggat/model/network.hpp"
#include "dggat/molio/split.hpp"
#include "dggat/numerics/adam.hpp"
#include "dggat/train/synthetic.hpp"

namespace dggat::train {

/// Every schema violation found in a run configuration, one message per field.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> violations);
  const std::vector<std::string>& violations() const noexcept { return violations_; }

 private:
  std::vector<std::string> violations_;
};

enum class DatasetFormat { jsonl, sdf, synthetic };

// cosine: lr * (1 + cos(pi * (epoch - 1) / max_epochs)) / 2, set at the start of each epoch.
enum class LrSchedule { constant, cosine };

struct DatasetSource {
  DatasetFormat format = DatasetFormat::jsonl;
  std::string path;  // unused for synthetic
  SyntheticSpec synthetic;
};

struct RunConfig {
  DatasetSource dataset;
  std::string target;
  dggr::DGConfig graph;
  model::NetworkConfig network;
  numerics::AdamOptions optimizer;
  LrSchedule schedule = LrSchedule::constant;
  std::size_t batch_size = 32;
  std::size_t max_epochs = 300;
  std::size_t patience = 30;
  bool early_stopping = true;
  bool restore_best = true;  // false: keep the parameters of the last epoch
  std::uint64_t seed = 0;
  molio::SplitSizes split_sizes;
  std::string split_file;  // when set, overrides split_sizes
  std::vector<std::uint64_t> seeds{0, 1, 2};  // replicates for tables
  std::size_t threads = 0;                     // 0: hardware concurrency
};

/// Parses and validates a configuration document. Relative paths are resolved
/// against `base_dir`. Throws ConfigError listing every violated field.
RunConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});

/// Reads a configuration file; its directory is the base for relative paths.
RunConfig load_config(const std::filesystem::path& path);

nlohmann::json to_json(const RunConfig& cfg);

nlohmann::json to_json(const dggr::DGConfig& cfg);
dggr::DGConfig graph_config_from_json(const nlohmann::json& j);

/// Loads the configured dataset (file or synthetic).
molio::Dataset load_dataset(const DatasetSource& source);

/// Explicit split file, or a seeded split of the configured sizes.
molio::SplitSpec make_split(const RunConfig& cfg, const molio::Dataset& d, std::uint64_t seed);

}  // namespace dggat::train
