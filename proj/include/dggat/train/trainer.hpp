#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "dggat/model/network.hpp"
#include "dggat/molio/split.hpp"
#include "dggat/train/config.hpp"

namespace dggat::train {

/// Everything needed to reproduce predictions in original target units.
struct Checkpoint {
  model::ModelParams params;
  molio::TargetScaler scaler;
  std::vector<int> vocab;
  dggr::DGConfig graph;
  std::string target;
};

nlohmann::json to_json(const Checkpoint& c);
Checkpoint checkpoint_from_json(const nlohmann::json& j);

struct EpochRecord {
  std::size_t epoch = 0;
  double train_rmse = 0.0;  // running, over the epoch's batches
  double val_rmse = 0.0;
};

struct RunReport {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  double best_val_rmse = 0.0;
  double train_rmse = 0.0;  // best checkpoint, full train split
  double test_rmse = 0.0;   // best checkpoint, evaluated once
  std::size_t parameter_count = 0;
  double wall_time_s = 0.0;  // kept out of the JSON so reports stay byte-stable
  nlohmann::json config;
};

nlohmann::json to_json(const RunReport& r);

struct TrainResult {
  Checkpoint checkpoint;
  RunReport report;
};

/// Graphs and standardized targets for one dataset under one graph config.
struct PreparedData {
  std::vector<model::GraphTensors> graphs;
  std::vector<double> targets;  // original units
};

PreparedData prepare_data(const molio::Dataset& d, const dggr::DGConfig& graph,
                          const std::string& target);

double rmse(std::span<const double> predictions, std::span<const double> targets);

/// Learning rate used during `epoch` (1-based).
double scheduled_lr(const RunConfig& cfg, std::size_t epoch);

/// Adam on per-molecule MSE of standardized targets, early stopping on
/// validation RMSE, best checkpoint restored (unless cfg.restore_best is
/// false). Deterministic in cfg.seed.
/// Throws DivergenceError on a non-finite loss.
TrainResult train_model(const RunConfig& cfg, const molio::Dataset& d, const molio::SplitSpec& split);

/// Predictions in original target units for the molecules at `indices`.
std::vector<double> predict(const Checkpoint& c, const molio::Dataset& d,
                            std::span<const std::size_t> indices);

/// RMSE in original target units. Throws EvaluationError when the dataset holds
/// elements outside the checkpoint vocabulary or lacks the target.
double evaluate(const Checkpoint& c, const molio::Dataset& d, std::span<const std::size_t> indices);

}  // namespace dggat::train
