#include "dggat/train/trainer.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "dggat/errors.hpp"
#include "dggat/numerics/ops.hpp"
#include "dggat/random.hpp"

namespace dggat::train {

using nlohmann::json;
namespace ops = numerics;

json to_json(const Checkpoint& c) {
  return {{"format", "dggat-checkpoint/1"},
          {"target", c.target},
          {"vocab", c.vocab},
          {"graph", to_json(c.graph)},
          {"scaler", {{"mean", c.scaler.mean}, {"std", c.scaler.std}}},
          {"model", model::params_to_json(c.params)}};
}

Checkpoint checkpoint_from_json(const json& j) {
  if (j.value("format", "") != "dggat-checkpoint/1") {
    throw std::invalid_argument("not a dggat checkpoint (missing or unknown 'format')");
  }
  Checkpoint c;
  c.target = j.at("target").get<std::string>();
  c.vocab = j.at("vocab").get<std::vector<int>>();
  c.graph = graph_config_from_json(j.at("graph"));
  c.scaler.mean = j.at("scaler").at("mean").get<double>();
  c.scaler.std = j.at("scaler").at("std").get<double>();
  c.params = model::params_from_json(j.at("model"));
  if (c.params.node_feature_dim != c.vocab.size()) {
    throw std::invalid_argument("checkpoint vocab size does not match the model input width");
  }
  return c;
}

json to_json(const RunReport& r) {
  json epochs = json::array();
  for (const auto& e : r.epochs) {
    epochs.push_back({{"epoch", e.epoch}, {"train_rmse", e.train_rmse}, {"val_rmse", e.val_rmse}});
  }
  return {{"epochs", epochs},
          {"best_epoch", r.best_epoch},
          {"best_val_rmse", r.best_val_rmse},
          {"train_rmse", r.train_rmse},
          {"test_rmse", r.test_rmse},
          {"parameter_count", r.parameter_count},
          {"config", r.config}};
}

double rmse(std::span<const double> predictions, std::span<const double> targets) {
  if (predictions.size() != targets.size() || predictions.empty()) {
    throw ContractViolation("rmse: need equally sized, nonempty inputs");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double r = predictions[i] - targets[i];
    total += r * r;
  }
  return std::sqrt(total / static_cast<double>(predictions.size()));
}

namespace {

model::GraphTensors prepare_one(const molio::Molecule& m, std::span<const int> vocab,
                                const dggr::DGConfig& graph) {
  return model::prepare_graph(dggr::build_dg_graph(m, molio::featurize_nodes(m, vocab), graph));
}

double rmse_on(const model::ModelParams& params, const molio::TargetScaler& scaler,
               const PreparedData& data, std::span<const std::size_t> indices) {
  std::vector<double> pred, truth;
  for (std::size_t i : indices) {
    pred.push_back(scaler.inverse(model::predict(data.graphs[i], params)));
    truth.push_back(data.targets[i]);
  }
  return rmse(pred, truth);
}

}  // namespace

PreparedData prepare_data(const molio::Dataset& d, const dggr::DGConfig& graph,
                          const std::string& target) {
  PreparedData out;
  out.graphs.reserve(d.molecules.size());
  for (const auto& m : d.molecules) {
    out.graphs.push_back(prepare_one(m, d.element_vocab, graph));
    const auto it = m.targets.find(target);
    out.targets.push_back(it == m.targets.end() ? std::numeric_limits<double>::quiet_NaN() : it->second);
  }
  return out;
}

double scheduled_lr(const RunConfig& cfg, std::size_t epoch) {
  if (cfg.schedule == LrSchedule::constant) return cfg.optimizer.lr;
  const double progress = static_cast<double>(epoch - 1) / static_cast<double>(cfg.max_epochs);
  return 0.5 * cfg.optimizer.lr * (1.0 + std::cos(std::numbers::pi * progress));
}

TrainResult train_model(const RunConfig& cfg, const molio::Dataset& d, const molio::SplitSpec& split) {
  const auto start = std::chrono::steady_clock::now();
  molio::validate(split, d.molecules.size());
  if (std::find(d.target_names.begin(), d.target_names.end(), cfg.target) == d.target_names.end()) {
    throw ContractViolation("dataset has no target '" + cfg.target + "'");
  }

  TrainResult result;
  Checkpoint& ckpt = result.checkpoint;
  ckpt.scaler = molio::fit_scaler(d, split, cfg.target);
  ckpt.vocab = d.element_vocab;
  ckpt.graph = cfg.graph;
  ckpt.target = cfg.target;
  ckpt.params = model::init_params(cfg.network, ckpt.vocab.size(), cfg.graph.edge_feature_dim(), cfg.seed);

  const PreparedData data = prepare_data(d, cfg.graph, cfg.target);
  std::vector<ops::Tensor> params = ckpt.params.parameters();
  auto adam = ops::make_adam_state(params, cfg.optimizer);

  RunReport& report = result.report;
  report.config = to_json(cfg);
  report.parameter_count = ckpt.params.parameter_count();

  Rng rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> order = split.train;
  model::ModelParams best = ckpt.params.clone();
  double best_val = std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    adam.options.lr = scheduled_lr(cfg, epoch);
    shuffle(order, rng);
    double squared = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), begin + cfg.batch_size);
      const double weight = 1.0 / static_cast<double>(end - begin);
      for (auto& p : params) p.zero_grad();
      for (std::size_t k = begin; k < end; ++k) {
        const std::size_t i = order[k];
        ops::Tape tape;
        ops::TapeScope scope(tape);
        const ops::Tensor pred = model::forward_network(data.graphs[i], ckpt.params);
        const ops::Tensor target({1, 1}, {ckpt.scaler.transform(data.targets[i])});
        const ops::Tensor loss = ops::mse_loss(pred, target);
        if (!std::isfinite(loss.item())) {
          throw DivergenceError("non-finite loss in epoch " + std::to_string(epoch), epoch);
        }
        squared += loss.item();
        tape.backward(ops::scale(loss, weight));
      }
      ops::adam_step(params, adam);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_rmse = std::sqrt(squared / static_cast<double>(order.size())) * ckpt.scaler.std;
    rec.val_rmse = rmse_on(ckpt.params, ckpt.scaler, data, split.validation);
    if (!std::isfinite(rec.val_rmse)) {
      throw DivergenceError("non-finite validation RMSE in epoch " + std::to_string(epoch), epoch);
    }
    report.epochs.push_back(rec);

    if (rec.val_rmse < best_val) {
      best_val = rec.val_rmse;
      report.best_epoch = epoch;
      best = ckpt.params.clone();
      since_best = 0;
    } else if (cfg.early_stopping && ++since_best >= cfg.patience) {
      break;
    }
  }

  if (cfg.restore_best) {
    ckpt.params = std::move(best);
  } else {
    best_val = report.epochs.back().val_rmse;
    report.best_epoch = report.epochs.back().epoch;
  }
  report.best_val_rmse = best_val;
  report.train_rmse = evaluate(ckpt, d, split.train);
  report.test_rmse = evaluate(ckpt, d, split.test);
  report.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

std::vector<double> predict(const Checkpoint& c, const molio::Dataset& d,
                            std::span<const std::size_t> indices) {
  if (c.params.node_feature_dim != c.vocab.size()) {
    throw EvaluationError("checkpoint vocabulary does not match its model input width");
  }
  std::vector<double> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) {
    if (i >= d.molecules.size()) throw EvaluationError("molecule index " + std::to_string(i) + " out of range");
    model::GraphTensors g;
    try {
      g = prepare_one(d.molecules[i], c.vocab, c.graph);
    } catch (const FeaturizationError& e) {
      throw EvaluationError(std::string("vocabulary mismatch: ") + e.what());
    }
    out.push_back(c.scaler.inverse(model::predict(g, c.params)));
  }
  return out;
}

double evaluate(const Checkpoint& c, const molio::Dataset& d, std::span<const std::size_t> indices) {
  const auto pred = predict(c, d, indices);
  std::vector<double> truth;
  for (std::size_t i : indices) {
    const auto& targets = d.molecules[i].targets;
    const auto it = targets.find(c.target);
    if (it == targets.end()) {
      throw EvaluationError("molecule '" + d.molecules[i].id + "' has no target '" + c.target + "'");
    }
    truth.push_back(it->second);
  }
  return rmse(pred, truth);
}

}  // namespace dggat::train
