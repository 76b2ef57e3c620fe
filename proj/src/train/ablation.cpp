#include "dggat/train/ablation.hpp"

#include <algorithm>
#include <cstdio>
#include <future>
#include <sstream>
#include <thread>

#include "dggat/errors.hpp"
#include "dggat/train/trainer.hpp"

namespace dggat::train {

using nlohmann::json;

namespace {

std::string order_label(int order) {
  switch (order) {
    case 1: return "DG-GAT - 1st Nbrs";
    case 2: return "DG-GAT - 2nd Nbrs";
    default: return "DG-GAT - 3rd Nbrs";
  }
}

AblationTable run_rows(const RunConfig& cfg, const molio::Dataset& d, const std::string& name,
                       std::vector<AblationRow> rows) {
  AblationTable table;
  table.dataset = name;
  table.seeds = cfg.seeds;

  struct Cell {
    std::size_t row;
    std::size_t seed;
  };
  std::vector<Cell> cells;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    rows[r].test_rmse.assign(cfg.seeds.size(), 0.0);
    for (std::size_t s = 0; s < cfg.seeds.size(); ++s) cells.push_back({r, s});
  }

  std::size_t workers = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, cells.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&]() {
    for (std::size_t k = next++; k < cells.size(); k = next++) {
      const Cell& c = cells[k];
      rows[c.row].test_rmse[c.seed] =
          run_cell(cfg, d, rows[c.row].conv, rows[c.row].max_order, cfg.seeds[c.seed]);
    }
  };
  std::vector<std::future<void>> futures;
  for (std::size_t w = 0; w < workers; ++w) futures.push_back(std::async(std::launch::async, worker));
  for (auto& f : futures) f.get();

  for (auto& row : rows) row.median_rmse = median(row.test_rmse);
  table.rows = std::move(rows);
  return table;
}

}  // namespace

double median(std::vector<double> values) {
  if (values.empty()) throw ContractViolation("median of an empty list");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

double AblationTable::change_vs_gcn(std::size_t row) const {
  const auto gcn = std::find_if(rows.begin(), rows.end(),
                                [](const AblationRow& r) { return r.conv == model::ConvKind::gcn; });
  if (gcn == rows.end()) throw ContractViolation("table has no GCN row");
  return (rows.at(row).median_rmse - gcn->median_rmse) / gcn->median_rmse;
}

double run_cell(const RunConfig& base, const molio::Dataset& d, model::ConvKind conv, int max_order,
                std::uint64_t seed) {
  RunConfig cfg = base;
  cfg.seed = seed;
  cfg.network.conv = conv;
  cfg.graph.max_order = max_order;
  const auto split = make_split(cfg, d, seed);
  return train_model(cfg, d, split).report.test_rmse;
}

AblationTable run_ablation(const RunConfig& cfg, const molio::Dataset& d, const std::string& name) {
  std::vector<AblationRow> rows;
  rows.push_back({"GCN", model::ConvKind::gcn, 1, {}, 0.0});
  for (int order = 1; order <= 3; ++order) rows.push_back({order_label(order), model::ConvKind::gatv2, order, {}, 0.0});
  return run_rows(cfg, d, name, std::move(rows));
}

AblationTable run_comparison(const RunConfig& cfg, const molio::Dataset& d, const std::string& name) {
  std::vector<AblationRow> rows;
  rows.push_back({"GCN", model::ConvKind::gcn, 1, {}, 0.0});
  rows.push_back({order_label(3), model::ConvKind::gatv2, 3, {}, 0.0});
  return run_rows(cfg, d, name, std::move(rows));
}

json to_json(const AblationTable& t) {
  json rows = json::array();
  for (const auto& r : t.rows) {
    rows.push_back({{"model", r.label},
                    {"conv", r.conv == model::ConvKind::gcn ? "gcn" : "gatv2"},
                    {"max_order", r.max_order},
                    {"test_rmse", r.test_rmse},
                    {"median_rmse", r.median_rmse}});
  }
  return {{"dataset", t.dataset}, {"seeds", t.seeds}, {"rows", rows}};
}

std::string format_table(const AblationTable& t) {
  std::size_t dataset_w = std::max<std::size_t>(7, t.dataset.size());
  std::size_t model_w = 5;
  for (const auto& r : t.rows) model_w = std::max(model_w, r.label.size());
  std::ostringstream os;
  const auto line = [&](const std::string& a, const std::string& b, const std::string& c) {
    os << a << std::string(dataset_w - a.size() + 2, ' ') << b << std::string(model_w - b.size() + 2, ' ')
       << c << '\n';
  };
  line("Dataset", "Model", "RMSE");
  for (std::size_t k = 0; k < t.rows.size(); ++k) {
    char value[32];
    std::snprintf(value, sizeof value, "%.4f", t.rows[k].median_rmse);
    line(k == 0 ? t.dataset : "", t.rows[k].label, value);
  }
  return os.str();
}

}  // namespace dggat::train
