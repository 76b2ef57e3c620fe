#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "dggat/train/config.hpp"

namespace dggat::train {

/// One model variant trained over every replicate seed.
struct AblationRow {
  std::string label;  // "GCN", "DG-GAT - 1st Nbrs", ...
  model::ConvKind conv = model::ConvKind::gatv2;
  int max_order = 0;  // neighbor order of the graph; GCN uses bond edges only
  std::vector<double> test_rmse;  // one per seed, in cfg.seeds order
  double median_rmse = 0.0;
};

struct AblationTable {
  std::string dataset;
  std::vector<std::uint64_t> seeds;
  std::vector<AblationRow> rows;

  /// Relative change of `row` against the GCN row: (row - gcn) / gcn.
  double change_vs_gcn(std::size_t row) const;
};

double median(std::vector<double> values);

/// Trains one cell: `base` with the conv kind and neighbor order overridden.
double run_cell(const RunConfig& base, const molio::Dataset& d, model::ConvKind conv,
                int max_order, std::uint64_t seed);

/// GCN and DG-GAT at neighbor orders 1, 2 and 3, each over cfg.seeds. Each
/// seed fixes the split, the initialization and the batch order shared by all
/// four models. Cells run concurrently on up to cfg.threads workers.
AblationTable run_ablation(const RunConfig& cfg, const molio::Dataset& d, const std::string& dataset_name);

/// GCN versus DG-GAT at order 3 only (the synthetic benchmark).
AblationTable run_comparison(const RunConfig& cfg, const molio::Dataset& d, const std::string& dataset_name);

nlohmann::json to_json(const AblationTable& t);

/// Aligned plain-text table: Dataset / Model / RMSE columns.
std::string format_table(const AblationTable& t);

}  // namespace dggat::train
