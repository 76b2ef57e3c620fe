#include "dggat/cli/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "dggat/dggr/dg_graph.hpp"
#include "dggat/errors.hpp"
#include "dggat/molio/formats.hpp"
#include "dggat/molio/periodic_table.hpp"
#include "dggat/train/ablation.hpp"
#include "dggat/train/trainer.hpp"

namespace dggat::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  out << content;
}

molio::Dataset read_molecules(const std::string& path, const std::string& format) {
  const std::string text = read_file(path);
  if (format == "sdf") return molio::make_dataset(molio::parse_sdf_v2000(text));
  return molio::parse_jsonl(text);
}

std::string detect_format(const std::string& path) {
  const std::string ext = fs::path(path).extension().string();
  return ext == ".sdf" || ext == ".mol" || ext == ".sd" ? "sdf" : "jsonl";
}

std::string vocab_line(const std::vector<int>& vocab) {
  std::string line = "vocab:";
  for (int z : vocab) line += " " + std::string(molio::element_symbol(z));
  return line;
}

std::string format_rmse(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

struct Options {
  std::string input;
  std::string format = "jsonl";
  std::string out;
  std::string id;
  int max_order = 3;
  double cutoff = 10.0;
  std::string config;
  std::string checkpoint;
};

int cmd_prepare(const Options& o, std::ostream& out) {
  const molio::Dataset d = read_molecules(o.input, o.format);
  write_file(o.out, molio::to_jsonl(d));
  out << d.molecules.size() << " molecules\n" << vocab_line(d.element_vocab) << '\n';
  return kExitOk;
}

int cmd_inspect(const Options& o, std::ostream& out) {
  const molio::Dataset d = read_molecules(o.input, detect_format(o.input));
  const auto it = std::find_if(d.molecules.begin(), d.molecules.end(),
                               [&](const molio::Molecule& m) { return m.id == o.id; });
  if (it == d.molecules.end()) throw InputError("no molecule with id '" + o.id + "'");
  dggr::DGConfig cfg;
  cfg.max_order = o.max_order;
  cfg.d_cutoff = o.cutoff;
  const auto g = dggr::build_dg_graph(*it, molio::featurize_nodes(*it, d.element_vocab), cfg);
  for (const auto& e : g.edges) {
    out << json{{"src", e.src}, {"dst", e.dst}, {"order", static_cast<int>(e.order)},
                {"distance", e.distance}, {"feature", e.feature}}.dump()
        << '\n';
  }
  const auto counts = dggr::count_pairs(g);
  out << "pairs: order1=" << counts[1] << " order2=" << counts[2] << " order3=" << counts[3] << '\n';
  return kExitOk;
}

int cmd_train(const Options& o, std::ostream& out, std::ostream& err) {
  const auto cfg = train::load_config(o.config);
  const auto d = train::load_dataset(cfg.dataset);
  const auto split = train::make_split(cfg, d, cfg.seed);
  const auto result = train::train_model(cfg, d, split);
  const std::string report = train::to_json(result.report).dump(2) + "\n";
  if (!o.out.empty()) {
    write_file(fs::path(o.out) / "checkpoint.json", train::to_json(result.checkpoint).dump() + "\n");
    write_file(fs::path(o.out) / "report.json", report);
  }
  out << "best_epoch=" << result.report.best_epoch << " train_rmse=" << format_rmse(result.report.train_rmse)
      << " val_rmse=" << format_rmse(result.report.best_val_rmse)
      << " test_rmse=" << format_rmse(result.report.test_rmse) << '\n';
  err << "wall time " << result.report.wall_time_s << " s\n";
  return kExitOk;
}

int cmd_eval(const Options& o, std::ostream& out) {
  const auto cfg = train::load_config(o.config);
  const auto d = train::load_dataset(cfg.dataset);
  const auto split = train::make_split(cfg, d, cfg.seed);
  json ckpt_json;
  try {
    ckpt_json = json::parse(read_file(o.checkpoint));
  } catch (const json::parse_error& e) {
    throw InputError(std::string("checkpoint: ") + e.what());
  }
  const auto ckpt = train::checkpoint_from_json(ckpt_json);
  const json result = {{"train_rmse", train::evaluate(ckpt, d, split.train)},
                       {"val_rmse", train::evaluate(ckpt, d, split.validation)},
                       {"test_rmse", train::evaluate(ckpt, d, split.test)}};
  out << result.dump() << '\n';
  if (!o.out.empty()) write_file(o.out, result.dump(2) + "\n");
  return kExitOk;
}

std::string dataset_name(const train::RunConfig& cfg) {
  if (cfg.dataset.format == train::DatasetFormat::synthetic) return "synthetic";
  return fs::path(cfg.dataset.path).stem().string();
}

int cmd_bench(const Options& o, std::ostream& out) {
  auto cfg = train::load_config(o.config);
  if (cfg.dataset.format != train::DatasetFormat::synthetic) {
    throw InputError("bench needs dataset.format = synthetic");
  }
  cfg.target = train::kSyntheticTarget;
  const auto d = train::load_dataset(cfg.dataset);
  const auto table = train::run_comparison(cfg, d, "synthetic");
  out << train::format_table(table);
  char line[96];
  std::snprintf(line, sizeof line, "DG-GAT (3rd Nbrs) vs GCN: %+.1f%%\n", 100.0 * table.change_vs_gcn(1));
  out << line;
  if (!o.out.empty()) write_file(o.out, train::to_json(table).dump(2) + "\n");
  return kExitOk;
}

int cmd_ablate(const Options& o, std::ostream& out) {
  const auto cfg = train::load_config(o.config);
  const auto d = train::load_dataset(cfg.dataset);
  const auto table = train::run_ablation(cfg, d, dataset_name(cfg));
  out << train::format_table(table);
  if (!o.out.empty()) write_file(o.out, train::to_json(table).dump(2) + "\n");
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Distance-geometric graph attention networks for molecular property regression", "dggat"};
  app.require_subcommand(1, 1);
  Options o;

  auto* prepare = app.add_subcommand("prepare", "Parse, validate and normalize molecules to JSONL");
  prepare->add_option("--input", o.input, "Input file")->required();
  prepare->add_option("--format", o.format, "Input format")->check(CLI::IsMember({"jsonl", "sdf"}));
  prepare->add_option("--out", o.out, "Output JSONL file")->required();

  auto* inspect = app.add_subcommand("inspect", "Print the distance-geometric edges of one molecule");
  inspect->add_option("--input", o.input, "JSONL or SDF file")->required();
  inspect->add_option("--id", o.id, "Molecule id")->required();
  inspect->add_option("--max-order", o.max_order, "Highest neighbor order (1-3)")->check(CLI::Range(1, 3));
  inspect->add_option("--cutoff", o.cutoff, "Distance cutoff in angstrom")->check(CLI::PositiveNumber);

  auto* train_cmd = app.add_subcommand("train", "Train one model and write checkpoint + report");
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on the configured split");
  auto* bench = app.add_subcommand("bench", "GCN vs DG-GAT on the synthetic benchmark");
  auto* ablate = app.add_subcommand("ablate", "GCN and DG-GAT at neighbor orders 1-3");
  for (auto* sub : {train_cmd, eval, bench, ablate}) {
    sub->add_option("--config", o.config, "Run configuration (JSON)")->required();
    sub->add_option("--out", o.out, sub == train_cmd ? "Output directory" : "Output JSON file");
  }
  eval->add_option("--checkpoint", o.checkpoint, "Checkpoint written by train")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  }

  try {
    if (prepare->parsed()) return cmd_prepare(o, out);
    if (inspect->parsed()) return cmd_inspect(o, out);
    if (train_cmd->parsed()) return cmd_train(o, out, err);
    if (eval->parsed()) return cmd_eval(o, out);
    if (bench->parsed()) return cmd_bench(o, out);
    if (ablate->parsed()) return cmd_ablate(o, out);
  } catch (const train::ConfigError& e) {
    for (const auto& v : e.violations()) err << "config error: " << v << '\n';
    return kExitInput;
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << '\n';
    return kExitInput;
  } catch (const DivergenceError& e) {
    err << "training diverged: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::logic_error& e) {
    // ContractViolation, DimensionError, invalid_argument: bad inputs reached a contract.
    err << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const EvaluationError& e) {
    err << "evaluation error: " << e.what() << '\n';
    return kExitInput;
  } catch (const nlohmann::json::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
  return kExitInternal;
}

}  // namespace dggat::cli
