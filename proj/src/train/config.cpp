#include "dggat/train/config.hpp"

#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "dggat/errors.hpp"
#include "dggat/molio/formats.hpp"

namespace dggat::train {

using nlohmann::json;

namespace {

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) {
    if (!out.empty()) out += "; ";
    out += s;
  }
  return out;
}

// Reads fields from one JSON object, recording violations instead of throwing.
class Fields {
 public:
  Fields(const json& obj, std::string prefix, std::vector<std::string>& errors,
         std::set<std::string> known)
      : obj_(obj), prefix_(std::move(prefix)), errors_(errors) {
    if (!obj_.is_object()) {
      fail("", "must be an object");
      return;
    }
    for (const auto& [key, value] : obj_.items()) {
      if (!known.contains(key)) fail(key, "unknown field");
    }
  }

  bool has(const char* key) const { return obj_.is_object() && obj_.contains(key); }

  void missing(const char* key) { fail(key, "required field is missing"); }

  void fail(const std::string& key, const std::string& what) {
    errors_.push_back(name(key) + ": " + what);
  }

  std::string name(const std::string& key) const {
    if (key.empty()) return prefix_.empty() ? "<root>" : prefix_;
    return prefix_.empty() ? key : prefix_ + "." + key;
  }

  template <typename T>
  void integer(const char* key, T& out, long long min_value, bool required = false) {
    if (!has(key)) {
      if (required) missing(key);
      return;
    }
    const json& v = obj_[key];
    if (!v.is_number_integer() || v.get<long long>() < min_value) {
      fail(key, "must be an integer >= " + std::to_string(min_value));
      return;
    }
    out = v.get<T>();
  }

  void number(const char* key, double& out, double lo, double hi, bool open_lo, bool open_hi) {
    if (!has(key)) return;
    const json& v = obj_[key];
    const bool ok = v.is_number() && (open_lo ? v.get<double>() > lo : v.get<double>() >= lo) &&
                    (open_hi ? v.get<double>() < hi : v.get<double>() <= hi);
    if (!ok) {
      std::ostringstream os;
      os << "must be a number in " << (open_lo ? '(' : '[') << lo << ", " << hi << (open_hi ? ')' : ']');
      fail(key, os.str());
      return;
    }
    out = v.get<double>();
  }

  void boolean(const char* key, bool& out) {
    if (!has(key)) return;
    if (!obj_[key].is_boolean()) {
      fail(key, "must be true or false");
      return;
    }
    out = obj_[key].get<bool>();
  }

  void string(const char* key, std::string& out, bool required) {
    if (!has(key)) {
      if (required) missing(key);
      return;
    }
    if (!obj_[key].is_string() || obj_[key].get<std::string>().empty()) {
      fail(key, "must be a nonempty string");
      return;
    }
    out = obj_[key].get<std::string>();
  }

  const json& sub(const char* key) const { return obj_[key]; }

 private:
  const json& obj_;
  std::string prefix_;
  std::vector<std::string>& errors_;
};

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

ConfigError::ConfigError(std::vector<std::string> violations)
    : std::runtime_error("invalid config: " + join(violations)), violations_(std::move(violations)) {}

RunConfig config_from_json(const json& j, const std::filesystem::path& base_dir) {
  std::vector<std::string> errors;
  RunConfig cfg;
  const auto resolve = [&](const std::string& p) {
    const std::filesystem::path path(p);
    return (path.is_absolute() || base_dir.empty() ? path : base_dir / path).string();
  };

  Fields root(j, "", errors,
              {"dataset", "target", "graph", "network", "optimizer", "training", "split", "seeds", "threads"});
  if (!j.is_object()) throw ConfigError(errors);

  if (!root.has("dataset")) {
    root.missing("dataset");
  } else {
    Fields ds(root.sub("dataset"), "dataset", errors, {"format", "path", "synthetic"});
    std::string format;
    ds.string("format", format, true);
    if (!format.empty()) {
      if (format == "jsonl") cfg.dataset.format = DatasetFormat::jsonl;
      else if (format == "sdf") cfg.dataset.format = DatasetFormat::sdf;
      else if (format == "synthetic") cfg.dataset.format = DatasetFormat::synthetic;
      else ds.fail("format", "must be one of jsonl, sdf, synthetic");
    }
    if (cfg.dataset.format == DatasetFormat::synthetic) {
      if (ds.has("synthetic")) {
        Fields syn(ds.sub("synthetic"), "dataset.synthetic", errors,
                   {"n_molecules", "min_atoms", "max_atoms", "seed"});
        syn.integer("n_molecules", cfg.dataset.synthetic.n_molecules, 1);
        syn.integer("min_atoms", cfg.dataset.synthetic.min_atoms, 2);
        syn.integer("max_atoms", cfg.dataset.synthetic.max_atoms, 2);
        syn.integer("seed", cfg.dataset.synthetic.seed, 0);
        if (cfg.dataset.synthetic.max_atoms < cfg.dataset.synthetic.min_atoms) {
          syn.fail("max_atoms", "must be >= min_atoms");
        }
      }
    } else {
      ds.string("path", cfg.dataset.path, true);
      if (!cfg.dataset.path.empty()) cfg.dataset.path = resolve(cfg.dataset.path);
    }
  }

  root.string("target", cfg.target, true);

  if (root.has("graph")) {
    Fields g(root.sub("graph"), "graph", errors, {"max_order", "cutoff", "order_onehot"});
    g.integer("max_order", cfg.graph.max_order, 1);
    if (cfg.graph.max_order > 3) g.fail("max_order", "must be 1, 2 or 3");
    g.number("cutoff", cfg.graph.d_cutoff, 0.0, kInf, true, true);
    g.boolean("order_onehot", cfg.graph.include_order_onehot);
  }

  if (root.has("network")) {
    Fields n(root.sub("network"), "network", errors,
             {"conv", "embed_dim", "hidden_dim", "depth", "heads", "head_widths", "leaky_slope",
              "last_activation"});
    std::string conv;
    n.string("conv", conv, false);
    if (conv == "gcn") cfg.network.conv = model::ConvKind::gcn;
    else if (!conv.empty() && conv != "gatv2") n.fail("conv", "must be gatv2 or gcn");
    n.integer("embed_dim", cfg.network.embed_dim, 1);
    n.integer("hidden_dim", cfg.network.hidden_dim, 1);
    n.integer("depth", cfg.network.depth, 1);
    n.integer("heads", cfg.network.heads, 1);
    if (n.has("head_widths")) {
      const json& hw = n.sub("head_widths");
      bool ok = hw.is_array();
      if (ok) {
        for (const auto& w : hw) ok = ok && w.is_number_integer() && w.get<long long>() >= 1;
      }
      if (ok) cfg.network.head_widths = hw.get<std::vector<std::size_t>>();
      else n.fail("head_widths", "must be an array of positive integers");
    }
    n.number("leaky_slope", cfg.network.leaky_slope, 0.0, 1.0, true, true);
    std::string act;
    n.string("last_activation", act, false);
    if (act == "identity") cfg.network.last_activation = model::Activation::identity;
    else if (!act.empty() && act != "elu") n.fail("last_activation", "must be elu or identity");
    if (cfg.network.conv == model::ConvKind::gatv2 && cfg.network.hidden_dim % cfg.network.heads != 0) {
      n.fail("heads", "must divide hidden_dim");
    }
  }

  if (root.has("optimizer")) {
    Fields o(root.sub("optimizer"), "optimizer", errors, {"lr", "beta1", "beta2", "eps", "schedule"});
    o.number("lr", cfg.optimizer.lr, 0.0, kInf, false, true);
    o.number("beta1", cfg.optimizer.beta1, 0.0, 1.0, false, true);
    o.number("beta2", cfg.optimizer.beta2, 0.0, 1.0, false, true);
    o.number("eps", cfg.optimizer.eps, 0.0, kInf, true, true);
    std::string schedule;
    o.string("schedule", schedule, false);
    if (schedule == "cosine") cfg.schedule = LrSchedule::cosine;
    else if (!schedule.empty() && schedule != "constant") o.fail("schedule", "must be constant or cosine");
  }

  if (root.has("training")) {
    Fields t(root.sub("training"), "training", errors,
             {"batch_size", "max_epochs", "patience", "early_stopping", "restore_best", "seed"});
    t.integer("batch_size", cfg.batch_size, 1);
    t.integer("max_epochs", cfg.max_epochs, 1);
    t.integer("patience", cfg.patience, 1);
    t.boolean("early_stopping", cfg.early_stopping);
    t.boolean("restore_best", cfg.restore_best);
    t.integer("seed", cfg.seed, 0);
  }

  if (!root.has("split")) {
    root.missing("split");
  } else {
    Fields s(root.sub("split"), "split", errors, {"sizes", "file"});
    if (s.has("file")) {
      s.string("file", cfg.split_file, true);
      if (!cfg.split_file.empty()) cfg.split_file = resolve(cfg.split_file);
    } else if (s.has("sizes")) {
      const json& sizes = s.sub("sizes");
      bool ok = sizes.is_array() && sizes.size() == 3;
      if (ok) {
        for (const auto& v : sizes) ok = ok && v.is_number_integer() && v.get<long long>() >= 1;
      }
      if (ok) {
        cfg.split_sizes = {sizes[0].get<std::size_t>(), sizes[1].get<std::size_t>(), sizes[2].get<std::size_t>()};
      } else {
        s.fail("sizes", "must be [train, test, validation] positive integers");
      }
    } else {
      s.fail("", "needs 'sizes' or 'file'");
    }
  }

  if (root.has("seeds")) {
    const json& seeds = root.sub("seeds");
    bool ok = seeds.is_array() && !seeds.empty();
    if (ok) {
      for (const auto& v : seeds) ok = ok && v.is_number_unsigned();
    }
    if (ok) cfg.seeds = seeds.get<std::vector<std::uint64_t>>();
    else root.fail("seeds", "must be a nonempty array of non-negative integers");
  }
  root.integer("threads", cfg.threads, 0);

  if (!errors.empty()) throw ConfigError(errors);
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({"cannot read config file '" + path.string() + "'"});
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError({std::string("malformed JSON: ") + e.what()});
  }
  return config_from_json(j, path.parent_path());
}

json to_json(const dggr::DGConfig& cfg) {
  return {{"max_order", cfg.max_order}, {"cutoff", cfg.d_cutoff}, {"order_onehot", cfg.include_order_onehot}};
}

dggr::DGConfig graph_config_from_json(const json& j) {
  dggr::DGConfig cfg;
  cfg.max_order = j.at("max_order").get<int>();
  cfg.d_cutoff = j.at("cutoff").get<double>();
  cfg.include_order_onehot = j.at("order_onehot").get<bool>();
  return cfg;
}

json to_json(const RunConfig& cfg) {
  json dataset;
  switch (cfg.dataset.format) {
    case DatasetFormat::jsonl: dataset = {{"format", "jsonl"}, {"path", cfg.dataset.path}}; break;
    case DatasetFormat::sdf: dataset = {{"format", "sdf"}, {"path", cfg.dataset.path}}; break;
    case DatasetFormat::synthetic:
      dataset = {{"format", "synthetic"},
                 {"synthetic",
                  {{"n_molecules", cfg.dataset.synthetic.n_molecules},
                   {"min_atoms", cfg.dataset.synthetic.min_atoms},
                   {"max_atoms", cfg.dataset.synthetic.max_atoms},
                   {"seed", cfg.dataset.synthetic.seed}}}};
      break;
  }
  json split;
  if (!cfg.split_file.empty()) split = {{"file", cfg.split_file}};
  else split = {{"sizes", {cfg.split_sizes.train, cfg.split_sizes.test, cfg.split_sizes.validation}}};
  return {{"dataset", dataset},
          {"target", cfg.target},
          {"graph", to_json(cfg.graph)},
          {"network", model::to_json(cfg.network)},
          {"optimizer",
           {{"lr", cfg.optimizer.lr}, {"beta1", cfg.optimizer.beta1}, {"beta2", cfg.optimizer.beta2}, {"eps", cfg.optimizer.eps},
            {"schedule", cfg.schedule == LrSchedule::cosine ? "cosine" : "constant"}}},
          {"training",
           {{"batch_size", cfg.batch_size},
            {"max_epochs", cfg.max_epochs},
            {"patience", cfg.patience},
            {"early_stopping", cfg.early_stopping},
            {"restore_best", cfg.restore_best},
            {"seed", cfg.seed}}},
          {"split", split},
          {"seeds", cfg.seeds},
          {"threads", cfg.threads}};
}

molio::Dataset load_dataset(const DatasetSource& source) {
  if (source.format == DatasetFormat::synthetic) return gen_synthetic(source.synthetic);
  std::ifstream in(source.path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot read dataset '" + source.path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (source.format == DatasetFormat::sdf) return molio::make_dataset(molio::parse_sdf_v2000(buffer.str()));
  return molio::parse_jsonl(buffer.str());
}

molio::SplitSpec make_split(const RunConfig& cfg, const molio::Dataset& d, std::uint64_t seed) {
  if (cfg.split_file.empty()) {
    auto split = molio::split_dataset(d, cfg.split_sizes, seed);
    molio::validate(split, d.molecules.size());
    return split;
  }
  std::ifstream in(cfg.split_file);
  if (!in) throw std::invalid_argument("cannot read split file '" + cfg.split_file + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError({std::string("split file: malformed JSON: ") + e.what()});
  }
  molio::SplitSpec split;
  try {
    split.train = j.at("train").get<std::vector<std::size_t>>();
    split.test = j.at("test").get<std::vector<std::size_t>>();
    split.validation = j.at("validation").get<std::vector<std::size_t>>();
  } catch (const json::exception& e) {
    throw ConfigError({std::string("split file: ") + e.what()});
  }
  molio::validate(split, d.molecules.size());
  return split;
}

}  // namespace dggat::train
