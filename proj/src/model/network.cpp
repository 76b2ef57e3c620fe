#include "dggat/model/network.hpp"

#include <cmath>
#include <stdexcept>

#include "dggat/errors.hpp"
#include "dggat/numerics/ops.hpp"
#include "dggat/random.hpp"

namespace dggat::model {

namespace ops = numerics;
using nlohmann::json;

void validate(const NetworkConfig& cfg) {
  const auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ContractViolation("network config: " + what);
  };
  require(cfg.embed_dim > 0, "embed_dim must be positive");
  require(cfg.hidden_dim > 0, "hidden_dim must be positive");
  require(cfg.depth > 0, "depth must be positive");
  require(cfg.heads > 0, "heads must be positive");
  require(cfg.conv == ConvKind::gcn || cfg.hidden_dim % cfg.heads == 0,
          "hidden_dim must be divisible by heads");
  for (std::size_t w : cfg.head_widths) require(w > 0, "head_widths entries must be positive");
  require(cfg.leaky_slope > 0.0 && cfg.leaky_slope < 1.0, "leaky_slope must lie in (0, 1)");
}

namespace {

Tensor glorot(Rng& rng, std::size_t fan_in, std::size_t fan_out) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::vector<double> w(fan_in * fan_out);
  for (double& v : w) v = uniform(rng, -limit, limit);
  return Tensor({fan_in, fan_out}, std::move(w), true);
}

Tensor zeros(std::size_t n) { return Tensor::zeros({n}, true); }

Linear make_linear(Rng& rng, std::size_t in, std::size_t out) {
  return Linear{glorot(rng, in, out), zeros(out)};
}

Tensor activate(const Tensor& x, Activation act) {
  return act == Activation::elu ? ops::elu(x) : x;
}

Tensor linear(const Tensor& x, const Linear& l) {
  return ops::add_row_bias(ops::matmul(x, l.weight), l.bias);
}

}  // namespace

std::vector<std::pair<std::string, Tensor>> ModelParams::named_parameters() const {
  std::vector<std::pair<std::string, Tensor>> out;
  out.emplace_back("embed.weight", embed.weight);
  out.emplace_back("embed.bias", embed.bias);
  for (std::size_t l = 0; l < gat_layers.size(); ++l) {
    const std::string prefix = "conv" + std::to_string(l) + ".";
    for (std::size_t h = 0; h < gat_layers[l].heads.size(); ++h) {
      const auto& head = gat_layers[l].heads[h];
      const std::string hp = prefix + "head" + std::to_string(h) + ".";
      out.emplace_back(hp + "w_dst", head.w_dst);
      out.emplace_back(hp + "w_src", head.w_src);
      out.emplace_back(hp + "w_edge", head.w_edge);
      out.emplace_back(hp + "a", head.a);
      out.emplace_back(hp + "w_value", head.w_value);
    }
    out.emplace_back(prefix + "bias", gat_layers[l].bias);
  }
  for (std::size_t l = 0; l < gcn_layers.size(); ++l) {
    const std::string prefix = "conv" + std::to_string(l) + ".";
    out.emplace_back(prefix + "weight", gcn_layers[l].weight);
    out.emplace_back(prefix + "bias", gcn_layers[l].bias);
  }
  for (std::size_t l = 0; l < head.size(); ++l) {
    const std::string prefix = "mlp" + std::to_string(l) + ".";
    out.emplace_back(prefix + "weight", head[l].weight);
    out.emplace_back(prefix + "bias", head[l].bias);
  }
  return out;
}

std::vector<Tensor> ModelParams::parameters() const {
  std::vector<Tensor> out;
  for (auto& [name, t] : named_parameters()) out.push_back(t);
  return out;
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for (const Tensor& t : parameters()) n += t.numel();
  return n;
}

ModelParams ModelParams::clone() const {
  ModelParams copy = *this;
  const auto deep = [](Tensor& t) { t = t.clone(); };
  deep(copy.embed.weight);
  deep(copy.embed.bias);
  for (auto& layer : copy.gat_layers) {
    for (auto& head : layer.heads) {
      deep(head.w_dst);
      deep(head.w_src);
      deep(head.w_edge);
      deep(head.a);
      deep(head.w_value);
    }
    deep(layer.bias);
  }
  for (auto& layer : copy.gcn_layers) {
    deep(layer.weight);
    deep(layer.bias);
  }
  for (auto& l : copy.head) {
    deep(l.weight);
    deep(l.bias);
  }
  return copy;
}

ModelParams init_params(const NetworkConfig& cfg, std::size_t node_feature_dim,
                        std::size_t edge_feature_dim, std::uint64_t seed) {
  validate(cfg);
  if (node_feature_dim == 0) throw ContractViolation("node_feature_dim must be positive");
  Rng rng(seed);
  ModelParams p;
  p.config = cfg;
  p.node_feature_dim = node_feature_dim;
  p.edge_feature_dim = edge_feature_dim;
  p.embed = make_linear(rng, node_feature_dim, cfg.embed_dim);

  std::size_t width = cfg.embed_dim;
  for (std::size_t l = 0; l < cfg.depth; ++l) {
    const bool last = l + 1 == cfg.depth;
    if (cfg.conv == ConvKind::gatv2) {
      GATv2Layer layer;
      layer.leaky_slope = cfg.leaky_slope;
      layer.concat_heads = !last;
      const std::size_t head_out = last ? cfg.hidden_dim : cfg.hidden_dim / cfg.heads;
      for (std::size_t h = 0; h < cfg.heads; ++h) {
        AttentionHead head;
        head.w_dst = glorot(rng, width, head_out);
        head.w_src = glorot(rng, width, head_out);
        head.w_edge = edge_feature_dim ? glorot(rng, edge_feature_dim, head_out)
                                       : Tensor::zeros({0, head_out}, true);
        head.a = glorot(rng, head_out, 1);
        head.w_value = glorot(rng, width, head_out);
        layer.heads.push_back(std::move(head));
      }
      layer.bias = zeros(layer.out_width());
      width = layer.out_width();
      p.gat_layers.push_back(std::move(layer));
    } else {
      p.gcn_layers.push_back(GCNLayer{glorot(rng, width, cfg.hidden_dim), zeros(cfg.hidden_dim)});
      width = cfg.hidden_dim;
    }
  }
  for (std::size_t w : cfg.head_widths) {
    p.head.push_back(make_linear(rng, width, w));
    width = w;
  }
  p.head.push_back(make_linear(rng, width, 1));
  return p;
}

GraphTensors prepare_graph(const dggr::DGGraph& g) {
  GraphTensors t;
  t.num_nodes = g.num_nodes();
  t.node_features = Tensor({g.node_features.rows, g.node_features.cols}, g.node_features.values);
  const std::size_t e_count = g.edges.size();
  std::vector<double> ef;
  ef.reserve(e_count * g.edge_feature_dim);
  std::vector<double> degree(t.num_nodes, 0.0);
  for (const auto& e : g.edges) {
    t.src.push_back(e.src);
    t.dst.push_back(e.dst);
    ef.insert(ef.end(), e.feature.begin(), e.feature.end());
    if (e.order == dggr::NeighborOrder::self || e.order == dggr::NeighborOrder::connected) {
      t.gcn_src.push_back(e.src);
      t.gcn_dst.push_back(e.dst);
      degree[e.dst] += 1.0;
    }
  }
  t.edge_features = Tensor({e_count, g.edge_feature_dim}, std::move(ef));
  std::vector<double> w(t.gcn_src.size());
  for (std::size_t k = 0; k < w.size(); ++k) {
    w[k] = 1.0 / std::sqrt(degree[t.gcn_src[k]] * degree[t.gcn_dst[k]]);
  }
  const std::size_t n_gcn = w.size();
  t.gcn_weight = Tensor({n_gcn}, std::move(w));
  t.readout_group.assign(t.num_nodes, 0);
  return t;
}

Tensor gatv2_scores(const Tensor& x, const GraphTensors& g, const AttentionHead& head,
                    double leaky_slope) {
  if (x.cols() != head.w_dst.rows() || g.edge_features.cols() != head.w_edge.rows()) {
    throw DimensionError("gatv2_scores: node width " + std::to_string(x.cols()) + " / edge width " +
                         std::to_string(g.edge_features.cols()) + " do not match layer " +
                         numerics::shape_string(head.w_dst.shape()) + " / " +
                         numerics::shape_string(head.w_edge.shape()));
  }
  const Tensor dst_part = ops::gather_rows(ops::matmul(x, head.w_dst), g.dst);
  const Tensor src_part = ops::gather_rows(ops::matmul(x, head.w_src), g.src);
  Tensor hidden = ops::add(dst_part, src_part);
  if (head.w_edge.rows() > 0) hidden = ops::add(hidden, ops::matmul(g.edge_features, head.w_edge));
  return ops::matmul(ops::leaky_relu(hidden, leaky_slope), head.a);
}

std::vector<Tensor> gatv2_attention(const Tensor& x, const GraphTensors& g, const GATv2Layer& layer) {
  std::vector<Tensor> alphas;
  for (const auto& head : layer.heads) {
    alphas.push_back(ops::segment_softmax(gatv2_scores(x, g, head, layer.leaky_slope), g.dst));
  }
  return alphas;
}

Tensor gatv2_forward(const Tensor& x, const GraphTensors& g, const GATv2Layer& layer,
                     Activation activation) {
  const auto alphas = gatv2_attention(x, g, layer);
  std::vector<Tensor> outputs;
  for (std::size_t h = 0; h < layer.heads.size(); ++h) {
    const Tensor values = ops::gather_rows(ops::matmul(x, layer.heads[h].w_value), g.src);
    outputs.push_back(ops::segment_weighted_sum(alphas[h], values, g.dst, g.num_nodes));
  }
  Tensor combined;
  if (outputs.size() == 1) {
    combined = outputs.front();
  } else if (layer.concat_heads) {
    combined = ops::concat_features(outputs);
  } else {
    combined = outputs.front();
    for (std::size_t h = 1; h < outputs.size(); ++h) combined = ops::add(combined, outputs[h]);
    combined = ops::scale(combined, 1.0 / static_cast<double>(outputs.size()));
  }
  return activate(ops::add_row_bias(combined, layer.bias), activation);
}

Tensor gcn_forward(const Tensor& x, const GraphTensors& g, const GCNLayer& layer,
                   Activation activation) {
  const Tensor projected = ops::matmul(x, layer.weight);
  const Tensor messages = ops::gather_rows(projected, g.gcn_src);
  const Tensor aggregated = ops::segment_weighted_sum(g.gcn_weight, messages, g.gcn_dst, g.num_nodes);
  return activate(ops::add_row_bias(aggregated, layer.bias), activation);
}

Tensor forward_network(const GraphTensors& g, const ModelParams& params) {
  if (g.node_features.cols() != params.node_feature_dim) {
    throw DimensionError("forward_network: graph has " + std::to_string(g.node_features.cols()) +
                         " node features, model expects " + std::to_string(params.node_feature_dim));
  }
  const auto& cfg = params.config;
  Tensor x = linear(g.node_features, params.embed);
  const std::size_t depth = cfg.conv == ConvKind::gatv2 ? params.gat_layers.size() : params.gcn_layers.size();
  for (std::size_t l = 0; l < depth; ++l) {
    const Activation act = l + 1 == depth ? cfg.last_activation : Activation::elu;
    x = cfg.conv == ConvKind::gatv2 ? gatv2_forward(x, g, params.gat_layers[l], act)
                                    : gcn_forward(x, g, params.gcn_layers[l], act);
  }
  Tensor h = ops::mean_rows(x, g.readout_group, 1);
  for (std::size_t l = 0; l < params.head.size(); ++l) {
    h = linear(h, params.head[l]);
    if (l + 1 < params.head.size()) h = ops::elu(h);
  }
  return h;
}

double predict(const GraphTensors& g, const ModelParams& params) {
  numerics::NoGradScope no_grad;
  return forward_network(g, params).item();
}

// ---------------------------------------------------------------- JSON

json to_json(const NetworkConfig& cfg) {
  return {{"conv", cfg.conv == ConvKind::gatv2 ? "gatv2" : "gcn"},
          {"embed_dim", cfg.embed_dim},
          {"hidden_dim", cfg.hidden_dim},
          {"depth", cfg.depth},
          {"heads", cfg.heads},
          {"head_widths", cfg.head_widths},
          {"leaky_slope", cfg.leaky_slope},
          {"last_activation", cfg.last_activation == Activation::elu ? "elu" : "identity"}};
}

NetworkConfig network_config_from_json(const json& j) {
  NetworkConfig cfg;
  const std::string conv = j.at("conv").get<std::string>();
  if (conv != "gatv2" && conv != "gcn") throw std::invalid_argument("unknown conv kind '" + conv + "'");
  cfg.conv = conv == "gatv2" ? ConvKind::gatv2 : ConvKind::gcn;
  cfg.embed_dim = j.at("embed_dim").get<std::size_t>();
  cfg.hidden_dim = j.at("hidden_dim").get<std::size_t>();
  cfg.depth = j.at("depth").get<std::size_t>();
  cfg.heads = j.at("heads").get<std::size_t>();
  cfg.head_widths = j.at("head_widths").get<std::vector<std::size_t>>();
  cfg.leaky_slope = j.at("leaky_slope").get<double>();
  const std::string act = j.at("last_activation").get<std::string>();
  if (act != "elu" && act != "identity") throw std::invalid_argument("unknown activation '" + act + "'");
  cfg.last_activation = act == "elu" ? Activation::elu : Activation::identity;
  return cfg;
}

namespace {

json tensor_to_json(const Tensor& t) {
  if (t.rank() == 1) return json(std::vector<double>(t.data().begin(), t.data().end()));
  json rows = json::array();
  for (std::size_t r = 0; r < t.rows(); ++r) {
    rows.push_back(std::vector<double>(t.data().begin() + static_cast<std::ptrdiff_t>(r * t.cols()),
                                       t.data().begin() + static_cast<std::ptrdiff_t>((r + 1) * t.cols())));
  }
  return rows;
}

void tensor_from_json(const json& j, Tensor& t, const std::string& name) {
  std::vector<double> values;
  if (t.rank() == 1) {
    values = j.get<std::vector<double>>();
  } else {
    if (!j.is_array() || j.size() != t.rows()) {
      throw std::invalid_argument("parameter '" + name + "' has wrong row count");
    }
    for (const auto& row : j) {
      const auto r = row.get<std::vector<double>>();
      if (r.size() != t.cols()) throw std::invalid_argument("parameter '" + name + "' has wrong column count");
      values.insert(values.end(), r.begin(), r.end());
    }
  }
  if (values.size() != t.numel()) {
    throw std::invalid_argument("parameter '" + name + "' expects " + std::to_string(t.numel()) + " values");
  }
  std::copy(values.begin(), values.end(), t.mutable_data().begin());
}

}  // namespace

json params_to_json(const ModelParams& params) {
  json tensors = json::object();
  for (const auto& [name, t] : params.named_parameters()) tensors[name] = tensor_to_json(t);
  return {{"config", to_json(params.config)},
          {"node_feature_dim", params.node_feature_dim},
          {"edge_feature_dim", params.edge_feature_dim},
          {"parameters", tensors}};
}

ModelParams params_from_json(const json& j) {
  const NetworkConfig cfg = network_config_from_json(j.at("config"));
  ModelParams p = init_params(cfg, j.at("node_feature_dim").get<std::size_t>(),
                              j.at("edge_feature_dim").get<std::size_t>(), 0);
  const json& tensors = j.at("parameters");
  const auto named = p.named_parameters();
  if (tensors.size() != named.size()) {
    throw std::invalid_argument("checkpoint has " + std::to_string(tensors.size()) +
                                " parameters, config implies " + std::to_string(named.size()));
  }
  for (auto [name, t] : named) {
    if (!tensors.contains(name)) throw std::invalid_argument("checkpoint lacks parameter '" + name + "'");
    tensor_from_json(tensors.at(name), t, name);
  }
  return p;
}

}  // namespace dggat::model
