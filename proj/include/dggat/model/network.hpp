#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "dggat/dggr/dg_graph.hpp"
#include "dggat/numerics/tensor.hpp"

namespace dggat::model {

using numerics::Tensor;

enum class ConvKind { gatv2, gcn };
enum class Activation { elu, identity };

struct NetworkConfig {
  ConvKind conv = ConvKind::gatv2;
  std::size_t embed_dim = 64;
  std::size_t hidden_dim = 64;  // output width of every conv layer
  std::size_t depth = 3;        // number of conv layers
  std::size_t heads = 4;        // GATv2 only; hidden_dim must be divisible by heads
  std::vector<std::size_t> head_widths{32};
  double leaky_slope = 0.2;
  Activation last_activation = Activation::elu;  // sigma after the final conv layer

  bool operator==(const NetworkConfig&) const = default;
};

/// Throws ContractViolation naming the first inconsistent field.
void validate(const NetworkConfig& cfg);

struct Linear {
  Tensor weight;  // [in x out]
  Tensor bias;    // [out]
};

/// One GATv2 head. The score projection over [x_dst || x_src || e] is held as
/// three row blocks of the same matrix.
struct AttentionHead {
  Tensor w_dst;    // [F_in x F_hid]
  Tensor w_src;    // [F_in x F_hid]
  Tensor w_edge;   // [F_edge x F_hid]
  Tensor a;        // [F_hid x 1]
  Tensor w_value;  // [F_in x F_out]
};

struct GATv2Layer {
  std::vector<AttentionHead> heads;
  Tensor bias;  // [out_width]
  double leaky_slope = 0.2;
  bool concat_heads = true;

  std::size_t head_width() const { return heads.front().w_value.cols(); }
  std::size_t out_width() const { return concat_heads ? heads.size() * head_width() : head_width(); }
};

struct GCNLayer {
  Tensor weight;  // [F_in x F_out]
  Tensor bias;    // [F_out]
};

struct ModelParams {
  NetworkConfig config;
  std::size_t node_feature_dim = 0;
  std::size_t edge_feature_dim = 0;
  Linear embed;
  std::vector<GATv2Layer> gat_layers;
  std::vector<GCNLayer> gcn_layers;
  std::vector<Linear> head;  // MLP; last layer maps to a single output

  /// Every trainable tensor with a stable dotted name, in a fixed order.
  std::vector<std::pair<std::string, Tensor>> named_parameters() const;
  std::vector<Tensor> parameters() const;
  std::size_t parameter_count() const;
  /// Deep copy: the result shares no storage with *this.
  ModelParams clone() const;
};

/// Glorot-uniform weights and zero biases drawn from a seeded generator.
ModelParams init_params(const NetworkConfig& cfg, std::size_t node_feature_dim,
                        std::size_t edge_feature_dim, std::uint64_t seed);

/// Graph inputs as tensors, built once per molecule.
struct GraphTensors {
  std::size_t num_nodes = 0;
  Tensor node_features;  // [N x d]
  Tensor edge_features;  // [E x F_edge]
  std::vector<std::size_t> src;
  std::vector<std::size_t> dst;
  // Bond edges plus self-loops with symmetric degree normalization.
  std::vector<std::size_t> gcn_src;
  std::vector<std::size_t> gcn_dst;
  Tensor gcn_weight;  // [E_gcn]
  std::vector<std::size_t> readout_group;  // all zeros, one per node
};

GraphTensors prepare_graph(const dggr::DGGraph& g);

/// Per-edge score a^T LeakyReLU(W [x_dst || x_src || e]), shape [E x 1].
Tensor gatv2_scores(const Tensor& x, const GraphTensors& g, const AttentionHead& head,
                    double leaky_slope);

/// Attention coefficients per head, each [E x 1], normalized over the incoming
/// edges (self-loop included) of every destination node.
std::vector<Tensor> gatv2_attention(const Tensor& x, const GraphTensors& g, const GATv2Layer& layer);

Tensor gatv2_forward(const Tensor& x, const GraphTensors& g, const GATv2Layer& layer,
                     Activation activation);

/// D^-1/2 (A + I) D^-1/2 X W + b over bond edges only.
Tensor gcn_forward(const Tensor& x, const GraphTensors& g, const GCNLayer& layer,
                   Activation activation);

/// Embedding, conv stack, mean readout and MLP head. Returns a [1 x 1] tensor
/// in standardized target units.
Tensor forward_network(const GraphTensors& g, const ModelParams& params);

/// forward_network without recording gradients.
double predict(const GraphTensors& g, const ModelParams& params);

nlohmann::json to_json(const NetworkConfig& cfg);
NetworkConfig network_config_from_json(const nlohmann::json& j);

/// {"config", "node_feature_dim", "edge_feature_dim", "parameters": {name: nested arrays}}
nlohmann::json params_to_json(const ModelParams& params);
ModelParams params_from_json(const nlohmann::json& j);

}  // namespace dggat::model
