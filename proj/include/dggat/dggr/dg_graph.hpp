#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include "dggat/matrix.hpp"
#include "dggat/molio/molecule.hpp"

namespace dggat::dggr {

/// Bond-graph shortest-path length between the endpoints of an edge.
/// `self` tags the self-loop every node carries.
enum class NeighborOrder : int { self = 0, connected = 1, angle = 2, dihedral = 3 };

struct DGEdge {
  std::size_t src = 0;
  std::size_t dst = 0;
  NeighborOrder order = NeighborOrder::self;
  double distance = 0.0;        // angstrom
  std::vector<double> feature;  // encoded distance, then optional order one-hot
};

struct DGConfig {
  int max_order = 3;  // 1, 2 or 3
  double d_cutoff = 10.0;
  bool include_order_onehot = true;

  std::size_t edge_feature_dim() const { return include_order_onehot ? 4 : 1; }
};

struct DGGraph {
  Matrix node_features;
  std::vector<DGEdge> edges;  // sorted by (src, dst); both directions plus self-loops
  std::size_t edge_feature_dim = 0;

  std::size_t num_nodes() const { return node_features.rows; }
};

using UnorderedPair = std::pair<std::size_t, std::size_t>;  // first < second

/// Every pair (i < j) whose bond-graph shortest-path length is at most
/// `max_order`, mapped to that length. Breadth-first search from each node,
/// truncated at depth `max_order`.
std::map<UnorderedPair, int> expand_neighbors(std::span<const UnorderedPair> bonds,
                                              std::size_t n_atoms, int max_order);

/// Bond index pairs of a molecule, normalized to (min, max).
std::vector<UnorderedPair> bond_pairs(const molio::Molecule& m);

/// Cosine distance encoding 0.5 * (cos(pi * d / cutoff) + 1), falling from 1 at
/// d = 0 to 0 at d >= cutoff.
double encode_distance(double d, double d_cutoff);

double euclidean_distance(const std::array<double, 3>& a, const std::array<double, 3>& b);

DGGraph build_dg_graph(const molio::Molecule& m, Matrix features, const DGConfig& cfg);

/// Number of unordered pairs per neighbor order (index 1..3; index 0 unused).
std::array<std::size_t, 4> count_pairs(const DGGraph& g);

}  // namespace dggat::dggr
