#include "dggat/dggr/dg_graph.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numbers>
#include <string>

#include "dggat/errors.hpp"

namespace dggat::dggr {

std::map<UnorderedPair, int> expand_neighbors(std::span<const UnorderedPair> bonds,
                                              std::size_t n_atoms, int max_order) {
  if (max_order < 1 || max_order > 3) {
    throw ContractViolation("max_order must be 1, 2 or 3, got " + std::to_string(max_order));
  }
  std::vector<std::vector<std::size_t>> adjacency(n_atoms);
  for (const auto& [i, j] : bonds) {
    if (i >= n_atoms || j >= n_atoms || i == j) {
      throw ContractViolation("invalid bond (" + std::to_string(i) + ", " + std::to_string(j) + ")");
    }
    adjacency[i].push_back(j);
    adjacency[j].push_back(i);
  }

  std::map<UnorderedPair, int> orders;
  std::vector<int> depth(n_atoms);
  for (std::size_t source = 0; source < n_atoms; ++source) {
    std::fill(depth.begin(), depth.end(), -1);
    depth[source] = 0;
    std::deque<std::size_t> queue{source};
    while (!queue.empty()) {
      const std::size_t u = queue.front();
      queue.pop_front();
      if (depth[u] == max_order) continue;
      for (std::size_t v : adjacency[u]) {
        if (depth[v] >= 0) continue;
        depth[v] = depth[u] + 1;
        queue.push_back(v);
        if (source < v) orders.emplace(UnorderedPair{source, v}, depth[v]);
      }
    }
  }
  return orders;
}

std::vector<UnorderedPair> bond_pairs(const molio::Molecule& m) {
  std::vector<UnorderedPair> pairs;
  pairs.reserve(m.bonds.size());
  for (const auto& b : m.bonds) pairs.emplace_back(std::min(b.i, b.j), std::max(b.i, b.j));
  return pairs;
}

double encode_distance(double d, double d_cutoff) {
  if (!(d >= 0.0)) throw ContractViolation("encode_distance: negative distance " + std::to_string(d));
  if (!(d_cutoff > 0.0)) throw ContractViolation("encode_distance: cutoff must be positive");
  if (d >= d_cutoff) return 0.0;
  return 0.5 * (std::cos(std::numbers::pi * d / d_cutoff) + 1.0);
}

double euclidean_distance(const std::array<double, 3>& a, const std::array<double, 3>& b) {
  const double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

DGGraph build_dg_graph(const molio::Molecule& m, Matrix features, const DGConfig& cfg) {
  if (features.rows != m.atoms.size()) {
    throw DimensionError("build_dg_graph: " + std::to_string(features.rows) + " feature rows for " +
                         std::to_string(m.atoms.size()) + " atoms");
  }
  const auto bonds = bond_pairs(m);
  const auto pairs = expand_neighbors(bonds, m.atoms.size(), cfg.max_order);

  DGGraph g;
  g.node_features = std::move(features);
  g.edge_feature_dim = cfg.edge_feature_dim();

  const auto make_edge = [&](std::size_t src, std::size_t dst, int order) {
    DGEdge e;
    e.src = src;
    e.dst = dst;
    e.order = static_cast<NeighborOrder>(order);
    e.distance = src == dst ? 0.0 : euclidean_distance(m.atoms[src].position, m.atoms[dst].position);
    e.feature.assign(g.edge_feature_dim, 0.0);
    e.feature[0] = encode_distance(e.distance, cfg.d_cutoff);
    if (cfg.include_order_onehot && order > 0) e.feature[static_cast<std::size_t>(order)] = 1.0;
    return e;
  };

  g.edges.reserve(2 * pairs.size() + m.atoms.size());
  for (const auto& [pair, order] : pairs) {
    g.edges.push_back(make_edge(pair.first, pair.second, order));
    DGEdge reverse = g.edges.back();
    std::swap(reverse.src, reverse.dst);
    g.edges.push_back(std::move(reverse));
  }
  for (std::size_t i = 0; i < m.atoms.size(); ++i) g.edges.push_back(make_edge(i, i, 0));
  std::sort(g.edges.begin(), g.edges.end(), [](const DGEdge& a, const DGEdge& b) {
    return std::pair(a.src, a.dst) < std::pair(b.src, b.dst);
  });
  return g;
}

std::array<std::size_t, 4> count_pairs(const DGGraph& g) {
  std::array<std::size_t, 4> counts{};
  for (const auto& e : g.edges) {
    if (e.src < e.dst) ++counts[static_cast<std::size_t>(e.order)];
  }
  return counts;
}

}  // namespace dggat::dggr
