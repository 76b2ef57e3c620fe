#include "dggat/train/synthetic.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <set>

#include "dggat/dggr/dg_graph.hpp"
#include "dggat/errors.hpp"
#include "dggat/random.hpp"

namespace dggat::train {

namespace {

// Element by final degree, valence-like: 1 H, 2 O, 3 N, 4 C.
constexpr std::array<int, 5> kElementByDegree = {6, 1, 8, 7, 6};
constexpr std::size_t kMaxDegree = 4;
constexpr double kMinBond = 1.0;
constexpr double kMaxBond = 1.8;
constexpr double kMinSeparation = 1.0;
constexpr double kRingClosureReach = 2.8;

std::array<double, 3> random_direction(Rng& rng) {
  const double z = uniform(rng, -1.0, 1.0);
  const double phi = uniform(rng, 0.0, 2.0 * std::numbers::pi);
  const double r = std::sqrt(1.0 - z * z);
  return {r * std::cos(phi), r * std::sin(phi), z};
}

molio::Molecule random_molecule(Rng& rng, std::size_t n_atoms, std::size_t index) {
  molio::Molecule m;
  m.id = "synthetic-" + std::to_string(index);
  m.atoms.push_back({0, {0.0, 0.0, 0.0}});
  std::vector<std::size_t> degree(n_atoms, 0);
  std::set<std::pair<std::size_t, std::size_t>> bonded;
  for (std::size_t a = 1; a < n_atoms; ++a) {
    std::vector<std::size_t> open;
    for (std::size_t k = 0; k < a; ++k) {
      if (degree[k] < kMaxDegree) open.push_back(k);
    }
    const std::size_t parent = open[uniform_index(rng, open.size())];
    std::array<double, 3> pos{};
    for (int attempt = 0; attempt < 32; ++attempt) {
      const auto dir = random_direction(rng);
      const double len = uniform(rng, kMinBond, kMaxBond);
      const auto& p = m.atoms[parent].position;
      pos = {p[0] + len * dir[0], p[1] + len * dir[1], p[2] + len * dir[2]};
      bool clear = true;
      for (const auto& other : m.atoms) {
        if (dggr::euclidean_distance(other.position, pos) < kMinSeparation) {
          clear = false;
          break;
        }
      }
      if (clear) break;
    }
    m.atoms.push_back({0, pos});
    m.bonds.push_back({parent, a, 1});
    ++degree[parent];
    ++degree[a];
    bonded.emplace(parent, a);
  }

  const std::size_t extra = uniform_index(rng, 3);
  for (std::size_t k = 0; k < extra; ++k) {
    std::vector<std::pair<std::size_t, std::size_t>> candidates;
    for (std::size_t i = 0; i < n_atoms; ++i)
      for (std::size_t j = i + 1; j < n_atoms; ++j) {
        if (bonded.contains({i, j}) || degree[i] >= kMaxDegree || degree[j] >= kMaxDegree) continue;
        if (dggr::euclidean_distance(m.atoms[i].position, m.atoms[j].position) < kRingClosureReach) {
          candidates.emplace_back(i, j);
        }
      }
    if (candidates.empty()) break;
    const auto [i, j] = candidates[uniform_index(rng, candidates.size())];
    m.bonds.push_back({i, j, 1});
    bonded.emplace(i, j);
    ++degree[i];
    ++degree[j];
  }
  for (std::size_t a = 0; a < n_atoms; ++a) m.atoms[a].atomic_number = kElementByDegree[degree[a]];
  m.targets[kSyntheticTarget] = synthetic_target(m);
  return m;
}

}  // namespace

double synthetic_target(const molio::Molecule& m) {
  const auto bonds = dggr::bond_pairs(m);
  const auto pairs = dggr::expand_neighbors(bonds, m.atoms.size(), 3);
  double y = 0.0;
  for (const auto& [pair, order] : pairs) {
    const double d = dggr::euclidean_distance(m.atoms[pair.first].position, m.atoms[pair.second].position);
    y += dggr::encode_distance(d, kSyntheticCutoff);
  }
  return y;
}

molio::Dataset gen_synthetic(const SyntheticSpec& spec) {
  if (spec.min_atoms < 2 || spec.max_atoms < spec.min_atoms) {
    throw ContractViolation("synthetic spec: need 2 <= min_atoms <= max_atoms");
  }
  if (spec.n_molecules == 0) throw ContractViolation("synthetic spec: n_molecules must be positive");
  Rng rng(spec.seed);
  std::vector<molio::Molecule> molecules;
  molecules.reserve(spec.n_molecules);
  for (std::size_t k = 0; k < spec.n_molecules; ++k) {
    const std::size_t n = spec.min_atoms + uniform_index(rng, spec.max_atoms - spec.min_atoms + 1);
    molecules.push_back(random_molecule(rng, n, k));
  }
  return molio::make_dataset(std::move(molecules));
}

}  // namespace dggat::train
