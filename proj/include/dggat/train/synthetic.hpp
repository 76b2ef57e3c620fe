#pragma once

#include <cstddef>
#include <cstdint>

#include "dggat/molio/molecule.hpp"

namespace dggat::train {

/// Random connected molecule-like graphs whose target depends on the
/// distances of all pairs up to three bonds apart.
struct SyntheticSpec {
  std::size_t n_molecules = 300;
  std::size_t min_atoms = 8;
  std::size_t max_atoms = 10;
  std::uint64_t seed = 0;

  bool operator==(const SyntheticSpec&) const = default;
};

inline constexpr double kSyntheticCutoff = 10.0;
inline constexpr const char* kSyntheticTarget = "y";

/// Sum of encode_distance(d_ij, 10 A) over every pair with bond-graph
/// shortest-path length at most 3.
double synthetic_target(const molio::Molecule& m);

/// Random spanning tree plus up to two ring-closing bonds per molecule, atoms
/// drawn from {H, C, N, O}, positions grown from the tree with random bond
/// directions and lengths. The target is stored under "y".
molio::Dataset gen_synthetic(const SyntheticSpec& spec);

}  // namespace dggat::train
