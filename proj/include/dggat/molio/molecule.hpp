#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "dggat/matrix.hpp"

namespace dggat::molio {

struct Atom {
  int atomic_number = 0;
  std::array<double, 3> position{};  // angstrom

  bool operator==(const Atom&) const = default;
};

struct Bond {
  std::size_t i = 0;
  std::size_t j = 0;
  int order = 1;  // 1, 2, 3 or 4 (aromatic)

  bool operator==(const Bond&) const = default;
};

struct Molecule {
  std::string id;
  std::vector<Atom> atoms;
  std::vector<Bond> bonds;
  std::map<std::string, double> targets;

  bool operator==(const Molecule&) const = default;
};

struct Dataset {
  std::vector<Molecule> molecules;
  std::vector<std::string> target_names;  // targets present in every molecule
  std::vector<int> element_vocab;         // sorted atomic numbers

  bool operator==(const Dataset&) const = default;
};

/// Throws std::invalid_argument describing the first broken molecule invariant.
void validate(const Molecule& m);

/// Builds a dataset and derives its target names and element vocabulary.
Dataset make_dataset(std::vector<Molecule> molecules);

/// One-hot atomic number per atom over `vocab`, shape [atoms x vocab].
Matrix featurize_nodes(const Molecule& m, std::span<const int> vocab);

}  // namespace dggat::molio
