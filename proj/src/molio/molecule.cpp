#include "dggat/molio/molecule.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <utility>

#include "dggat/errors.hpp"
#include "dggat/molio/periodic_table.hpp"

namespace dggat::molio {

void validate(const Molecule& m) {
  if (m.atoms.empty()) throw std::invalid_argument("molecule has no atoms");
  for (std::size_t a = 0; a < m.atoms.size(); ++a) {
    const Atom& atom = m.atoms[a];
    if (atom.atomic_number < 1) {
      throw std::invalid_argument("atom " + std::to_string(a) + " has atomic number " +
                                  std::to_string(atom.atomic_number));
    }
    for (double c : atom.position) {
      if (!std::isfinite(c)) {
        throw std::invalid_argument("atom " + std::to_string(a) + " has a non-finite coordinate");
      }
    }
  }
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (const Bond& b : m.bonds) {
    if (b.i >= m.atoms.size() || b.j >= m.atoms.size()) {
      throw std::invalid_argument("bond (" + std::to_string(b.i) + ", " + std::to_string(b.j) +
                                  ") out of range for " + std::to_string(m.atoms.size()) +
                                  " atoms");
    }
    if (b.i == b.j) throw std::invalid_argument("bond joins atom " + std::to_string(b.i) + " to itself");
    if (b.order < 1 || b.order > 4) {
      throw std::invalid_argument("bond order " + std::to_string(b.order) + " not in 1..4");
    }
    if (!seen.emplace(std::min(b.i, b.j), std::max(b.i, b.j)).second) {
      throw std::invalid_argument("duplicate bond (" + std::to_string(b.i) + ", " +
                                  std::to_string(b.j) + ")");
    }
  }
  for (const auto& [name, value] : m.targets) {
    if (!std::isfinite(value)) throw std::invalid_argument("target '" + name + "' is not finite");
  }
}

Dataset make_dataset(std::vector<Molecule> molecules) {
  Dataset d;
  std::set<int> vocab;
  for (const Molecule& m : molecules) {
    for (const Atom& a : m.atoms) vocab.insert(a.atomic_number);
  }
  if (!molecules.empty()) {
    for (const auto& [name, value] : molecules.front().targets) {
      const bool everywhere = std::all_of(molecules.begin(), molecules.end(),
                                          [&](const Molecule& m) { return m.targets.contains(name); });
      if (everywhere) d.target_names.push_back(name);
    }
  }
  d.element_vocab.assign(vocab.begin(), vocab.end());
  d.molecules = std::move(molecules);
  return d;
}

Matrix featurize_nodes(const Molecule& m, std::span<const int> vocab) {
  Matrix x(m.atoms.size(), vocab.size());
  for (std::size_t a = 0; a < m.atoms.size(); ++a) {
    const int z = m.atoms[a].atomic_number;
    const auto it = std::find(vocab.begin(), vocab.end(), z);
    if (it == vocab.end()) {
      throw FeaturizationError("molecule '" + m.id + "': element " +
                               std::string(element_symbol(z)) + " (Z=" + std::to_string(z) +
                               ") is not in the element vocabulary");
    }
    x(a, static_cast<std::size_t>(it - vocab.begin())) = 1.0;
  }
  return x;
}

}  // namespace dggat::molio
