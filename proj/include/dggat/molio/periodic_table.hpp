#pragma once

#include <optional>
#include <string_view>

namespace dggat::molio {

/// Atomic number for an element symbol (case-sensitive, e.g. "Cl"), or nullopt.
std::optional<int> atomic_number(std::string_view symbol);

/// Element symbol for atomic numbers 1..118; "?" otherwise.
std::string_view element_symbol(int atomic_number);

}  // namespace dggat::molio
