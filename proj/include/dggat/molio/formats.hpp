#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "dggat/molio/molecule.hpp"

namespace dggat::molio {

/// Parses the native JSON-lines format, one molecule object per nonempty line:
///   {"id": str, "atoms": [{"z": int, "pos": [x, y, z]}, ...],
///    "bonds": [[i, j, order], ...], "targets": {name: number, ...}}
/// Throws ParseError carrying the 1-based line number.
Dataset parse_jsonl(std::string_view text);

/// Canonical JSONL serialization; parse_jsonl(to_jsonl(d)) == d.
std::string to_jsonl(const Dataset& d);

/// Parses one or more SDF V2000 records separated by "$$$$". Numeric data
/// items ("> <name>" followed by a value line) become targets.
/// Throws ParseError carrying the 0-based record index and 1-based line number.
std::vector<Molecule> parse_sdf_v2000(std::string_view text);

}  // namespace dggat::molio
