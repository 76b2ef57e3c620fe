#include "dggat/molio/formats.hpp"

#include <charconv>
#include <cmath>
#include <optional>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "dggat/errors.hpp"
#include "dggat/molio/periodic_table.hpp"

namespace dggat::molio {

namespace {

using nlohmann::json;

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t end = text.find('\n', start);
    std::string_view line = text.substr(start, end == std::string_view::npos ? text.size() - start : end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return lines;
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> tokens(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    const std::size_t start = i;
    while (i < s.size() && s[i] != ' ' && s[i] != '\t') ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

template <typename T>
std::optional<T> parse_number(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  T value{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

// ---------------------------------------------------------------- JSONL

[[noreturn]] void jsonl_fail(std::size_t line, const std::string& what) {
  throw ParseError("line " + std::to_string(line) + ": " + what, line);
}

Molecule molecule_from_json(const json& obj, std::size_t line) {
  if (!obj.is_object()) jsonl_fail(line, "record is not a JSON object");
  for (const char* key : {"id", "atoms", "bonds", "targets"}) {
    if (!obj.contains(key)) jsonl_fail(line, std::string("missing field '") + key + "'");
  }
  Molecule m;
  if (!obj["id"].is_string()) jsonl_fail(line, "field 'id' must be a string");
  m.id = obj["id"].get<std::string>();

  const json& atoms = obj["atoms"];
  if (!atoms.is_array()) jsonl_fail(line, "field 'atoms' must be an array");
  for (std::size_t a = 0; a < atoms.size(); ++a) {
    const json& atom = atoms[a];
    const std::string where = "atoms[" + std::to_string(a) + "]";
    if (!atom.is_object() || !atom.contains("z") || !atom.contains("pos")) {
      jsonl_fail(line, where + " needs fields 'z' and 'pos'");
    }
    if (!atom["z"].is_number_integer() || atom["z"].get<long long>() < 1) {
      jsonl_fail(line, where + ".z must be a positive integer");
    }
    const json& pos = atom["pos"];
    if (!pos.is_array() || pos.size() != 3 || !pos[0].is_number() || !pos[1].is_number() ||
        !pos[2].is_number()) {
      jsonl_fail(line, where + ".pos must be an array of 3 numbers");
    }
    m.atoms.push_back(Atom{atom["z"].get<int>(), {pos[0].get<double>(), pos[1].get<double>(), pos[2].get<double>()}});
  }

  const json& bonds = obj["bonds"];
  if (!bonds.is_array()) jsonl_fail(line, "field 'bonds' must be an array");
  for (std::size_t b = 0; b < bonds.size(); ++b) {
    const json& bond = bonds[b];
    const std::string where = "bonds[" + std::to_string(b) + "]";
    if (!bond.is_array() || bond.size() != 3 || !bond[0].is_number_unsigned() ||
        !bond[1].is_number_unsigned() || !bond[2].is_number_integer()) {
      jsonl_fail(line, where + " must be [i, j, order] with non-negative integer indices");
    }
    m.bonds.push_back(Bond{bond[0].get<std::size_t>(), bond[1].get<std::size_t>(), bond[2].get<int>()});
  }

  const json& targets = obj["targets"];
  if (!targets.is_object()) jsonl_fail(line, "field 'targets' must be an object");
  for (const auto& [name, value] : targets.items()) {
    if (!value.is_number()) jsonl_fail(line, "target '" + name + "' must be a number");
    m.targets[name] = value.get<double>();
  }

  try {
    validate(m);
  } catch (const std::invalid_argument& e) {
    jsonl_fail(line, "molecule '" + m.id + "': " + e.what());
  }
  return m;
}

json molecule_to_json(const Molecule& m) {
  json atoms = json::array();
  for (const Atom& a : m.atoms) {
    atoms.push_back({{"z", a.atomic_number}, {"pos", {a.position[0], a.position[1], a.position[2]}}});
  }
  json bonds = json::array();
  for (const Bond& b : m.bonds) bonds.push_back({b.i, b.j, b.order});
  json targets = json::object();
  for (const auto& [name, value] : m.targets) targets[name] = value;
  return {{"id", m.id}, {"atoms", atoms}, {"bonds", bonds}, {"targets", targets}};
}

// ---------------------------------------------------------------- SDF

class SdfReader {
 public:
  explicit SdfReader(std::string_view text) : lines_(split_lines(text)) {}

  std::vector<Molecule> read_all() {
    std::vector<Molecule> out;
    while (skip_blank_tail()) {
      out.push_back(read_record(out.size()));
    }
    return out;
  }

 private:
  // True while a further record starts at or after the cursor.
  bool skip_blank_tail() {
    for (std::size_t k = pos_; k < lines_.size(); ++k) {
      if (!trim(lines_[k]).empty()) return true;
    }
    return false;
  }

  [[noreturn]] void fail(std::size_t record, std::size_t line_index, const std::string& what) const {
    const std::size_t line = line_index + 1;
    throw ParseError("record " + std::to_string(record) + ", line " + std::to_string(line) + ": " + what,
                     line, record);
  }

  std::string_view next_line(std::size_t record, const char* expected) {
    // At end of input the reported line is the one that should have followed the last line.
    const bool at_end = pos_ >= lines_.size() || (pos_ + 1 == lines_.size() && lines_[pos_].empty());
    if (at_end || trim(lines_[pos_]) == "$$$$") {
      fail(record, pos_, std::string("truncated record, expected ") + expected);
    }
    return lines_[pos_++];
  }

  // Tries fixed three-character columns first, then whitespace tokens.
  std::optional<std::vector<long>> int_fields(std::string_view line, std::size_t count) const {
    if (line.size() >= 3 * count) {
      std::vector<long> v;
      for (std::size_t c = 0; c < count; ++c) {
        auto x = parse_number<long>(line.substr(3 * c, 3));
        if (!x) break;
        v.push_back(*x);
      }
      if (v.size() == count) return v;
    }
    const auto tok = tokens(line);
    if (tok.size() < count) return std::nullopt;
    std::vector<long> v;
    for (std::size_t c = 0; c < count; ++c) {
      auto x = parse_number<long>(tok[c]);
      if (!x) return std::nullopt;
      v.push_back(*x);
    }
    return v;
  }

  Molecule read_record(std::size_t record) {
    Molecule m;
    const std::size_t title_index = pos_;
    m.id = std::string(trim(next_line(record, "title line")));
    if (m.id.empty()) m.id = "record" + std::to_string(record);
    next_line(record, "program line");
    next_line(record, "comment line");

    const std::size_t counts_index = pos_;
    const std::string_view counts_line = next_line(record, "counts line");
    if (counts_line.find("V3000") != std::string_view::npos) {
      fail(record, counts_index, "V3000 molblocks are not supported");
    }
    const auto counts = int_fields(counts_line, 2);
    if (!counts || (*counts)[0] < 1 || (*counts)[1] < 0) {
      fail(record, counts_index, "bad counts line '" + std::string(counts_line) + "'");
    }
    const auto n_atoms = static_cast<std::size_t>((*counts)[0]);
    const auto n_bonds = static_cast<std::size_t>((*counts)[1]);

    for (std::size_t a = 0; a < n_atoms; ++a) {
      const std::size_t index = pos_;
      const std::string_view line = next_line(record, "atom line");
      const auto tok = tokens(line);
      std::optional<double> x, y, z;
      std::string_view symbol;
      if (tok.size() >= 4) {
        x = parse_number<double>(tok[0]);
        y = parse_number<double>(tok[1]);
        z = parse_number<double>(tok[2]);
        symbol = tok[3];
      }
      if ((!x || !y || !z) && line.size() >= 34) {
        x = parse_number<double>(line.substr(0, 10));
        y = parse_number<double>(line.substr(10, 10));
        z = parse_number<double>(line.substr(20, 10));
        symbol = trim(line.substr(31, 3));
      }
      if (!x || !y || !z) fail(record, index, "bad atom line '" + std::string(line) + "'");
      const auto number = atomic_number(symbol);
      if (!number) fail(record, index, "unknown element symbol '" + std::string(symbol) + "'");
      m.atoms.push_back(Atom{*number, {*x, *y, *z}});
    }

    for (std::size_t b = 0; b < n_bonds; ++b) {
      const std::size_t index = pos_;
      const std::string_view line = next_line(record, "bond line");
      const auto f = int_fields(line, 3);
      if (!f) fail(record, index, "bad bond line '" + std::string(line) + "'");
      const long i = (*f)[0], j = (*f)[1], order = (*f)[2];
      if (i < 1 || j < 1 || static_cast<std::size_t>(i) > n_atoms || static_cast<std::size_t>(j) > n_atoms) {
        fail(record, index, "bond atom index out of range 1.." + std::to_string(n_atoms));
      }
      if (order < 1 || order > 4) fail(record, index, "unsupported bond order " + std::to_string(order));
      m.bonds.push_back(Bond{static_cast<std::size_t>(i - 1), static_cast<std::size_t>(j - 1), static_cast<int>(order)});
    }

    // Properties block up to "M  END".
    while (true) {
      const std::string_view line = next_line(record, "'M  END'");
      if (line.rfind("M  END", 0) == 0) break;
    }

    // Data items up to "$$$$" or end of input.
    while (pos_ < lines_.size()) {
      const std::string_view line = lines_[pos_++];
      if (trim(line) == "$$$$") break;
      if (line.empty() || line.front() != '>') continue;
      const auto open = line.find('<');
      const auto close = line.find('>', open == std::string_view::npos ? 1 : open);
      if (open == std::string_view::npos || close == std::string_view::npos) continue;
      const std::string name(line.substr(open + 1, close - open - 1));
      if (pos_ < lines_.size() && trim(lines_[pos_]) != "$$$$") {
        if (const auto value = parse_number<double>(lines_[pos_])) m.targets[name] = *value;
        ++pos_;
      }
    }

    try {
      validate(m);
    } catch (const std::invalid_argument& e) {
      fail(record, title_index, e.what());
    }
    return m;
  }

  std::vector<std::string_view> lines_;
  std::size_t pos_ = 0;
};

}  // namespace

Dataset parse_jsonl(std::string_view text) {
  std::vector<Molecule> molecules;
  const auto lines = split_lines(text);
  for (std::size_t k = 0; k < lines.size(); ++k) {
    if (trim(lines[k]).empty()) continue;
    json obj;
    try {
      obj = json::parse(lines[k]);
    } catch (const json::parse_error& e) {
      jsonl_fail(k + 1, std::string("malformed JSON: ") + e.what());
    }
    molecules.push_back(molecule_from_json(obj, k + 1));
  }
  if (molecules.empty()) throw ParseError("no records", 0);
  return make_dataset(std::move(molecules));
}

std::string to_jsonl(const Dataset& d) {
  std::string out;
  for (const Molecule& m : d.molecules) {
    out += molecule_to_json(m).dump();
    out += '\n';
  }
  return out;
}

std::vector<Molecule> parse_sdf_v2000(std::string_view text) {
  return SdfReader(text).read_all();
}

}  // namespace dggat::molio
