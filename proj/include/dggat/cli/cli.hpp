#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace dggat::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitInput = 2;    // unreadable input, parse or config error
inline constexpr int kExitNumeric = 3;  // training diverged

/// Runs one subcommand. `args` excludes the program name. Results go to `out`,
/// diagnostics to `err`; the return value is the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dggat::cli
