#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace reldata::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitProvider = 3;

/// Parses `args` (without the program name) and runs one subcommand.
/// Regular output goes to `out`; usage text, logs and errors go to `err`.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace reldata::cli
