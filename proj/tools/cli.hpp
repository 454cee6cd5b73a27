#pragma once
// The neumatc command line: generate | train | eval | bench | inspect.

#include <iosfwd>
#include <string>
#include <vector>

namespace neumatc::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitNumerical = 3;

/// Runs one command. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace neumatc::cli
