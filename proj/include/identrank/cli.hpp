#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace identrank::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitNumerical = 3;

// Runs the tool with argv-style arguments (args[0] is the program name).
// Never throws; failures are reported on `err` and mapped to exit codes.
int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

} // namespace identrank::cli
