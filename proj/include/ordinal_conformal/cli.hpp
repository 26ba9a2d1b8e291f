#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace ocp::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

/// Runs one command line (without the program name). Diagnostics go to `err`
/// as a single line; results that are not written to files go to `out`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ocp::cli
