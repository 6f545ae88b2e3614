#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace irse::cli {

enum ExitCode : int { kOk = 0, kUsage = 2, kNumeric = 3 };

inline constexpr const char* kConfigEnv = "IRSE_CONFIG";

/// Runs one command line (without the program name). Machine-readable JSON
/// goes to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace irse::cli
