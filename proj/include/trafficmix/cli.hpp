#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace trafficmix {

inline constexpr const char* kToolVersion = "0.1.0";

enum ExitCode : int {
  kExitOk = 0,
  kExitValidation = 2,
  kExitNotConverged = 3,
  kExitNumericalFailure = 4,
};

// Entry point of the command-line tool. args excludes the program name.
// Results go to `out`, diagnostics to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace trafficmix
