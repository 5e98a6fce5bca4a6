#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace topodsgd::tools {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 2,      // bad arguments or invalid input
  kExitNumerical = 3,  // solver or verification failure
  kExitIo = 4,
};

// Runs one command line (args excludes the program name). Results go to
// `out` unless --out is given; diagnostics go to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace topodsgd::tools
