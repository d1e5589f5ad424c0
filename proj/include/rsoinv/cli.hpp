#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace rsoinv {

/// Process exit codes of the command-line tool.
enum ExitStatus : int {
  kExitOk = 0,
  kExitInput = 1,      // validation or input error
  kExitNumerical = 2,  // non-finite result, degenerate solver state
};

/// Runs the `rsoinv` command line. `args` includes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rsoinv
