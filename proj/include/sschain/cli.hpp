#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace sschain {

/// Exit statuses of the command-line tool.
enum ExitCode : int {
  exit_ok = 0,
  exit_other = 1,
  exit_validation = 2,
  exit_budget = 3,
  exit_stability = 4,
};

/// Runs the `sschain` command line with `args` (program name excluded).
/// Results go to files named by --out or to `out`; diagnostics go to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err);

}  // namespace sschain
