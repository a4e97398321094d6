#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace eclipsehash::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitData = 2,
  kExitInvariant = 3,
};

/// Entry point shared by the executable and the tests. `args` excludes the
/// program name. Human-readable summaries go to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace eclipsehash::cli
