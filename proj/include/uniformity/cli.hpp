#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace uniformity::cli {

enum ExitCode : int {
  kExitAccept = 0,
  kExitReject = 1,
  kExitUsage = 2,
  kExitRuntime = 3,
};

// Runs one invocation. `args` excludes the program name. Results go to
// `out`, diagnostics and generated seeds to `err`.
int dispatch(const std::vector<std::string>& args, std::istream& in,
             std::ostream& out, std::ostream& err);

}  // namespace uniformity::cli
