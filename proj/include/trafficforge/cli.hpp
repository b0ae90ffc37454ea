#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace trafficforge {

enum ExitCode : int { kExitOk = 0, kExitValidation = 1, kExitRuntime = 2 };

/// Runs one command line (args excludes the program name). Reports go to
/// `out`, diagnostics to `err`.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace trafficforge
