#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace rangecap {

enum ExitCode : int { kExitOk = 0, kExitValidation = 1, kExitNumerical = 2, kExitIo = 3, kExitInterrupted = 130 };

/// Runs one command line (args excludes the program name). Human-readable
/// results go to `out`, diagnostics to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rangecap
