#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace cvhi {

// Exit codes shared by every subcommand.
enum ExitCode : int { kExitOk = 0, kExitInput = 1, kExitNonConverged = 2, kExitVerify = 3 };

// Subcommands: solve, verify, oracle, check, gen, bench. Normal output goes
// to out, diagnostics to err.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cvhi
