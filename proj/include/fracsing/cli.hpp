#pragma once

// Command-line front end. Subcommands: ctau, solve, fit, barrier, probe,
// signchart. Tables go to --out (or the output stream) as CSV with a
// "#schema=1" header line, or as JSON.

#include <iosfwd>

#include "fracsing/error.hpp"

namespace fracsing {

enum ExitCode : int {
    kExitOk = 0,
    kExitUsage = 1,
    kExitVerdict = 2,
    kExitNumeric = 3,
    kExitRegime = 4,
};

int exit_code_for(ErrorCode code);

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace fracsing
