#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ei {

enum ExitCode : int {
    kExitOk = 0,
    kExitUsage = 1,
    kExitData = 2,
    kExitTraining = 3,
};

/// Entry point of the `ei` tool. `args` excludes the program name.
/// Subcommands: synth, evaluate, train, predict, interpret.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ei
