#pragma once

#include <iostream>
#include <string>
#include <vector>

namespace alertlab {

// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInputError = 1;   // validation / parse errors
inline constexpr int kExitRuntimeError = 2;
inline constexpr int kExitAssertFailed = 3;  // --assert expression did not hold

/// Runs the alertlab command line (args excludes the program name).
/// Streams are injectable so tests can capture output.
int run_cli(const std::vector<std::string>& args, std::ostream& out = std::cout,
            std::ostream& err = std::cerr);

}  // namespace alertlab
