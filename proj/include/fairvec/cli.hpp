#pragma once

#include <string>
#include <vector>

namespace fairvec {

// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitComputation = 1;
inline constexpr int kExitInput = 2;

// Entry point for the `fairvec` tool: audit, debias, analogies, sweep,
// convert. `args` excludes the program name.
int run_cli(const std::vector<std::string>& args);

}  // namespace fairvec
