#pragma once

namespace kzk::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitRuntime = 2;

/// Parses the command line and runs one subcommand; returns the exit code.
int run(int argc, char** argv);

}  // namespace kzk::cli
