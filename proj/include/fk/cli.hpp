#pragma once

namespace fk {

/// Exit codes of the command-line runner.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumeric = 3;

/// Entry point of `fkrun`: parses flags, loads the config, runs one
/// subcommand and writes summary.json plus CSV artifacts to --out.
int run_cli(int argc, const char* const* argv);

}  // namespace fk
