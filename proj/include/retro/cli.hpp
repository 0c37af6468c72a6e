#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace retro {

enum ExitCode {
  kExitOk = 0,
  kExitUsage = 1,
  kExitIo = 2,
  kExitEmpty = 3,
  kExitInfeasible = 4,
  kExitInvariant = 5,
  kExitNonFinite = 6,
};

// Overrides --out for every subcommand when set.
inline constexpr const char* kOutputDirEnv = "RETRO_OUTPUT_DIR";

// args[0] is the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace retro
