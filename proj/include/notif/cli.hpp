#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

namespace notif {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,         // bad flags, unreadable or malformed input
  kExitNumerical = 2,     // infeasible instance or solver non-convergence
  kExitVerification = 3,  // an equilibrium check failed
};

// Default output root when --out is absent; falls back to ./out.
inline constexpr const char* kOutputRootEnv = "NOTIF_OUT";

// Runs `notifctl <args...>` (args exclude the program name) and returns the
// exit code. Progress and errors go to the given streams.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

std::string sha256_hex(const std::filesystem::path& file);

}  // namespace notif
