#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace streamlearn {

// Exit codes. Usage and data errors follow sysexits.h.
inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitNoFeasible = 2;
inline constexpr int kExitUsage = 64;
inline constexpr int kExitConfig = 65;
inline constexpr int kExitNoInput = 66;

/// Environment variable naming the default output directory.
inline constexpr const char* kOutDirEnv = "STREAMLEARN_OUT_DIR";

/// Runs one invocation. args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace streamlearn
