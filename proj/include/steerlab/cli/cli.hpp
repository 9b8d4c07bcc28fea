#pragma once

#include <exception>
#include <ostream>
#include <string>
#include <vector>

namespace steerlab::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitOther = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitIo = 3;
inline constexpr int kExitNumeric = 4;

/// Worker threads for conv forward passes; unset means 1.
inline constexpr const char* kThreadsEnv = "STEERLAB_THREADS";

/// Exit code for an exception escaping a command.
int exitCodeFor(const std::exception& e);

/// Parses and runs one subcommand. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace steerlab::cli
