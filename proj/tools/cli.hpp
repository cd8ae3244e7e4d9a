// Command-line front end. run() takes the arguments after the program name
// and returns the process exit code:
//   0 success / affirmative verdict, 1 negative verdict,
//   2 I/O or parse error, 3 invalid configuration.
#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace hdse::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitNegative = 1;
inline constexpr int kExitIo = 2;
inline constexpr int kExitConfig = 3;

// Environment variable holding the default for --threads.
inline constexpr const char* kThreadsEnv = "HDSE_THREADS";

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace hdse::cli
