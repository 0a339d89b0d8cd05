#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace corpusforge::cli {

// Exit codes: 0 success, 1 runtime or I/O failure, 2 invalid configuration.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;

// Runs one command line (args[0] is the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Configures the stderr logger from CORPUSFORGE_LOG (error|warn|info|debug).
void init_logging();

}  // namespace corpusforge::cli
