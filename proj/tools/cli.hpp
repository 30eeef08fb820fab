#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace weakoie::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitNumeric = 3;

inline constexpr const char* kScorerUrlEnv = "WEAKOIE_SCORER_URL";

// Runs one command line (args[0] is the program name) and returns the exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace weakoie::cli
