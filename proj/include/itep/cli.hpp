#pragma once

#include <string>
#include <vector>

namespace itep::cli {

// Exit codes.
inline constexpr int kPass = 0;
inline constexpr int kFail = 1;    // numerical assertion or computation failure
inline constexpr int kConfig = 2;  // rejected configuration or usage

// Runs one subcommand; args excludes the program name.
int run(const std::vector<std::string>& args);
int run(int argc, char** argv);

}  // namespace itep::cli
