#pragma once

#include <ostream>

namespace dstrack::cli {

// Exit codes: 0 success, 1 input/validation error, 2 internal error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 1;
inline constexpr int kExitInternal = 2;

// Environment variable naming the default config file.
inline constexpr const char* kConfigEnv = "DSTRACK_CONFIG";

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace dstrack::cli
