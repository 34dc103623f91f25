#pragma once

#include <string>
#include <vector>

#include "impress/error.hpp"

namespace impress::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitOther = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitModel = 4;
inline constexpr int kExitDiverged = 5;

int exit_code(ErrorKind kind);

/// Runs one invocation; argv[0] is the program name. Errors are reported on
/// stderr as `error: <category>: <message>`.
int run(const std::vector<std::string>& args);

}  // namespace impress::cli
