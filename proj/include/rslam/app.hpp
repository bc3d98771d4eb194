#pragma once

#include <string>
#include <vector>

namespace rslam {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitSolverFailure = 3;

/// Entry point of the `rslam` tool; `args[0]` is the program name.
int run_cli(const std::vector<std::string>& args);

}  // namespace rslam
