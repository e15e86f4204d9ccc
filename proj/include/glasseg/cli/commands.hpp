#pragma once

#include <ostream>
#include <vector>
#include <string>

namespace glasseg::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfigError = 2;

/// Entry point of the `glasseg` executable: train, eval, predict, stats, synth, correct-depth.
/// Returns 0 on success, 1 on runtime failure, 2 on configuration or usage errors.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int run(int argc, char** argv);

}  // namespace glasseg::cli
