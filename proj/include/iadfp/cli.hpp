#pragma once

#include <iosfwd>

namespace iadfp::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kFailure = 1;      // runtime error, or verify found a failing suite
inline constexpr int kUsage = 2;        // bad flags, config or checkpoint mismatch
inline constexpr int kDegenerate = 3;   // evaluation split lacks correct or erroneous predictions

/// Entry point of the `iadfp` tool: train, train-confidence, eval,
/// export-cdf, verify.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace iadfp::cli
