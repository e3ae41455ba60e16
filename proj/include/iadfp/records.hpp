#pragma once

#include <cstddef>
#include <limits>
#include <string_view>
#include <vector>

namespace iadfp {

/// Which confidence score a failure-prediction run ranks by.
enum class ScoreKind {
  tcp,   // true class probability; needs labels, so an oracle upper bound
  mcp,   // maximum class probability
  chat,  // learned confidence from the confidence network
};

std::string_view to_string(ScoreKind kind);
/// Accepts "tcp", "mcp", "chat". Throws std::invalid_argument otherwise.
ScoreKind parse_score_kind(std::string_view name);

/// Everything known about one evaluated example.
struct PredictionRecord {
  std::size_t index = 0;
  int true_class = 0;
  int predicted_class = 0;
  std::vector<double> probs;  // alpha / alpha_0, or softmax output
  std::vector<double> alpha;  // empty for softmax models
  double tcp = 0.0;
  double mcp = 0.0;
  double chat = std::numeric_limits<double>::quiet_NaN();

  bool correct() const { return true_class == predicted_class; }
  double score(ScoreKind kind) const;
};

/// Minimal input to the ranking metrics.
struct ScoredOutcome {
  double score = 0.0;
  bool correct = false;
};

std::vector<ScoredOutcome> scored(const std::vector<PredictionRecord>& records, ScoreKind kind);

}  // namespace iadfp
