#include "iadfp/records.hpp"

#include <stdexcept>
#include <string>

namespace iadfp {

std::string_view to_string(ScoreKind kind) {
  switch (kind) {
    case ScoreKind::tcp:
      return "tcp";
    case ScoreKind::mcp:
      return "mcp";
    case ScoreKind::chat:
      return "chat";
  }
  return "unknown";
}

ScoreKind parse_score_kind(std::string_view name) {
  if (name == "tcp") return ScoreKind::tcp;
  if (name == "mcp") return ScoreKind::mcp;
  if (name == "chat") return ScoreKind::chat;
  throw std::invalid_argument("unknown score kind '" + std::string(name) +
                              "' (expected tcp, mcp or chat)");
}

double PredictionRecord::score(ScoreKind kind) const {
  switch (kind) {
    case ScoreKind::tcp:
      return tcp;
    case ScoreKind::mcp:
      return mcp;
    case ScoreKind::chat:
      return chat;
  }
  return tcp;
}

std::vector<ScoredOutcome> scored(const std::vector<PredictionRecord>& records, ScoreKind kind) {
  std::vector<ScoredOutcome> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back({r.score(kind), r.correct()});
  return out;
}

}  // namespace iadfp
