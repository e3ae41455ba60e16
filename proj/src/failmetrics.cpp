#include "iadfp/failmetrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "iadfp/errors.hpp"

namespace iadfp::metrics {

namespace {

struct Counts {
  std::size_t correct = 0;
  std::size_t errors = 0;
};

Counts count(std::span<const ScoredOutcome> outcomes) {
  Counts c;
  for (const auto& o : outcomes) (o.correct ? c.correct : c.errors)++;
  return c;
}

void require_both(const Counts& c, const char* fn) {
  if (c.correct == 0 || c.errors == 0) {
    throw EmptyInputError(std::string(fn) + ": needs at least one correct and one erroneous prediction");
  }
}

std::vector<ScoredOutcome> sorted_by_score(std::span<const ScoredOutcome> outcomes, bool descending) {
  std::vector<ScoredOutcome> v(outcomes.begin(), outcomes.end());
  std::stable_sort(v.begin(), v.end(), [descending](const ScoredOutcome& a, const ScoredOutcome& b) {
    return descending ? a.score > b.score : a.score < b.score;
  });
  return v;
}

}  // namespace

double auroc(std::span<const ScoredOutcome> outcomes) {
  const Counts c = count(outcomes);
  require_both(c, "auroc");
  const auto v = sorted_by_score(outcomes, false);
  // Twice the Mann-Whitney count, kept integral so ties stay exact.
  unsigned long long twice_wins = 0;
  std::size_t errors_below = 0;
  for (std::size_t i = 0; i < v.size();) {
    std::size_t j = i;
    std::size_t group_correct = 0;
    std::size_t group_errors = 0;
    while (j < v.size() && v[j].score == v[i].score) {
      (v[j].correct ? group_correct : group_errors)++;
      ++j;
    }
    twice_wins += group_correct * (2ULL * errors_below + group_errors);
    errors_below += group_errors;
    i = j;
  }
  return static_cast<double>(twice_wins) / (2.0 * static_cast<double>(c.correct) * static_cast<double>(c.errors));
}

double auprc(std::span<const ScoredOutcome> outcomes, Positive positive) {
  const bool want_correct = positive == Positive::success;
  const Counts c = count(outcomes);
  const std::size_t positives = want_correct ? c.correct : c.errors;
  if (positives == 0) throw EmptyInputError("auprc: positive class is empty");

  const auto v = sorted_by_score(outcomes, want_correct);
  double ap = 0.0;
  std::size_t seen = 0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < v.size();) {
    std::size_t j = i;
    std::size_t group_hits = 0;
    while (j < v.size() && v[j].score == v[i].score) {
      if (v[j].correct == want_correct) ++group_hits;
      ++j;
    }
    seen = j;
    hits += group_hits;
    if (group_hits > 0) {
      const double recall_gain = static_cast<double>(group_hits) / static_cast<double>(positives);
      const double precision = static_cast<double>(hits) / static_cast<double>(seen);
      ap += recall_gain * precision;
    }
    i = j;
  }
  return ap;
}

double fpr_at_tpr(std::span<const ScoredOutcome> outcomes, double tpr_target) {
  const Counts c = count(outcomes);
  require_both(c, "fpr_at_tpr");
  const auto v = sorted_by_score(outcomes, true);
  std::size_t tp = 0;
  std::size_t fp = 0;
  for (std::size_t i = 0; i < v.size();) {
    std::size_t j = i;
    while (j < v.size() && v[j].score == v[i].score) {
      (v[j].correct ? tp : fp)++;
      ++j;
    }
    if (static_cast<double>(tp) / static_cast<double>(c.correct) >= tpr_target) {
      return static_cast<double>(fp) / static_cast<double>(c.errors);
    }
    i = j;
  }
  return 1.0;
}

MetricsReport evaluate(std::span<const ScoredOutcome> outcomes, double tpr_target) {
  const Counts c = count(outcomes);
  require_both(c, "evaluate");
  MetricsReport r;
  r.auroc = auroc(outcomes);
  r.auprc_success = auprc(outcomes, Positive::success);
  r.auprc_error = auprc(outcomes, Positive::error);
  r.fpr_at_tpr = fpr_at_tpr(outcomes, tpr_target);
  r.tpr_target = tpr_target;
  r.correct = c.correct;
  r.errors = c.errors;
  return r;
}

std::vector<CdfPoint> empirical_cdf(std::span<const double> scores) {
  if (scores.empty()) throw EmptyInputError("empirical_cdf: no scores");
  std::vector<double> v(scores.begin(), scores.end());
  std::sort(v.begin(), v.end());
  std::vector<CdfPoint> cdf;
  const double n = static_cast<double>(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i + 1 < v.size() && v[i + 1] == v[i]) continue;
    cdf.push_back({v[i], static_cast<double>(i + 1) / n});
  }
  return cdf;
}

std::vector<HistogramBin> histogram(std::span<const double> scores, std::size_t bins) {
  if (scores.empty()) throw EmptyInputError("histogram: no scores");
  if (bins == 0) throw std::invalid_argument("histogram: need at least one bin");
  std::vector<HistogramBin> out(bins);
  for (std::size_t b = 0; b < bins; ++b) {
    out[b] = {static_cast<double>(b) / bins, static_cast<double>(b + 1) / bins, 0};
  }
  for (double s : scores) {
    if (!(s >= 0.0 && s <= 1.0)) throw std::invalid_argument("histogram: score outside [0, 1]");
    auto b = static_cast<std::size_t>(std::floor(s * static_cast<double>(bins)));
    out[std::min(b, bins - 1)].count++;
  }
  return out;
}

void write_cdf_csv(const std::filesystem::path& path, const std::vector<CdfPoint>& cdf) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.precision(17);
  out << "score,cumulative_fraction\n";
  for (const auto& p : cdf) out << p.score << ',' << p.fraction << '\n';
}

void write_histogram_csv(const std::filesystem::path& path, const std::vector<HistogramBin>& bins) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.precision(17);
  out << "bin,lower,upper,count\n";
  for (std::size_t b = 0; b < bins.size(); ++b) {
    out << b << ',' << bins[b].lower << ',' << bins[b].upper << ',' << bins[b].count << '\n';
  }
}

}  // namespace iadfp::metrics
