#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "iadfp/records.hpp"

namespace iadfp {

struct MetricsReport {
  double auroc = 0.0;
  double auprc_success = 0.0;
  double auprc_error = 0.0;
  double fpr_at_tpr = 0.0;
  double tpr_target = 0.85;
  std::size_t correct = 0;  // successes (positives for AUROC / FPR)
  std::size_t errors = 0;
};

/// Which outcome counts as the positive class for average precision.
enum class Positive { success, error };

namespace metrics {

/// P(score of a correct example > score of an error), ties counting 1/2.
/// Throws EmptyInputError unless both outcomes are present.
double auroc(std::span<const ScoredOutcome> outcomes);

/// Step-interpolated average precision. Errors are ranked by ascending
/// confidence, successes by descending confidence; equal scores form one
/// threshold group.
double auprc(std::span<const ScoredOutcome> outcomes, Positive positive);

/// With successes as positives, takes the largest threshold whose TPR reaches
/// `tpr_target` and returns the fraction of errors scoring at or above it.
double fpr_at_tpr(std::span<const ScoredOutcome> outcomes, double tpr_target = 0.85);

MetricsReport evaluate(std::span<const ScoredOutcome> outcomes, double tpr_target = 0.85);

struct CdfPoint {
  double score;
  double fraction;  // fraction of scores <= score
};

/// Distinct scores in ascending order with their cumulative fraction.
std::vector<CdfPoint> empirical_cdf(std::span<const double> scores);

struct HistogramBin {
  double lower;
  double upper;
  std::size_t count;
};

/// Equal-width bins over [0, 1]. Bins are [lower, upper) except the last,
/// which also takes 1.0.
std::vector<HistogramBin> histogram(std::span<const double> scores, std::size_t bins);

void write_cdf_csv(const std::filesystem::path& path, const std::vector<CdfPoint>& cdf);
void write_histogram_csv(const std::filesystem::path& path, const std::vector<HistogramBin>& bins);

}  // namespace metrics
}  // namespace iadfp
