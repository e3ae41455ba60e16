#pragma once

// Independent reference computations used by the unit tests, the acceptance
// suite and `iadfp verify`. Nothing here calls the routine it checks.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "iadfp/dirichlet.hpp"
#include "iadfp/records.hpp"

namespace iadfp::oracles {

/// Central-difference gradient of a scalar function. The divisor is the
/// actual distance between the two probe points.
std::vector<double> finite_difference(const std::function<double(std::span<const double>)>& fn,
                                      std::span<const double> x, double h = 1e-5);
/// Same, for a function evaluated in extended precision.
std::vector<double> finite_difference_ld(const std::function<long double(std::span<const double>)>& fn,
                                         std::span<const double> x, double h = 1e-5);

/// The expected p-norm term as a direct ratio of rising-factorial products in
/// long double, without logarithms. Only for moderate alpha and p.
long double f_term_direct(std::span<const double> alpha, std::size_t c, int p);

/// Trigamma in long double: upward recurrence to x >= 30, then the
/// Bernoulli asymptotic series.
long double trigamma_ld(long double x);

/// The information regularizer in long double, built on trigamma_ld.
long double r_term_direct(std::span<const double> alpha, std::size_t c);

/// |a - b| / max(|a|, |b|, floor).
double rel_error(double a, double b, double floor = 1e-12);

/// Largest rel_error over paired entries.
double max_rel_error(std::span<const double> a, std::span<const double> b, double floor = 1e-12);

struct MonteCarloEstimate {
  double value = 0.0;           // (mean of sum_k |y_k - p_k|^p)^(1/p)
  double moment = 0.0;          // the mean itself
  double moment_std_error = 0.0;
};

/// Monte-Carlo estimate of the expected p-norm error under Dir(alpha).
MonteCarloEstimate mc_expected_pnorm(const Concentration& alpha, std::size_t c, int p,
                                     std::size_t samples, std::uint64_t seed);

/// O(n^2) pairwise AUROC with ties counted 1/2.
double auroc_pairwise(std::span<const ScoredOutcome> outcomes);

/// Average precision by counting, for every distinct threshold, the
/// predictions flagged positive from scratch.
double average_precision_bruteforce(std::span<const ScoredOutcome> outcomes, bool errors_positive);

/// FPR at the largest threshold with TPR >= target, by scanning all thresholds.
double fpr_at_tpr_sweep(std::span<const ScoredOutcome> outcomes, double tpr_target);

}  // namespace iadfp::oracles
