#include "iadfp/oracles/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "iadfp/errors.hpp"
#include "iadfp/rng.hpp"

namespace iadfp::oracles {

namespace {

template <typename Real, typename Fn>
std::vector<double> central(const Fn& fn, std::span<const double> x, double h) {
  std::vector<double> probe(x.begin(), x.end());
  std::vector<double> grad(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = probe[i];
    const double hi = saved + h;
    const double lo = saved - h;
    probe[i] = hi;
    const Real up = fn(probe);
    probe[i] = lo;
    const Real down = fn(probe);
    probe[i] = saved;
    grad[i] = static_cast<double>((up - down) / static_cast<Real>(hi - lo));
  }
  return grad;
}

}  // namespace

std::vector<double> finite_difference(const std::function<double(std::span<const double>)>& fn,
                                      std::span<const double> x, double h) {
  return central<double>(fn, x, h);
}

std::vector<double> finite_difference_ld(const std::function<long double(std::span<const double>)>& fn,
                                         std::span<const double> x, double h) {
  return central<long double>(fn, x, h);
}

long double f_term_direct(std::span<const double> alpha, std::size_t c, int p) {
  auto rising = [p](long double a) {
    long double r = 1.0L;
    for (int j = 0; j < p; ++j) r *= a + j;
    return r;
  };
  long double rest = 0.0L;
  long double total = 0.0L;
  long double wrong = 0.0L;
  for (std::size_t k = 0; k < alpha.size(); ++k) {
    total += alpha[k];
    if (k == c) continue;
    rest += alpha[k];
    wrong += rising(alpha[k]);
  }
  return std::pow((rising(rest) + wrong) / rising(total), 1.0L / p);
}

long double trigamma_ld(long double x) {
  long double acc = 0.0L;
  while (x < 30.0L) {
    acc += 1.0L / (x * x);
    x += 1.0L;
  }
  const long double r = 1.0L / x;
  const long double r2 = r * r;
  // 1/x + 1/(2x^2) + sum_k B_2k / x^(2k+1)
  const long double series =
      r + r2 / 2.0L +
      r * r2 * (1.0L / 6 + r2 * (-1.0L / 30 + r2 * (1.0L / 42 + r2 * (-1.0L / 30 + r2 * (5.0L / 66 + r2 * (-691.0L / 2730 + r2 * (7.0L / 6)))))));
  return acc + series;
}

long double r_term_direct(std::span<const double> alpha, std::size_t c) {
  long double rest = 0.0L;
  for (std::size_t k = 0; k < alpha.size(); ++k) {
    if (k != c) rest += alpha[k];
  }
  const long double at_total = trigamma_ld(1.0L + rest);
  long double sum = 0.0L;
  for (std::size_t k = 0; k < alpha.size(); ++k) {
    if (k == c) continue;
    const long double d = static_cast<long double>(alpha[k]) - 1.0L;
    sum += d * d * (trigamma_ld(alpha[k]) - at_total);
  }
  return sum / 2.0L;
}

double rel_error(double a, double b, double floor) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

double max_rel_error(std::span<const double> a, std::span<const double> b, double floor) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, rel_error(a[i], b[i], floor));
  return worst;
}

MonteCarloEstimate mc_expected_pnorm(const Concentration& alpha, std::size_t c, int p,
                                     std::size_t samples, std::uint64_t seed) {
  Rng rng(seed);
  double mean = 0.0;
  double m2 = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    const auto draw = dirichlet::sample(alpha, rng);
    double err = 0.0;
    for (std::size_t k = 0; k < draw.size(); ++k) {
      const double y = k == c ? 1.0 : 0.0;
      err += std::pow(std::abs(y - draw[k]), p);
    }
    const double delta = err - mean;
    mean += delta / static_cast<double>(s + 1);
    m2 += delta * (err - mean);
  }
  MonteCarloEstimate est;
  est.moment = mean;
  est.moment_std_error = std::sqrt(m2 / static_cast<double>(samples - 1) / static_cast<double>(samples));
  est.value = std::pow(mean, 1.0 / p);
  return est;
}

double auroc_pairwise(std::span<const ScoredOutcome> outcomes) {
  unsigned long long twice = 0;
  unsigned long long pairs = 0;
  for (const auto& pos : outcomes) {
    if (!pos.correct) continue;
    for (const auto& neg : outcomes) {
      if (neg.correct) continue;
      ++pairs;
      if (pos.score > neg.score) twice += 2;
      else if (pos.score == neg.score) twice += 1;
    }
  }
  if (pairs == 0) throw EmptyInputError("auroc_pairwise: one class is empty");
  return static_cast<double>(twice) / (2.0 * static_cast<double>(pairs));
}

double average_precision_bruteforce(std::span<const ScoredOutcome> outcomes, bool errors_positive) {
  auto is_positive = [&](const ScoredOutcome& o) { return errors_positive ? !o.correct : o.correct; };
  // Flagged-as-positive means "score <= t" for errors, "score >= t" for successes.
  auto flagged = [&](double score, double t) { return errors_positive ? score <= t : score >= t; };

  std::size_t positives = 0;
  std::set<double> thresholds;
  for (const auto& o : outcomes) {
    thresholds.insert(o.score);
    if (is_positive(o)) ++positives;
  }
  if (positives == 0) throw EmptyInputError("average_precision_bruteforce: no positives");

  std::vector<double> order(thresholds.begin(), thresholds.end());
  if (!errors_positive) std::reverse(order.begin(), order.end());

  double ap = 0.0;
  std::size_t previous_tp = 0;
  for (double t : order) {
    std::size_t tp = 0;
    std::size_t flagged_total = 0;
    for (const auto& o : outcomes) {
      if (!flagged(o.score, t)) continue;
      ++flagged_total;
      if (is_positive(o)) ++tp;
    }
    if (tp > previous_tp) {
      ap += static_cast<double>(tp - previous_tp) / static_cast<double>(positives) *
            (static_cast<double>(tp) / static_cast<double>(flagged_total));
    }
    previous_tp = tp;
  }
  return ap;
}

double fpr_at_tpr_sweep(std::span<const ScoredOutcome> outcomes, double tpr_target) {
  std::size_t correct = 0;
  std::size_t errors = 0;
  std::set<double> thresholds;
  for (const auto& o : outcomes) {
    (o.correct ? correct : errors)++;
    thresholds.insert(o.score);
  }
  if (correct == 0 || errors == 0) throw EmptyInputError("fpr_at_tpr_sweep: one class is empty");
  double best_threshold = -INFINITY;
  bool found = false;
  for (double t : thresholds) {
    std::size_t tp = 0;
    for (const auto& o : outcomes) {
      if (o.correct && o.score >= t) ++tp;
    }
    if (static_cast<double>(tp) / static_cast<double>(correct) >= tpr_target) {
      best_threshold = std::max(best_threshold, t);
      found = true;
    }
  }
  if (!found) return 1.0;
  std::size_t fp = 0;
  for (const auto& o : outcomes) {
    if (!o.correct && o.score >= best_threshold) ++fp;
  }
  return static_cast<double>(fp) / static_cast<double>(errors);
}

}  // namespace iadfp::oracles
