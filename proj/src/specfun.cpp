#include "iadfp/specfun.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "iadfp/errors.hpp"

namespace iadfp::specfun {

namespace {

// Arguments are shifted up to at least this value before the asymptotic
// expansions are used; the truncated series are below 1e-17 relative there.
constexpr double kAsymptoticThreshold = 10.0;

void require_positive(double x, const char* fn) {
  if (!(x > 0.0) || !std::isfinite(x)) {
    throw DomainError(std::string(fn) + ": argument must be positive and finite, got " +
                      std::to_string(x));
  }
}

double ln_gamma_asymptotic(double x) {
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  const double series =
      inv * (1.0 / 12 +
             inv2 * (-1.0 / 360 +
                     inv2 * (1.0 / 1260 +
                             inv2 * (-1.0 / 1680 +
                                     inv2 * (1.0 / 1188 +
                                             inv2 * (-691.0 / 360360 + inv2 * (1.0 / 156)))))));
  return (x - 0.5) * std::log(x) - x + 0.5 * std::log(2.0 * std::numbers::pi) + series;
}

double digamma_asymptotic(double x) {
  const double inv2 = 1.0 / (x * x);
  const double series =
      inv2 * (1.0 / 12 -
              inv2 * (1.0 / 120 -
                      inv2 * (1.0 / 252 -
                              inv2 * (1.0 / 240 -
                                      inv2 * (1.0 / 132 -
                                              inv2 * (691.0 / 32760 - inv2 * (1.0 / 12)))))));
  return std::log(x) - 0.5 / x - series;
}

double trigamma_asymptotic(double x) {
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  const double series =
      1.0 / 6 -
      inv2 * (1.0 / 30 -
              inv2 * (1.0 / 42 -
                      inv2 * (1.0 / 30 -
                              inv2 * (5.0 / 66 - inv2 * (691.0 / 2730 - inv2 * (7.0 / 6))))));
  return inv + 0.5 * inv2 + inv * inv2 * series;
}

double tetragamma_asymptotic(double x) {
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  const double series =
      0.5 - inv2 * (1.0 / 6 -
                    inv2 * (1.0 / 6 -
                            inv2 * (3.0 / 10 - inv2 * (5.0 / 6 - inv2 * (691.0 / 210)))));
  return -(inv2 + inv2 * inv + inv2 * inv2 * series);
}

}  // namespace

double ln_gamma(double x) {
  require_positive(x, "ln_gamma");
  if (x >= kAsymptoticThreshold) return ln_gamma_asymptotic(x);
  // Gamma(x) = Gamma(x + n) / (x (x+1) ... (x+n-1)); the product stays
  // below 1e10 so a single log is both cheap and accurate.
  double product = 1.0;
  double shifted = x;
  while (shifted < kAsymptoticThreshold) {
    product *= shifted;
    shifted += 1.0;
  }
  return ln_gamma_asymptotic(shifted) - std::log(product);
}

double digamma(double x) {
  require_positive(x, "digamma");
  double correction = 0.0;
  while (x < kAsymptoticThreshold) {
    correction += 1.0 / x;
    x += 1.0;
  }
  return digamma_asymptotic(x) - correction;
}

double trigamma(double x) {
  require_positive(x, "trigamma");
  double correction = 0.0;
  while (x < kAsymptoticThreshold) {
    correction += 1.0 / (x * x);
    x += 1.0;
  }
  return trigamma_asymptotic(x) + correction;
}

double polygamma(int n, double x) {
  switch (n) {
    case 1:
      return trigamma(x);
    case 2: {
      require_positive(x, "polygamma");
      double correction = 0.0;
      while (x < kAsymptoticThreshold) {
        correction += 2.0 / (x * x * x);
        x += 1.0;
      }
      return tetragamma_asymptotic(x) - correction;
    }
    default:
      throw DomainError("polygamma: unsupported order " + std::to_string(n));
  }
}

double log_mu(double alpha, int p) {
  require_positive(alpha, "log_mu");
  if (p < 1) throw DomainError("log_mu: order p must be >= 1");
  double sum = 0.0;
  for (int j = 0; j < p; ++j) sum += std::log(alpha + j);
  return sum;
}

double mu(double alpha, int p) { return std::exp(log_mu(alpha, p)); }

double dlog_mu(double alpha, int p) {
  require_positive(alpha, "dlog_mu");
  if (p < 1) throw DomainError("dlog_mu: order p must be >= 1");
  double sum = 0.0;
  for (int j = 0; j < p; ++j) sum += 1.0 / (alpha + j);
  return sum;
}

}  // namespace iadfp::specfun
