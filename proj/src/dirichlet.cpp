#include "iadfp/dirichlet.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "iadfp/errors.hpp"
#include "iadfp/specfun.hpp"

namespace iadfp {

Concentration::Concentration(std::vector<double> alpha) : alpha_(std::move(alpha)) {
  if (alpha_.size() < 2) throw DomainError("Concentration: need at least two classes");
  for (double a : alpha_) {
    if (!(a > 0.0) || !std::isfinite(a)) {
      throw DomainError("Concentration: entries must be finite and positive, got " +
                        std::to_string(a));
    }
    strength_ += a;
  }
}

Concentration::Concentration(std::initializer_list<double> alpha)
    : Concentration(std::vector<double>(alpha)) {}

Concentration Concentration::from_span(std::span<const double> alpha) {
  return Concentration(std::vector<double>(alpha.begin(), alpha.end()));
}

bool on_simplex(std::span<const double> p, double tolerance) {
  double sum = 0.0;
  for (double v : p) {
    if (v < 0.0) return false;
    sum += v;
  }
  return std::abs(sum - 1.0) <= tolerance;
}

namespace dirichlet {

SimplexPoint predictive_probs(const Concentration& alpha) {
  SimplexPoint p(alpha.size());
  for (std::size_t k = 0; k < alpha.size(); ++k) p[k] = alpha[k] / alpha.strength();
  return p;
}

std::size_t predicted_class(const Concentration& alpha) {
  const auto v = alpha.values();
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

double log_density(std::span<const double> p, const Concentration& alpha) {
  if (p.size() != alpha.size()) throw DomainError("log_density: dimension mismatch");
  double result = specfun::ln_gamma(alpha.strength());
  for (std::size_t k = 0; k < alpha.size(); ++k) {
    result -= specfun::ln_gamma(alpha[k]);
    if (alpha[k] == 1.0) continue;
    if (p[k] <= 0.0) {
      if (alpha[k] < 1.0) throw DomainError("log_density: p_k = 0 with alpha_k < 1");
      return -std::numeric_limits<double>::infinity();
    }
    result += (alpha[k] - 1.0) * std::log(p[k]);
  }
  return result;
}

Concentration modified_concentration(const Concentration& alpha, std::size_t c) {
  if (c >= alpha.size()) throw DomainError("modified_concentration: class index out of range");
  std::vector<double> tilde(alpha.values().begin(), alpha.values().end());
  tilde[c] = 1.0;
  return Concentration(std::move(tilde));
}

std::vector<double> fisher_diag(const Concentration& alpha_tilde) {
  const double shared = specfun::trigamma(alpha_tilde.strength());
  std::vector<double> diag(alpha_tilde.size());
  for (std::size_t k = 0; k < alpha_tilde.size(); ++k) {
    diag[k] = specfun::trigamma(alpha_tilde[k]) - shared;
  }
  return diag;
}

double sample_gamma(double shape, Rng& rng) {
  if (!(shape > 0.0)) throw DomainError("sample_gamma: shape must be positive");
  if (shape < 1.0) {
    return sample_gamma(shape + 1.0, rng) * std::pow(rng.uniform_open(), 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x;
    double v;
    do {
      x = rng.normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rng.uniform_open();
    const double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2) return d * v;  // squeeze
    if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
  }
}

SimplexPoint sample(const Concentration& alpha, Rng& rng) {
  SimplexPoint p(alpha.size());
  double total = 0.0;
  for (std::size_t k = 0; k < alpha.size(); ++k) {
    p[k] = sample_gamma(alpha[k], rng);
    total += p[k];
  }
  for (double& v : p) v /= total;
  return p;
}

}  // namespace dirichlet
}  // namespace iadfp
