#include "iadfp/iad_loss.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <stdexcept>
#include <string>

#include "iadfp/errors.hpp"
#include "iadfp/specfun.hpp"

namespace iadfp {

void IadLossConfig::validate() const {
  if (p < 2) throw std::invalid_argument("iad.p must be an integer >= 2");
  if (!(lambda >= 0.0)) throw std::invalid_argument("iad.lambda must be >= 0");
  if (!(t0 >= 0.0)) throw std::invalid_argument("iad.t0 must be >= 0");
  if (!(t_ramp >= 1.0)) throw std::invalid_argument("iad.t_ramp must be >= 1");
}

namespace iad {

namespace {

void check_label(const Concentration& alpha, std::size_t c) {
  if (c >= alpha.size()) {
    throw DomainError("class index " + std::to_string(c) + " out of range for K=" +
                      std::to_string(alpha.size()));
  }
}

double log_add(double a, double b) {
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

double wrong_class_mass(const Concentration& alpha, std::size_t c) {
  return alpha.strength() - alpha[c];
}

// ln of the numerator mu(S) + sum_{k != c} mu(alpha_k).
double log_numerator(const Concentration& alpha, std::size_t c, int p) {
  double acc = specfun::log_mu(wrong_class_mass(alpha, c), p);
  for (std::size_t k = 0; k < alpha.size(); ++k) {
    if (k != c) acc = log_add(acc, specfun::log_mu(alpha[k], p));
  }
  return acc;
}

}  // namespace

double f_term(const Concentration& alpha, std::size_t c, int p) {
  check_label(alpha, c);
  if (p < 2) throw DomainError("f_term: p must be >= 2");
  const double log_ratio = log_numerator(alpha, c, p) - specfun::log_mu(alpha.strength(), p);
  return std::exp(log_ratio / p);
}

double r_term(const Concentration& alpha, std::size_t c) {
  check_label(alpha, c);
  const double tilde_strength = 1.0 + wrong_class_mass(alpha, c);
  const double shared = specfun::trigamma(tilde_strength);
  double sum = 0.0;
  for (std::size_t k = 0; k < alpha.size(); ++k) {
    if (k == c) continue;
    const double excess = alpha[k] - 1.0;
    sum += excess * excess * (specfun::trigamma(alpha[k]) - shared);
  }
  return 0.5 * sum;
}

std::vector<double> grad_f(const Concentration& alpha, std::size_t c, int p) {
  check_label(alpha, c);
  if (p < 2) throw DomainError("grad_f: p must be >= 2");
  const double wrong = wrong_class_mass(alpha, c);
  const double log_num = log_numerator(alpha, c, p);
  const double log_den = specfun::log_mu(alpha.strength(), p);
  const double f = std::exp((log_num - log_den) / p);
  const double dden = specfun::dlog_mu(alpha.strength(), p);
  // Share of the numerator carried by mu(S), and its log-derivative.
  const double mass_share = std::exp(specfun::log_mu(wrong, p) - log_num);
  const double mass_term = mass_share * specfun::dlog_mu(wrong, p);

  std::vector<double> g(alpha.size());
  for (std::size_t k = 0; k < alpha.size(); ++k) {
    double dlog;
    if (k == c) {
      dlog = -dden;
    } else {
      const double own_share = std::exp(specfun::log_mu(alpha[k], p) - log_num);
      dlog = mass_term + own_share * specfun::dlog_mu(alpha[k], p) - dden;
    }
    g[k] = f / p * dlog;
  }
  return g;
}

std::vector<double> grad_r(const Concentration& alpha, std::size_t c) {
  check_label(alpha, c);
  const double tilde_strength = 1.0 + wrong_class_mass(alpha, c);
  const double shared = specfun::trigamma(tilde_strength);
  const double shared_slope = specfun::polygamma(2, tilde_strength);

  double half_weight_sum = 0.0;  // 1/2 sum_{k != c} (alpha_k - 1)^2
  for (std::size_t k = 0; k < alpha.size(); ++k) {
    if (k == c) continue;
    const double excess = alpha[k] - 1.0;
    half_weight_sum += 0.5 * excess * excess;
  }

  std::vector<double> g(alpha.size(), 0.0);
  for (std::size_t k = 0; k < alpha.size(); ++k) {
    if (k == c) continue;
    const double excess = alpha[k] - 1.0;
    g[k] = excess * (specfun::trigamma(alpha[k]) - shared) +
           0.5 * excess * excess * specfun::polygamma(2, alpha[k]) -
           half_weight_sum * shared_slope;
  }
  return g;
}

double anneal(double t, const IadLossConfig& cfg) {
  if (t <= cfg.t0) return 0.0;
  return cfg.lambda * std::min((t - cfg.t0) / cfg.t_ramp, 1.0);
}

BatchLoss batch_loss(const Tensor& alphas, std::span<const int> labels, const IadLossConfig& cfg,
                     double epoch) {
  if (alphas.rank() != 2) throw ShapeError("batch_loss: alphas must be [N, K]");
  const std::size_t n = alphas.rows();
  const std::size_t k = alphas.dim(1);
  if (n == 0) throw EmptyInputError("batch_loss: empty batch");
  if (labels.size() != n) throw ShapeError("batch_loss: label count differs from batch size");

  const double lambda_t = anneal(epoch, cfg);
  std::vector<double> f_terms(n);
  std::vector<double> r_terms(n);
  Tensor grad({n, k});

  // Exceptions may not escape an OpenMP region; collect the first one.
  std::exception_ptr failure;
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
    try {
      const auto row = static_cast<std::size_t>(i);
      const Concentration alpha = Concentration::from_span(alphas.row(row));
      const int label = labels[row];
      if (label < 0) throw DomainError("batch_loss: negative label");
      const auto c = static_cast<std::size_t>(label);
      f_terms[row] = f_term(alpha, c, cfg.p);
      const auto gf = grad_f(alpha, c, cfg.p);
      r_terms[row] = r_term(alpha, c);
      auto out = grad.row(row);
      if (lambda_t > 0.0) {
        const auto gr = grad_r(alpha, c);
        for (std::size_t j = 0; j < k; ++j) out[j] = (gf[j] + lambda_t * gr[j]) / n;
      } else {
        for (std::size_t j = 0; j < k; ++j) out[j] = gf[j] / n;
      }
    } catch (...) {
#pragma omp critical(iadfp_batch_loss)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);

  LossValue value;
  value.lambda_t = lambda_t;
  for (std::size_t i = 0; i < n; ++i) {
    value.f_term += f_terms[i];
    value.r_term += r_terms[i];
  }
  value.f_term /= static_cast<double>(n);
  value.r_term /= static_cast<double>(n);
  value.total = value.f_term + lambda_t * value.r_term;
  return {value, std::move(grad)};
}

}  // namespace iad
}  // namespace iadfp
