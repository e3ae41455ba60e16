#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

#include "iadfp/rng.hpp"

namespace iadfp {

/// Dirichlet concentration parameters alpha_1..alpha_K.
///
/// Construction validates K >= 2 and every entry finite and positive. Values
/// produced by a network's softplus+1 head are additionally >= 1, but the
/// type admits (0, 1) so the density and sampler can be exercised generally.
class Concentration {
 public:
  explicit Concentration(std::vector<double> alpha);
  Concentration(std::initializer_list<double> alpha);
  /// Copies a row out of a larger buffer, e.g. one example of a batch.
  static Concentration from_span(std::span<const double> alpha);

  std::size_t size() const { return alpha_.size(); }
  double operator[](std::size_t k) const { return alpha_[k]; }
  std::span<const double> values() const { return alpha_; }
  /// alpha_0 = sum_k alpha_k.
  double strength() const { return strength_; }

 private:
  std::vector<double> alpha_;
  double strength_ = 0.0;
};

/// Point on the probability simplex.
using SimplexPoint = std::vector<double>;

bool on_simplex(std::span<const double> p, double tolerance = 1e-9);

namespace dirichlet {

/// alpha_k / alpha_0.
SimplexPoint predictive_probs(const Concentration& alpha);

/// Index of the largest predictive probability; lowest index on ties.
std::size_t predicted_class(const Concentration& alpha);

/// ln f(p; alpha). Throws DomainError if p_k == 0 where alpha_k < 1, or if the
/// dimensions disagree.
double log_density(std::span<const double> p, const Concentration& alpha);

/// alpha with entry c replaced by exactly 1.
Concentration modified_concentration(const Concentration& alpha, std::size_t c);

/// Diagonal of the Dirichlet Fisher information: trigamma(a_k) - trigamma(a_0).
std::vector<double> fisher_diag(const Concentration& alpha_tilde);

/// Gamma(shape, 1) variate. Marsaglia-Tsang squeeze for shape >= 1; boosted
/// through U^(1/shape) below that.
double sample_gamma(double shape, Rng& rng);

/// Normalized independent Gamma(alpha_k) draws.
SimplexPoint sample(const Concentration& alpha, Rng& rng);

}  // namespace dirichlet
}  // namespace iadfp
