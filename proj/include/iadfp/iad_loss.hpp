#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "iadfp/dirichlet.hpp"
#include "iadfp/tensor.hpp"

namespace iadfp {

/// Hyperparameters of the information-aware Dirichlet objective.
struct IadLossConfig {
  int p = 4;             // norm order, integer >= 2
  double lambda = 0.5;   // regularizer weight after annealing
  double t0 = 0.0;       // epochs before the regularizer switches on
  double t_ramp = 1.0;   // epochs to ramp from 0 to lambda

  /// Throws std::invalid_argument when a field is out of range.
  void validate() const;
};

struct LossValue {
  double f_term = 0.0;
  double r_term = 0.0;
  double total = 0.0;     // f_term + lambda_t * r_term
  double lambda_t = 0.0;
};

namespace iad {

/// Expected-p-norm classification term:
///   [ (mu(S) + sum_{k != c} mu(alpha_k)) / mu(alpha_0) ]^(1/p),  S = sum_{k != c} alpha_k.
/// Equals (E_{p ~ Dir(alpha)} sum_k |y_k - p_k|^p)^(1/p). Evaluated in log space.
double f_term(const Concentration& alpha, std::size_t c, int p);

/// Information regularizer:
///   1/2 sum_{k != c} (alpha_k - 1)^2 (trigamma(alpha~_k) - trigamma(alpha~_0))
/// with alpha~ = alpha except alpha~_c = 1.
double r_term(const Concentration& alpha, std::size_t c);

std::vector<double> grad_f(const Concentration& alpha, std::size_t c, int p);

/// Gradient of r_term, including the coupling through trigamma(alpha~_0).
/// Entry c is exactly zero.
std::vector<double> grad_r(const Concentration& alpha, std::size_t c);

/// lambda_t = lambda * min((t - t0) / t_ramp, 1) for t > t0, else 0.
double anneal(double t, const IadLossConfig& cfg);

struct BatchLoss {
  LossValue value;   // batch means
  Tensor grad;       // [N, K], d(value.total)/d(alpha_i), i.e. already divided by N
};

/// Mean of F_i + lambda_t R_i over the rows of `alphas` ([N, K]).
/// Per-example terms are evaluated in parallel; the mean is a fixed-order sum.
BatchLoss batch_loss(const Tensor& alphas, std::span<const int> labels, const IadLossConfig& cfg,
                     double epoch);

}  // namespace iad
}  // namespace iadfp
