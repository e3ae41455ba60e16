#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "iadfp/dirichlet.hpp"
#include "iadfp/records.hpp"

namespace iadfp {

/// Weights and thresholds of the constrained confidence loss.
///
/// The error-side threshold is t_e = 1/K + delta and the correct-side
/// threshold t_c = t_e + epsilon; both must fall inside (0, 1).
struct ConfidenceConfig {
  double lambda_c = 5.0;
  double zeta = 1.0;
  double m = 50.0;
  double delta = 0.02;
  double epsilon = 0.05;
  int k = 10;

  double t_error() const { return 1.0 / k + delta; }
  double t_correct() const { return t_error() + epsilon; }
  void validate() const;
};

struct ConfidenceSample {
  double c_hat = 0.0;   // predicted confidence
  double c_star = 0.0;  // TCP target from the frozen classifier
  bool failed = false;  // the classifier got this example wrong
};

struct ConfidenceLoss {
  double value = 0.0;
  std::vector<double> grad;  // d(value)/d(c_hat_i), already divided by N
};

namespace confidence {

/// alpha_c / alpha_0.
double tcp_score(const Concentration& alpha, std::size_t c);
/// Probability the model puts on class c (softmax or any simplex point).
double tcp_score(std::span<const double> probs, std::size_t c);

/// max_k alpha_k / alpha_0.
double mcp_score(const Concentration& alpha);
double mcp_score(std::span<const double> probs);

/// sigma(m (c_hat - t)). Negative m turns the barrier around so it
/// penalizes c_hat below t.
double phi(double c_hat, double m, double t);

/// Mean over samples of
///   (1 - s) [ (c_hat - c*)^2 + lambda_c phi(c_hat, -M, t_c) ]
///   + zeta s [ (c_hat - c*)^2 + lambda_c phi(c_hat,  M, t_e) ].
ConfidenceLoss confidence_loss(std::span<const ConfidenceSample> samples,
                               const ConfidenceConfig& cfg);

struct TcpGuaranteeReport {
  std::size_t total = 0;
  std::size_t above_half = 0;      // TCP > 1/2
  std::size_t below_inv_k = 0;     // TCP < 1/K
  std::size_t in_between = 0;
  std::vector<std::size_t> violations;  // record indices breaking either rule

  bool ok() const { return violations.empty(); }
};

/// TCP > 1/2 must imply a correct prediction and TCP < 1/K an incorrect one.
/// Uses each record's probs, true class and predicted class.
TcpGuaranteeReport check_tcp_guarantees(std::span<const PredictionRecord> records);

}  // namespace confidence
}  // namespace iadfp
