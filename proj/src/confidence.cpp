#include "iadfp/confidence.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "iadfp/errors.hpp"

namespace iadfp {

void ConfidenceConfig::validate() const {
  if (!(lambda_c >= 0.0)) throw std::invalid_argument("confidence.lambda_c must be >= 0");
  if (!(zeta > 0.0)) throw std::invalid_argument("confidence.zeta must be > 0");
  if (!(m > 0.0)) throw std::invalid_argument("confidence.m must be > 0");
  if (!(delta > 0.0)) throw std::invalid_argument("confidence.delta must be > 0");
  if (!(epsilon > 0.0)) throw std::invalid_argument("confidence.epsilon must be > 0");
  if (k < 2) throw std::invalid_argument("confidence: class count must be >= 2");
  if (!(t_error() < 1.0) || !(t_correct() < 1.0)) {
    throw std::invalid_argument("confidence: thresholds 1/K + delta (+ epsilon) must stay below 1");
  }
}

namespace confidence {

double tcp_score(const Concentration& alpha, std::size_t c) {
  if (c >= alpha.size()) throw DomainError("tcp_score: class index out of range");
  return alpha[c] / alpha.strength();
}

double tcp_score(std::span<const double> probs, std::size_t c) {
  if (c >= probs.size()) throw DomainError("tcp_score: class index out of range");
  return probs[c];
}

double mcp_score(const Concentration& alpha) {
  const auto v = alpha.values();
  return *std::max_element(v.begin(), v.end()) / alpha.strength();
}

double mcp_score(std::span<const double> probs) {
  if (probs.empty()) throw EmptyInputError("mcp_score: empty distribution");
  return *std::max_element(probs.begin(), probs.end());
}

double phi(double c_hat, double m, double t) {
  const double z = m * (c_hat - t);
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

ConfidenceLoss confidence_loss(std::span<const ConfidenceSample> samples,
                               const ConfidenceConfig& cfg) {
  if (samples.empty()) throw EmptyInputError("confidence_loss: no samples");
  const double n = static_cast<double>(samples.size());
  const double t_e = cfg.t_error();
  const double t_c = cfg.t_correct();

  ConfidenceLoss out;
  out.grad.resize(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    const double weight = s.failed ? cfg.zeta : 1.0;
    const double m = s.failed ? cfg.m : -cfg.m;
    const double t = s.failed ? t_e : t_c;
    const double diff = s.c_hat - s.c_star;
    const double barrier = phi(s.c_hat, m, t);
    out.value += weight * (diff * diff + cfg.lambda_c * barrier);
    out.grad[i] = weight * (2.0 * diff + cfg.lambda_c * m * barrier * (1.0 - barrier)) / n;
  }
  out.value /= n;
  return out;
}

TcpGuaranteeReport check_tcp_guarantees(std::span<const PredictionRecord> records) {
  TcpGuaranteeReport report;
  report.total = records.size();
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    const double k = static_cast<double>(r.probs.size());
    const double tcp = tcp_score(r.probs, static_cast<std::size_t>(r.true_class));
    const bool correct = r.predicted_class == r.true_class;
    if (tcp > 0.5) {
      ++report.above_half;
      if (!correct) report.violations.push_back(i);
    } else if (tcp < 1.0 / k) {
      ++report.below_inv_k;
      if (correct) report.violations.push_back(i);
    } else {
      ++report.in_between;
    }
  }
  return report;
}

}  // namespace confidence
}  // namespace iadfp
