#pragma once

// Property suites shared by `iadfp verify` and the acceptance binary. Each
// suite compares the library against the independent oracles and reports
// one line per check.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "iadfp/dirichlet.hpp"

namespace iadfp::oracles {

struct Check {
  std::string label;
  double error = 0.0;      // measured discrepancy (or violation count)
  double tolerance = 0.0;  // pass when error <= tolerance

  bool passed() const { return error <= tolerance; }
};

struct SuiteResult {
  std::string name;
  std::vector<Check> checks;
  std::vector<std::string> notes;  // observations that are reported, not judged
  double seconds = 0.0;

  bool passed() const;
  /// Largest error / tolerance over the checks (0 when all errors are 0).
  double worst_ratio() const;
};

using GradFn = std::function<std::vector<double>(const Concentration&, std::size_t)>;

struct SuiteOptions {
  std::uint64_t seed = 20240601;
  std::size_t configs = 100;             // random configurations per gradient check
  std::size_t mc_samples = 1'000'000;    // Dirichlet draws per Monte-Carlo configuration
  std::size_t mc_configs = 20;           // random alphas per (K, p)
  std::size_t metric_trials = 1000;
  std::size_t tcp_draws = 100'000;
  /// The grad_r under test; defaults to iad::grad_r. Lets the mutation check
  /// substitute a broken gradient without touching the library.
  GradFn grad_r;
};

SuiteResult suite_specfun(const SuiteOptions& opt);
SuiteResult suite_dirichlet(const SuiteOptions& opt);
SuiteResult suite_iad_gradients(const SuiteOptions& opt);
SuiteResult suite_iad_properties(const SuiteOptions& opt);
SuiteResult suite_iad_monte_carlo(const SuiteOptions& opt);
SuiteResult suite_confidence(const SuiteOptions& opt);
SuiteResult suite_tcp_guarantees(const SuiteOptions& opt);
SuiteResult suite_network(const SuiteOptions& opt);
SuiteResult suite_metrics(const SuiteOptions& opt);

/// All of the above, in that order.
std::vector<SuiteResult> run_all_suites(const SuiteOptions& opt);

}  // namespace iadfp::oracles
