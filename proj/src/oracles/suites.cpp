#include "iadfp/oracles/suites.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <string>
#include <type_traits>

#include "iadfp/confidence.hpp"
#include "iadfp/failmetrics.hpp"
#include "iadfp/iad_loss.hpp"
#include "iadfp/kernels.hpp"
#include "iadfp/network.hpp"
#include "iadfp/oracles/oracles.hpp"
#include "iadfp/rng.hpp"
#include "iadfp/specfun.hpp"
#include "iadfp/training.hpp"

namespace iadfp::oracles {

namespace {

using Clock = std::chrono::steady_clock;

std::string fmt(const char* pattern, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, pattern, args...);
  return buf;
}

double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * rng.uniform(); }

Concentration random_alpha(Rng& rng, std::size_t k, double lo, double hi) {
  std::vector<double> a(k);
  for (auto& v : a) v = uniform(rng, lo, hi);
  return Concentration(std::move(a));
}

// Runs `body` and stamps the elapsed time.
template <typename Body>
SuiteResult timed(std::string name, Body body) {
  SuiteResult r;
  r.name = std::move(name);
  const auto start = Clock::now();
  if constexpr (std::is_invocable_v<Body, std::vector<Check>&, std::vector<std::string>&>) {
    body(r.checks, r.notes);
  } else {
    body(r.checks);
  }
  r.seconds = std::chrono::duration<double>(Clock::now() - start).count();
  return r;
}

// Relative error floor for gradient comparisons. Entries whose magnitude is
// below it are compared in absolute terms instead.
constexpr double kGradFloor = 1e-6;

}  // namespace

bool SuiteResult::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed(); });
}

double SuiteResult::worst_ratio() const {
  double worst = 0.0;
  for (const auto& c : checks) {
    if (c.error == 0.0) continue;
    worst = std::max(worst, c.tolerance > 0.0 ? c.error / c.tolerance : INFINITY);
  }
  return worst;
}

SuiteResult suite_specfun(const SuiteOptions& opt) {
  return timed("specfun", [&](std::vector<Check>& out) {
    using namespace specfun;
    Rng rng(opt.seed);
    double rec_psi = 0.0;
    double rec_psi1 = 0.0;
    for (int i = 0; i < 1000; ++i) {
      const double x = 100.0 * rng.uniform_open();
      rec_psi = std::max(rec_psi, std::abs(digamma(x + 1) - digamma(x) - 1.0 / x));
      rec_psi1 = std::max(rec_psi1, std::abs(trigamma(x + 1) - trigamma(x) + 1.0 / (x * x)));
    }
    out.push_back({"digamma recurrence, 1000 x in (0,100], abs", rec_psi, 1e-9});
    out.push_back({"trigamma recurrence, 1000 x in (0,100], abs", rec_psi1, 1e-9});

    double d_lng = 0.0;
    double d_psi = 0.0;
    double d_psi1 = 0.0;
    const double h = 1e-5;
    for (int i = 0; i < 1000; ++i) {
      const double x = uniform(rng, 0.5, 50.0);
      const double fd_lng = (ln_gamma(x + h) - ln_gamma(x - h)) / (2 * h);
      const double fd_psi = (digamma(x + h) - digamma(x - h)) / (2 * h);
      const double fd_psi1 = (trigamma(x + h) - trigamma(x - h)) / (2 * h);
      d_lng = std::max(d_lng, rel_error(fd_lng, digamma(x), kGradFloor));
      d_psi = std::max(d_psi, rel_error(fd_psi, trigamma(x), kGradFloor));
      d_psi1 = std::max(d_psi1, rel_error(fd_psi1, polygamma(2, x), kGradFloor));
    }
    out.push_back({"d/dx ln_gamma vs digamma, rel", d_lng, 1e-5});
    out.push_back({"d/dx digamma vs trigamma, rel", d_psi, 1e-5});
    out.push_back({"d/dx trigamma vs polygamma(2), rel", d_psi1, 1e-5});

    double mu_err = 0.0;
    for (int p = 1; p <= 8; ++p) {
      for (int i = 0; i < 100; ++i) {
        const double a = uniform(rng, 0.01, 200.0);
        double product = 1.0;
        for (int j = 0; j < p; ++j) product *= a + j;
        mu_err = std::max(mu_err, rel_error(mu(a, p), product));
      }
    }
    out.push_back({"mu vs rising factorial, p in 1..8, rel", mu_err, 1e-12});

    const double pi2_6 = std::numbers::pi * std::numbers::pi / 6.0;
    double golden = 0.0;
    golden = std::max(golden, std::abs(ln_gamma(1.0)));
    golden = std::max(golden, std::abs(ln_gamma(5.0) - std::log(24.0)));
    golden = std::max(golden, std::abs(ln_gamma(0.5) - 0.5 * std::log(std::numbers::pi)));
    golden = std::max(golden, rel_error(digamma(1.0), -std::numbers::egamma));
    double harmonic = 0.0;
    for (int k = 1; k <= 9; ++k) harmonic += 1.0 / k;
    golden = std::max(golden, rel_error(digamma(10.0), harmonic - std::numbers::egamma));
    golden = std::max(golden, rel_error(polygamma(1, 1.0), pi2_6));
    golden = std::max(golden, rel_error(polygamma(1, 3.0), pi2_6 - 1.25));
    out.push_back({"closed-form values (ln_gamma abs, psi/psi1 rel)", golden, 1e-12});
  });
}

SuiteResult suite_dirichlet(const SuiteOptions& opt) {
  return timed("dirichlet", [&](std::vector<Check>& out) {
    Rng rng(opt.seed + 1);
    // Trapezoid rule over p1 in (0, 1) for K = 2. Endpoints contribute 0 or a
    // finite value because all alpha >= 1.
    double worst_mass = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
      const Concentration a = random_alpha(rng, 2, 1.0, 10.0);
      const std::size_t n = 100'000;
      double mass = 0.0;
      for (std::size_t i = 0; i <= n; ++i) {
        const double p1 = static_cast<double>(i) / n;
        const double p[2] = {p1, 1.0 - p1};
        double f = 0.0;
        const bool edge = (p1 == 0.0 && a[0] > 1.0) || (p1 == 1.0 && a[1] > 1.0);
        if (!edge) f = std::exp(dirichlet::log_density(p, a));
        mass += (i == 0 || i == n ? 0.5 : 1.0) * f;
      }
      mass /= static_cast<double>(n);
      worst_mass = std::max(worst_mass, std::abs(mass - 1.0));
    }
    out.push_back({"density integrates to 1 (K=2, 20 alphas), abs", worst_mass, 1e-4});

    // Sample mean within 3 standard errors of alpha / alpha_0.
    double worst_z = 0.0;
    for (int trial = 0; trial < 10; ++trial) {
      const std::size_t k = 2 + rng.below(4);
      const Concentration a = random_alpha(rng, k, 1.0, 10.0);
      const auto mean_expected = dirichlet::predictive_probs(a);
      const std::size_t draws = 20'000;
      std::vector<double> sum(k, 0.0);
      std::vector<double> sum_sq(k, 0.0);
      for (std::size_t s = 0; s < draws; ++s) {
        const auto x = dirichlet::sample(a, rng);
        for (std::size_t j = 0; j < k; ++j) {
          sum[j] += x[j];
          sum_sq[j] += x[j] * x[j];
        }
      }
      for (std::size_t j = 0; j < k; ++j) {
        const double m = sum[j] / draws;
        const double var = sum_sq[j] / draws - m * m;
        const double se = std::sqrt(var / draws);
        worst_z = std::max(worst_z, std::abs(m - mean_expected[j]) / se);
      }
    }
    out.push_back({"sample mean vs predictive probs, |z|", worst_z, 3.0});

    std::size_t bad_fisher = 0;
    double fisher_c = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
      const std::size_t k = 2 + rng.below(9);
      const Concentration a = random_alpha(rng, k, 1.0, 20.0);
      const std::size_t c = rng.below(k);
      const auto tilde = dirichlet::modified_concentration(a, c);
      const auto j = dirichlet::fisher_diag(tilde);
      for (double v : j) bad_fisher += v > 0.0 ? 0 : 1;
      fisher_c = std::max(fisher_c, rel_error(j[c], specfun::trigamma(1.0) - specfun::trigamma(tilde.strength())));
    }
    out.push_back({"fisher diagonal non-positive entries", static_cast<double>(bad_fisher), 0.0});
    out.push_back({"fisher diagonal at c equals psi1(1) - psi1(alpha~0), rel", fisher_c, 1e-12});
  });
}

SuiteResult suite_iad_gradients(const SuiteOptions& opt) {
  const GradFn grad_r = opt.grad_r ? opt.grad_r : GradFn(iad::grad_r);
  return timed("iad-gradients", [&](std::vector<Check>& out) {
    Rng rng(opt.seed + 2);
    const std::size_t ks[] = {2, 5, 10};
    double worst_f = 0.0;
    double worst_r = 0.0;
    std::size_t nonneg_fc = 0;
    double r_at_c = 0.0;
    for (std::size_t i = 0; i < opt.configs; ++i) {
      const std::size_t k = ks[i % 3];
      const Concentration a = random_alpha(rng, k, 1.0, 20.0);
      const std::size_t c = rng.below(k);
      const int p = 2 + static_cast<int>(rng.below(5));
      auto at = [&](std::span<const double> x) { return Concentration::from_span(x); };

      const auto gf = iad::grad_f(a, c, p);
      // The oracle differentiates an independent extended-precision form of
      // F, so its round-off stays well below the tolerance even where the
      // gradient entries are tiny.
      const auto nf = finite_difference_ld([&](std::span<const double> x) { return f_term_direct(x, c, p); },
                                           a.values());
      worst_f = std::max(worst_f, max_rel_error(gf, nf, kGradFloor));
      if (!(gf[c] < 0.0)) ++nonneg_fc;

      const auto gr = grad_r(a, c);
      const auto nr = finite_difference_ld([&](std::span<const double> x) { return r_term_direct(x, c); },
                                           a.values());
      worst_r = std::max(worst_r, max_rel_error(gr, nr, kGradFloor));
      r_at_c = std::max(r_at_c, std::abs(gr[c]));
    }
    out.push_back({fmt("grad_f vs central differences, %zu configs, rel", opt.configs), worst_f, 1e-5});
    out.push_back({"grad_f entry c not negative (count)", static_cast<double>(nonneg_fc), 0.0});
    out.push_back({fmt("grad_r vs central differences, %zu configs, rel", opt.configs), worst_r, 1e-5});
    out.push_back({"grad_r entry c, abs", r_at_c, 0.0});
  });
}

SuiteResult suite_iad_properties(const SuiteOptions& opt) {
  return timed("iad-properties", [&](std::vector<Check>& out, std::vector<std::string>& notes) {
    Rng rng(opt.seed + 3);
    std::size_t not_decreasing = 0;
    std::size_t r_negative = 0;
    std::size_t r_zero_mismatch = 0;
    std::size_t b_violations = 0;
    std::size_t b_checked = 0;
    std::size_t small_violations = 0;
    std::size_t small_checked = 0;
    for (std::size_t i = 0; i < opt.configs; ++i) {
      const std::size_t k = 2 + rng.below(9);
      std::vector<double> v(k);
      for (auto& x : v) x = uniform(rng, 1.0, 20.0);
      const std::size_t c = rng.below(k);
      const int p = 2 + static_cast<int>(rng.below(5));
      const Concentration a(v);
      auto bumped = v;
      bumped[c] += 0.5;
      if (!(iad::f_term(Concentration(bumped), c, p) < iad::f_term(a, c, p))) ++not_decreasing;

      if (iad::r_term(a, c) < 0.0) ++r_negative;
      auto ones = v;
      for (std::size_t j = 0; j < k; ++j) {
        if (j != c) ones[j] = 1.0;
      }
      if (iad::r_term(Concentration(ones), c) != 0.0) ++r_zero_mismatch;
      if (!(iad::r_term(a, c) > 0.0)) ++r_zero_mismatch;

      // Wrong-class growth. F only rises with alpha_k once alpha_k dominates;
      // with alpha_k >= 5 but comparable to the other entries the sign can
      // still be negative, which is recorded as a note.
      const auto g = iad::grad_f(a, c, p);
      for (std::size_t j = 0; j < k; ++j) {
        if (j == c || v[j] < 5.0) continue;
        ++small_checked;
        if (!(g[j] > 0.0)) ++small_violations;
      }
      const std::size_t j = (c + 1 + rng.below(k - 1)) % k;
      auto grown = v;
      grown[j] = (a.strength() - v[j]) * uniform(rng, 1.0, 4.0);
      ++b_checked;
      if (!(iad::grad_f(Concentration(grown), c, p)[j] > 0.0)) ++b_violations;
    }
    out.push_back({"f_term not decreasing when alpha_c grows (count)", static_cast<double>(not_decreasing), 0.0});
    out.push_back({"r_term negative (count)", static_cast<double>(r_negative), 0.0});
    out.push_back({"r_term zero set differs from {alpha_k = 1, k != c} (count)",
                   static_cast<double>(r_zero_mismatch), 0.0});
    out.push_back({fmt("dF/dalpha_k <= 0 for wrong class k with alpha_k >= sum of the rest (count of %zu)",
                       b_checked),
                   static_cast<double>(b_violations), 0.0});
    notes.push_back(fmt("dF/dalpha_k <= 0 in %zu of %zu wrong-class entries with alpha_k >= 5 "
                        "(growth property holds only once alpha_k dominates)",
                        small_violations, small_checked));

    IadLossConfig cfg;
    cfg.lambda = 0.1;
    cfg.t0 = 10;
    cfg.t_ramp = 20;
    std::size_t anneal_bad = 0;
    double previous = 0.0;
    for (int t = 0; t <= 100; ++t) {
      const double l = iad::anneal(t, cfg);
      if (l < previous || l > cfg.lambda) ++anneal_bad;
      previous = l;
    }
    out.push_back({"anneal decreasing or above lambda (count)", static_cast<double>(anneal_bad), 0.0});
  });
}

SuiteResult suite_iad_monte_carlo(const SuiteOptions& opt) {
  return timed("iad-monte-carlo", [&](std::vector<Check>& out) {
    Rng rng(opt.seed + 4);
    for (std::size_t k : {2, 3, 5}) {
      for (int p : {2, 4}) {
        for (std::size_t i = 0; i < opt.mc_configs; ++i) {
          const Concentration a = random_alpha(rng, k, 1.0, 10.0);
          const std::size_t c = rng.below(k);
          const auto est = mc_expected_pnorm(a, c, p, opt.mc_samples, rng.next_u64());
          const double closed = iad::f_term(a, c, p);
          std::string alpha_text;
          for (std::size_t j = 0; j < k; ++j) alpha_text += fmt(j ? ",%.3f" : "%.3f", a[j]);
          out.push_back({fmt("K=%zu p=%d c=%zu alpha=(%s) F=%.6f MC=%.6f, rel", k, p, c, alpha_text.c_str(),
                             closed, est.value),
                         rel_error(closed, est.value), 0.01});
        }
      }
    }
  });
}

SuiteResult suite_confidence(const SuiteOptions& opt) {
  return timed("confidence", [&](std::vector<Check>& out) {
    Rng rng(opt.seed + 5);
    double worst_grad = 0.0;
    std::size_t negative = 0;
    double mse_gap = 0.0;
    std::size_t barrier_order = 0;
    for (std::size_t i = 0; i < 2 * opt.configs; ++i) {
      ConfidenceConfig cfg;
      cfg.k = 2 + static_cast<int>(rng.below(9));
      cfg.lambda_c = uniform(rng, 0.0, 10.0);
      cfg.zeta = uniform(rng, 0.1, 3.0);
      cfg.m = uniform(rng, 5.0, 60.0);
      cfg.delta = uniform(rng, 0.005, 0.05);
      cfg.epsilon = uniform(rng, 0.005, 0.1);
      std::vector<ConfidenceSample> samples(1 + rng.below(8));
      for (auto& s : samples) s = {rng.uniform(), rng.uniform(), rng.below(2) == 1};

      const auto loss = confidence::confidence_loss(samples, cfg);
      std::vector<double> c_hat(samples.size());
      for (std::size_t j = 0; j < samples.size(); ++j) c_hat[j] = samples[j].c_hat;
      const auto numeric = finite_difference(
          [&](std::span<const double> x) {
            auto probe = samples;
            for (std::size_t j = 0; j < x.size(); ++j) probe[j].c_hat = x[j];
            return confidence::confidence_loss(probe, cfg).value;
          },
          c_hat);
      worst_grad = std::max(worst_grad, max_rel_error(loss.grad, numeric, kGradFloor));
      if (loss.value < 0.0) ++negative;

      auto plain = cfg;
      plain.lambda_c = 0.0;
      double mse = 0.0;
      for (const auto& s : samples) mse += (s.failed ? cfg.zeta : 1.0) * (s.c_hat - s.c_star) * (s.c_hat - s.c_star);
      mse /= static_cast<double>(samples.size());
      mse_gap = std::max(mse_gap, std::abs(confidence::confidence_loss(samples, plain).value - mse));

      // Barrier direction: correct branch falls with c_hat, error branch rises.
      const double lo = rng.uniform() * 0.9;
      const double hi = lo + 0.05;
      // Far from the threshold the sigmoid saturates to equal doubles, so
      // away from it only the direction is required; across it the change
      // must be strict.
      if (confidence::phi(hi, -cfg.m, cfg.t_correct()) > confidence::phi(lo, -cfg.m, cfg.t_correct())) ++barrier_order;
      if (confidence::phi(hi, cfg.m, cfg.t_error()) < confidence::phi(lo, cfg.m, cfg.t_error())) ++barrier_order;
      const double tc = cfg.t_correct();
      const double te = cfg.t_error();
      if (!(confidence::phi(tc + 0.01, -cfg.m, tc) < confidence::phi(tc - 0.01, -cfg.m, tc))) ++barrier_order;
      if (!(confidence::phi(te + 0.01, cfg.m, te) > confidence::phi(te - 0.01, cfg.m, te))) ++barrier_order;
    }
    out.push_back({fmt("confidence loss gradient vs central differences, %zu configs, rel", 2 * opt.configs),
                   worst_grad, 1e-5});
    out.push_back({"confidence loss negative (count)", static_cast<double>(negative), 0.0});
    out.push_back({"lambda_c = 0 differs from weighted MSE, abs", mse_gap, 1e-15});
    out.push_back({"barrier monotonicity violations (count)", static_cast<double>(barrier_order), 0.0});

    std::size_t mcp_bad = 0;
    for (int i = 0; i < 10'000; ++i) {
      const std::size_t k = 2 + rng.below(9);
      const Concentration a = random_alpha(rng, k, 1.0, 20.0);
      const std::size_t c = rng.below(k);
      const double tcp = confidence::tcp_score(a, c);
      const double mcp = confidence::mcp_score(a);
      const bool is_max = dirichlet::predicted_class(a) == c;
      if (mcp < tcp || (is_max != (mcp == tcp))) ++mcp_bad;
    }
    out.push_back({"mcp >= tcp with equality iff c = argmax, violations", static_cast<double>(mcp_bad), 0.0});
  });
}

SuiteResult suite_tcp_guarantees(const SuiteOptions& opt) {
  return timed("tcp-guarantees", [&](std::vector<Check>& out) {
    Rng rng(opt.seed + 6);
    std::vector<PredictionRecord> records(opt.tcp_draws);
    for (std::size_t i = 0; i < records.size(); ++i) {
      const std::size_t k = 2 + rng.below(9);
      // Mix diffuse and sharply peaked alphas so every regime is populated.
      const double hi = rng.below(2) == 0 ? 3.0 : 50.0;
      const Concentration a = random_alpha(rng, k, 1.0, hi);
      auto& r = records[i];
      r.index = i;
      r.true_class = static_cast<int>(rng.below(k));
      r.alpha.assign(a.values().begin(), a.values().end());
      r.probs = dirichlet::predictive_probs(a);
      r.predicted_class = static_cast<int>(dirichlet::predicted_class(a));
      r.tcp = confidence::tcp_score(a, r.true_class);
    }
    const auto report = confidence::check_tcp_guarantees(records);
    out.push_back({fmt("violations over %zu random alphas (%zu above 1/2, %zu below 1/K)", report.total,
                       report.above_half, report.below_inv_k),
                   static_cast<double>(report.violations.size()), 0.0});
  });
}

SuiteResult suite_network(const SuiteOptions& opt) {
  return timed("network", [&](std::vector<Check>& out) {
    Rng rng(opt.seed + 7);
    auto random_batch = [&](const Shape& example, std::size_t n) {
      Shape s{n};
      s.insert(s.end(), example.begin(), example.end());
      Tensor t(s);
      for (auto& v : t.values) v = rng.normal();
      return t;
    };
    auto random_labels = [&](std::size_t n, std::size_t k) {
      std::vector<int> labels(n);
      for (auto& l : labels) l = static_cast<int>(rng.below(k));
      return labels;
    };

    // Nonzero biases keep pre-activations off the relu kink; with zero
    // biases an example whose hidden units are all dead feeds an exact 0
    // into the next relu, where central differences straddle the kink.
    auto jitter_biases = [&](Parameters p) {
      for (auto& l : p.layers) {
        for (auto& b : l.bias.values) b = 0.1 * rng.normal();
      }
      return p;
    };

    double iad_worst = 0.0;
    double ce_worst = 0.0;
    double conf_worst = 0.0;
    std::size_t alpha_below_one = 0;
    for (std::size_t i = 0; i < opt.configs; ++i) {
      const std::size_t in = 2 + rng.below(4);
      const std::size_t k = 2 + rng.below(4);
      const std::size_t n = 4;
      const Shape example{in};
      const auto x = random_batch(example, n);
      const auto labels = random_labels(n, k);

      IadLossConfig iad_cfg;
      iad_cfg.p = 2 + static_cast<int>(rng.below(3));
      const auto iad_net = build_network("mlp:5-4", example, k, HeadKind::dirichlet);
      const auto iad_params = jitter_biases(init_parameters(iad_net, rng.next_u64()));
      const auto out_alpha = forward(iad_net, iad_params, x).output();
      for (double a : out_alpha.values) alpha_below_one += a >= 1.0 ? 0 : 1;
      iad_worst = std::max(iad_worst, gradcheck(iad_net, iad_params,
                                                [&](const ForwardCache& c) {
                                                  return iad_head_loss(c, labels, iad_cfg, 5.0);
                                                },
                                                x, 1e-4)
                                          .max_rel_error);

      const auto ce_net = build_network("mlp:5-4", example, k, HeadKind::softmax);
      const auto ce_params = jitter_biases(init_parameters(ce_net, rng.next_u64()));
      ce_worst = std::max(ce_worst, gradcheck(ce_net, ce_params,
                                              [&](const ForwardCache& c) { return ce_head_loss(c, labels); }, x,
                                              1e-5)
                                        .max_rel_error);

      ConfidenceConfig conf_cfg;
      conf_cfg.k = static_cast<int>(k);
      auto conf = build_confidence_net(iad_net, iad_params, 6, rng.next_u64());
      conf.params = jitter_biases(conf.params);
      std::vector<ConfidenceTarget> targets(n);
      for (auto& t : targets) t = {rng.uniform(), rng.below(2) == 1};
      conf_worst = std::max(conf_worst, gradcheck(conf.spec, conf.params,
                                                  [&](const ForwardCache& c) {
                                                    return confidence_head_loss(c, targets, conf_cfg);
                                                  },
                                                  x, 1e-4)
                                            .max_rel_error);
    }
    out.push_back({fmt("IAD loss through mlp, %zu nets, rel", opt.configs), iad_worst, 1e-4});
    out.push_back({fmt("softmax-CE through mlp, %zu nets, rel", opt.configs), ce_worst, 1e-5});
    out.push_back({fmt("confidence loss through confidence head, %zu nets, rel", opt.configs), conf_worst, 1e-4});
    out.push_back({"Dirichlet head outputs below 1 (count)", static_cast<double>(alpha_below_one), 0.0});

    // A small LeNet on 4 random 12x12 images.
    double lenet_worst = 0.0;
    for (int i = 0; i < 3; ++i) {
      const Shape example{1, 12, 12};
      const auto net = build_network("lenet:3{3}-4{3}-8", example, 3, HeadKind::dirichlet);
      const auto params = jitter_biases(init_parameters(net, rng.next_u64()));
      const auto x = random_batch(example, 4);
      const auto labels = random_labels(4, 3);
      IadLossConfig cfg;
      lenet_worst = std::max(lenet_worst, gradcheck(net, params,
                                                    [&](const ForwardCache& c) {
                                                      return iad_head_loss(c, labels, cfg, 5.0);
                                                    },
                                                    x, 1e-4)
                                              .max_rel_error);
    }
    out.push_back({"IAD loss through lenet:3{3}-4{3}-8 on 4 images, rel", lenet_worst, 1e-4});

    // Parallel kernels against the serial loops.
    double conv_gap = 0.0;
    for (int i = 0; i < 10; ++i) {
      const kernels::ConvDims d{3, 2, 8, 8, 4, 1 + rng.below(4)};
      std::vector<double> x(d.batch * d.in_ch * d.height * d.width);
      std::vector<double> w(d.out_ch * d.in_ch * d.kernel * d.kernel);
      std::vector<double> b(d.out_ch);
      for (auto* v : {&x, &w, &b}) {
        for (auto& e : *v) e = rng.normal();
      }
      const std::size_t ny = d.batch * d.out_ch * d.out_height() * d.out_width();
      std::vector<double> y(ny);
      std::vector<double> y_ref(ny);
      kernels::conv2d_forward(d, x, w, b, y);
      kernels::reference::conv2d_forward(d, x, w, b, y_ref);
      for (std::size_t j = 0; j < ny; ++j) conv_gap = std::max(conv_gap, std::abs(y[j] - y_ref[j]));
    }
    out.push_back({"conv2d vs serial reference on 8x8 inputs, abs", conv_gap, 1e-12});

    const Shape example{1, 12, 12};
    const auto net = build_network("lenet:3{3}-4{3}-8", example, 3, HeadKind::dirichlet);
    const auto params = init_parameters(net, 7);
    const auto x = random_batch(example, 5);
    const bool same = forward(net, params, x).output() == forward(net, params, x).output();
    out.push_back({"forward not bit-identical across runs", same ? 0.0 : 1.0, 0.0});
  });
}

SuiteResult suite_metrics(const SuiteOptions& opt) {
  return timed("failmetrics", [&](std::vector<Check>& out) {
    Rng rng(opt.seed + 8);
    std::size_t auroc_diff = 0;
    std::size_t ap_diff = 0;
    std::size_t fpr_diff = 0;
    std::size_t transform_diff = 0;
    std::size_t cdf_bad = 0;
    std::size_t trials = 0;
    while (trials < opt.metric_trials) {
      const std::size_t n = 2 + rng.below(199);
      // Half the trials draw from a coarse grid to force ties.
      const bool coarse = rng.below(2) == 0;
      std::vector<ScoredOutcome> v(n);
      for (auto& o : v) {
        o.score = coarse ? static_cast<double>(rng.below(10)) / 10.0 : rng.uniform();
        o.correct = rng.below(3) != 0;
      }
      const bool both = std::any_of(v.begin(), v.end(), [](auto& o) { return o.correct; }) &&
                        std::any_of(v.begin(), v.end(), [](auto& o) { return !o.correct; });
      if (!both) continue;
      ++trials;
      const double tpr = uniform(rng, 0.05, 1.0);
      const double au = metrics::auroc(v);
      const double aps = metrics::auprc(v, Positive::success);
      const double ape = metrics::auprc(v, Positive::error);
      const double fpr = metrics::fpr_at_tpr(v, tpr);
      if (au != auroc_pairwise(v)) ++auroc_diff;
      if (aps != average_precision_bruteforce(v, false)) ++ap_diff;
      if (ape != average_precision_bruteforce(v, true)) ++ap_diff;
      if (fpr != fpr_at_tpr_sweep(v, tpr)) ++fpr_diff;

      auto moved = v;
      for (auto& o : moved) o.score = std::exp(3.0 * o.score) + o.score;
      if (metrics::auroc(moved) != au || metrics::auprc(moved, Positive::success) != aps ||
          metrics::auprc(moved, Positive::error) != ape || metrics::fpr_at_tpr(moved, tpr) != fpr) {
        ++transform_diff;
      }

      std::vector<double> scores(n);
      for (std::size_t i = 0; i < n; ++i) scores[i] = v[i].score;
      const auto cdf = metrics::empirical_cdf(scores);
      for (std::size_t i = 1; i < cdf.size(); ++i) {
        if (!(cdf[i].score > cdf[i - 1].score) || !(cdf[i].fraction > cdf[i - 1].fraction)) ++cdf_bad;
      }
      if (cdf.back().fraction != 1.0) ++cdf_bad;
    }
    out.push_back({fmt("auroc != pairwise oracle (count of %zu sets)", trials), static_cast<double>(auroc_diff), 0.0});
    out.push_back({"auprc != brute-force AP (count, both positives)", static_cast<double>(ap_diff), 0.0});
    out.push_back({"fpr_at_tpr != threshold sweep (count)", static_cast<double>(fpr_diff), 0.0});
    out.push_back({"changed under increasing transform (count)", static_cast<double>(transform_diff), 0.0});
    out.push_back({"CDF not increasing or not ending at 1 (count)", static_cast<double>(cdf_bad), 0.0});
  });
}

std::vector<SuiteResult> run_all_suites(const SuiteOptions& opt) {
  return {suite_specfun(opt),        suite_dirichlet(opt),  suite_iad_gradients(opt),
          suite_iad_properties(opt), suite_iad_monte_carlo(opt), suite_confidence(opt),
          suite_tcp_guarantees(opt), suite_network(opt),    suite_metrics(opt)};
}

}  // namespace iadfp::oracles
