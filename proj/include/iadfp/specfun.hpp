#pragma once

// Log-gamma, digamma, trigamma, tetragamma and the rising factorial
// mu(a) = Gamma(a + p) / Gamma(a) for integer p.
//
// All functions throw iadfp::DomainError for x <= 0 (or a non-finite x).

namespace iadfp::specfun {

double ln_gamma(double x);
double digamma(double x);
double trigamma(double x);

/// psi^(n)(x) for n in {1, 2}.
double polygamma(int n, double x);

/// ln mu(alpha) = ln Gamma(alpha + p) - ln Gamma(alpha), p >= 1 integer.
double log_mu(double alpha, int p);
double mu(double alpha, int p);

/// d/d(alpha) ln mu(alpha) = psi(alpha + p) - psi(alpha) = sum_{j<p} 1/(alpha + j).
double dlog_mu(double alpha, int p);

}  // namespace iadfp::specfun
