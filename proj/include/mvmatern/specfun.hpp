#pragma once

namespace mvm::sf {

// Gamma function with explicit pole/overflow errors (std::tgamma quietly
// returns inf/nan in those cases, which we never want to propagate).
double gamma_fn(double x);
double lgamma_fn(double x);  // log|Γ(x)|
double rgamma(double x);     // 1/Γ(x); exactly 0 at the poles

// Modified Bessel function of the second kind K_ν(z), z > 0. Half-integer
// orders use the closed exponential form with upward recurrence; other orders
// delegate to a library implementation.
double bessel_k(double nu, double z);

// Modified Bessel function of the first kind I_ν(z), z ≥ 0, real order.
double bessel_i(double nu, double z);

// Modified Struve function L_ν(z), z > 0.
double struve_l(double nu, double z);

// L_{-ν}(z) - I_ν(z), evaluated without catastrophic cancellation. The two
// functions share the leading e^z growth; a combined series (small z) or a
// dedicated asymptotic expansion (large z) keeps relative accuracy.
double struve_l_minus_bessel_i(double nu, double z);

// Tricomi confluent hypergeometric U(a,b,z) for a > 0, z > 0, via the Laplace
// integral representation (double-exponential quadrature). Valid for any real
// b, including the integer-b cases where Kummer series break down.
double hyperg_u(double a, double b, double z);

// Whittaker W_{κ,μ}(z), z > 0, through U. Requires 1/2 + |μ| - κ > 0, which
// holds throughout this library's usage.
double whittaker_w(double kappa, double mu, double z);

// log W_{κ,μ}(z) on the same domain. Lets callers combine W with large or
// tiny prefactors without intermediate under/overflow.
double whittaker_w_log(double kappa, double mu, double z);

// Exponential integrals. E1(x) = ∫_x^∞ e^{-t}/t dt for x > 0;
// Ei(x) = -PV ∫_{-x}^∞ e^{-t}/t dt for x > 0 (and Ei(x) = -E1(-x) for x < 0).
double expint_e1(double x);
double expint_ei(double x);
// Scaled variants that stay finite for large |x|: e^x E1(x) and e^{-x} Ei(x).
double expint_e1_scaled(double x);
double expint_ei_scaled(double x);

// Dawson function F(x) = e^{-x^2} ∫_0^x e^{t^2} dt. Odd in x.
double dawson(double x);

}  // namespace mvm::sf
