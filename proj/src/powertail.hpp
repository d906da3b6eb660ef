#pragma once

// Oscillatory tail integrals of power-law spectral densities. Internal to the
// library; used by the FFT grid's truncation compensation and by the
// quadrature oracle's analytic tails.

#include <complex>
#include <vector>

namespace mvm::tail {

// ∫_X^∞ e^{ihr} r^{-s} dr for s > 1, h >= 0, X > 0. Quadrature in chunks of
// bounded phase up to X' with hX' ≳ s + 40, then integration by parts:
// each step lowers the magnitude by (s+k)/(hX').
std::complex<double> power_tail_fourier(double s, double h, double X);

// ∫_X^∞ J₀(hr) r^{-s} dr for s > 1, h >= 0. Quadrature while hr < 12, then
// the Hankel asymptotic J₀(z) = Re[√(2/πz) e^{i(z-π/4)} Σ_k i^k (0,k) z^{-k}]
// reduces the remainder to power_tail_fourier calls.
double power_tail_hankel0(double s, double h, double X);

// Laurent expansion Σ_m coef[m]·r^{lead-m}, valid for r above the largest
// scale parameter of the factors it was built from.
struct PowerSeries {
  double lead = 0.0;
  std::vector<std::complex<double>> coef;
};

// One multiplicand of a spectral amplitude: (a²+r²)^w, (a+ir)^w, or (a-ir)^w.
struct Factor {
  enum class Kind { square, plus_i, minus_i } kind;
  double a;
  double w;
};

// Binomial expansion of a single factor, truncated at r^{lead-terms+1}.
PowerSeries factor_series(const Factor& f, int terms);

// Cauchy product truncated to the same number of terms as the inputs.
PowerSeries multiply(const PowerSeries& x, const PowerSeries& y, int terms);

PowerSeries scale(PowerSeries s, std::complex<double> c);

std::complex<double> series_eval(const PowerSeries& s, double r);

// ∫_X^∞ e^{ihr}·series(r) dr (termwise power_tail_fourier).
std::complex<double> series_tail_fourier(const PowerSeries& s, double h, double X);

// ∫_X^∞ J₀(hr)·series(r) dr (termwise power_tail_hankel0; complex allowed,
// the kernel is real).
std::complex<double> series_tail_hankel0(const PowerSeries& s, double h, double X);

}  // namespace mvm::tail
