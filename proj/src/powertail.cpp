#include "powertail.hpp"

#include <boost/math/special_functions/bessel.hpp>
#include <cmath>

#include "mvmatern/errors.hpp"
#include "mvmatern/quadrature.hpp"

namespace mvm::tail {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

using cplx = std::complex<double>;

quad::Options chunk_options(double magnitude_scale) {
  quad::Options opt;
  opt.abs_tol = 1e-15 * magnitude_scale;
  opt.rel_tol = 1e-12;
  opt.max_subdivisions = 200;
  return opt;
}

}  // namespace

std::complex<double> power_tail_fourier(double s, double h, double X) {
  if (!(s > 1.0) || !(X > 0.0) || !(h >= 0.0))
    fail(errc::numeric, "power-law tail integral needs s > 1, X > 0, h >= 0");
  if (h == 0.0) return std::pow(X, 1.0 - s) / (s - 1.0);

  const double x_osc = std::max(X, (s + 40.0) / h);
  cplx acc = 0.0;
  if (x_osc > X * (1.0 + 1e-12)) {
    // phase per chunk stays below π and the integrand is smooth, so plain
    // adaptive segments converge immediately
    auto opt = chunk_options(std::pow(X, 1.0 - s));
    double r = X;
    while (r < x_osc * (1.0 - 1e-12)) {
      double r2 = std::min(x_osc, std::min(2.0 * r, r + kPi / h));
      acc += quad::integrate_complex(
                 [&](double t) { return std::exp(cplx(0.0, h * t)) * std::pow(t, -s); },
                 r, r2, opt)
                 .value;
      r = r2;
    }
  }

  // ∫_{X'}^∞ e^{ihr} r^{-s} dr = -e^{ihX'}X'^{-s}/(ih) + (s/(ih))∫ r^{-s-1};
  // with hX' >= s + 40 the terms shrink geometrically long enough.
  const cplx ih(0.0, h);
  cplx term = -std::exp(cplx(0.0, h * x_osc)) * std::pow(x_osc, -s) / ih;
  cplx sum = 0.0;
  for (int k = 0; k < 64; ++k) {
    sum += term;
    cplx next = term * ((s + k) / (ih * x_osc));
    if (std::abs(next) < 1e-17 * std::abs(sum) + 1e-300) break;
    if (std::abs(next) >= std::abs(term)) break;  // asymptotic floor reached
    term = next;
  }
  return acc + sum;
}

double power_tail_hankel0(double s, double h, double X) {
  if (!(s > 1.0) || !(X > 0.0) || !(h >= 0.0))
    fail(errc::numeric, "power-law tail integral needs s > 1, X > 0, h >= 0");
  if (h == 0.0) return std::pow(X, 1.0 - s) / (s - 1.0);

  const double r_asym = std::max(X, 12.0 / h);
  double acc = 0.0;
  if (r_asym > X * (1.0 + 1e-12)) {
    auto opt = chunk_options(std::pow(X, 1.0 - s));
    double r = X;
    while (r < r_asym * (1.0 - 1e-12)) {
      double r2 = std::min(r_asym, std::min(2.0 * r, r + kPi / h));
      acc += quad::integrate(
                 [&](double t) {
                   return boost::math::cyl_bessel_j(0, h * t) * std::pow(t, -s);
                 },
                 r, r2, opt)
                 .value;
      r = r2;
    }
  }

  // J₀(z) = Re[√(2/πz) e^{i(z-π/4)} Σ_k i^k (0,k) z^{-k}] with
  // (0,k) = Π_j -(2j-1)² / (k! 8^k); accurate below 1e-9 once z >= 12.
  cplx S = 0.0;
  cplx ck(1.0, 0.0);  // i^k (0,k) h^{-k}
  for (int k = 0; k <= 12; ++k) {
    cplx contrib = ck * power_tail_fourier(s + 0.5 + k, h, r_asym);
    S += contrib;
    if (std::abs(contrib) < 1e-16 * std::abs(S) + 1e-300) break;
    double m = 2.0 * k + 1.0;
    ck *= cplx(0.0, 1.0) * (-(m * m) / (8.0 * (k + 1.0) * h));
  }
  cplx pref = std::sqrt(2.0 / (kPi * h)) * std::exp(cplx(0.0, -kPi / 4.0));
  return acc + (pref * S).real();
}

PowerSeries factor_series(const Factor& f, int terms) {
  if (terms < 1) fail(errc::numeric, "factor series needs at least one term");
  PowerSeries s;
  s.coef.assign(static_cast<size_t>(terms), cplx(0.0, 0.0));
  if (f.kind == Factor::Kind::square) {
    // (a²+r²)^w = r^{2w} Σ_u binom(w,u) a^{2u} r^{-2u}
    s.lead = 2.0 * f.w;
    double binom = 1.0, apow = 1.0;
    const double a2 = f.a * f.a;
    for (int u = 0; 2 * u < terms; ++u) {
      s.coef[static_cast<size_t>(2 * u)] = binom * apow;
      apow *= a2;
      binom *= (f.w - u) / (u + 1.0);
    }
  } else {
    // (a±ir)^w = e^{±iπw/2} r^w Σ_u binom(w,u) (∓ia)^u r^{-u}
    const bool plus = f.kind == Factor::Kind::plus_i;
    s.lead = f.w;
    const cplx pref = std::exp(cplx(0.0, (plus ? 1.0 : -1.0) * kPi * f.w / 2.0));
    const cplx step = plus ? cplx(0.0, -f.a) : cplx(0.0, f.a);
    cplx cur = pref;
    double binom = 1.0;
    for (int u = 0; u < terms; ++u) {
      s.coef[static_cast<size_t>(u)] = cur * binom;
      cur *= step;
      binom *= (f.w - u) / (u + 1.0);
    }
  }
  return s;
}

PowerSeries multiply(const PowerSeries& x, const PowerSeries& y, int terms) {
  PowerSeries out;
  out.lead = x.lead + y.lead;
  out.coef.assign(static_cast<size_t>(terms), cplx(0.0, 0.0));
  for (size_t u = 0; u < x.coef.size() && u < static_cast<size_t>(terms); ++u) {
    if (x.coef[u] == cplx(0.0, 0.0)) continue;
    for (size_t v = 0; v < y.coef.size() && u + v < static_cast<size_t>(terms); ++v)
      out.coef[u + v] += x.coef[u] * y.coef[v];
  }
  return out;
}

PowerSeries scale(PowerSeries s, std::complex<double> c) {
  for (auto& v : s.coef) v *= c;
  return s;
}

std::complex<double> series_eval(const PowerSeries& s, double r) {
  cplx acc = 0.0;
  for (size_t m = 0; m < s.coef.size(); ++m)
    if (s.coef[m] != cplx(0.0, 0.0))
      acc += s.coef[m] * std::pow(r, s.lead - static_cast<double>(m));
  return acc;
}

std::complex<double> series_tail_fourier(const PowerSeries& s, double h, double X) {
  cplx acc = 0.0;
  for (size_t m = 0; m < s.coef.size(); ++m) {
    if (s.coef[m] == cplx(0.0, 0.0)) continue;
    acc += s.coef[m] * power_tail_fourier(static_cast<double>(m) - s.lead, h, X);
  }
  return acc;
}

std::complex<double> series_tail_hankel0(const PowerSeries& s, double h, double X) {
  cplx acc = 0.0;
  for (size_t m = 0; m < s.coef.size(); ++m) {
    if (s.coef[m] == cplx(0.0, 0.0)) continue;
    acc += s.coef[m] * power_tail_hankel0(static_cast<double>(m) - s.lead, h, X);
  }
  return acc;
}

}  // namespace mvm::tail
