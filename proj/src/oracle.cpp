#include "mvmatern/oracle.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "fftw_guard.hpp"
#include "mvmatern/errors.hpp"
#include "mvmatern/quadrature.hpp"
#include "mvmatern/specfun.hpp"
#include "powertail.hpp"
#include "spectral_series.hpp"

namespace mvm::oracle {
namespace {

constexpr double kPi = 3.14159265358979323846;

double min_scale(const ModelSpec& m) {
  double a = m.processes.front().a;
  for (const auto& p : m.processes) a = std::min(a, p.a);
  return a;
}

double max_scale(const ModelSpec& m) {
  double a = m.processes.front().a;
  for (const auto& p : m.processes) a = std::max(a, p.a);
  return a;
}

// ascending breakpoints for [-X, X]: always 0 and the process scales, plus
// segments of bounded phase so the error estimator sees the oscillation
std::vector<double> phase_breaks(double X, double h, double a_min, double a_max) {
  std::vector<double> pos{a_min, 10.0 * a_max};
  const double ah = std::fabs(h);
  if (ah > 1e-12) {
    const double step = 2.0 * kPi / ah;
    const std::size_t count = (std::size_t)(X / step);
    if (count > 200000) fail(errc::numeric, "oscillatory quadrature needs too many segments");
    for (double x = step; x < X; x += step) pos.push_back(x);
  }
  std::sort(pos.begin(), pos.end());
  pos.erase(std::unique(pos.begin(), pos.end()), pos.end());
  while (!pos.empty() && pos.back() >= X) pos.pop_back();

  std::vector<double> out;
  out.reserve(2 * pos.size() + 3);
  out.push_back(-X);
  for (auto it = pos.rbegin(); it != pos.rend(); ++it) out.push_back(-*it);
  out.push_back(0.0);
  for (double x : pos) out.push_back(x);
  out.push_back(X);
  return out;
}

double require_converged(const quad::Result& r, const char* what) {
  if (!r.converged)
    fail(errc::numeric, std::string("half-line quadrature did not converge in ") + what);
  return r.value;
}

}  // namespace

double quadrature_cov(const ModelSpec& m, int j, int k, double h,
                      const QuadratureConfig& cfg, double* imag_residue) {
  require_valid(m);
  if (m.dim != 1) fail(errc::args, "quadrature_cov handles d=1 only");
  if (j < 0 || k < 0 || j >= m.p() || k >= m.p())
    fail(errc::args, "process index out of range");
  if (!(cfg.abs_tol > 0.0) || !(cfg.rel_tol > 0.0) || cfg.max_subdivisions < 1)
    fail(errc::args, "quadrature tolerances must be positive");

  const double a_min = min_scale(m);
  const double a_max = max_scale(m);
  const bool gaussian = m.variant == Variant::SQEXP;
  double X = cfg.truncation_radius > 0.0
                 ? cfg.truncation_radius
                 : 1e3 * std::max(1.0, 1.0 / a_min);
  // the squared-exponential density is numerically zero long before the
  // power-law default span
  if (gaussian) X = std::min(X, 20.0 * std::sqrt(a_max) + 5.0);

  quad::Options opt;
  opt.abs_tol = cfg.abs_tol;
  opt.rel_tol = cfg.rel_tol;
  opt.max_subdivisions = cfg.max_subdivisions;
  opt.throw_on_nonconvergence = true;

  const auto f = [&](double x) -> std::complex<double> {
    return std::exp(std::complex<double>(0.0, h * x)) *
           spectral_density_d1(m, j, k, x);
  };
  const auto body =
      quad::integrate_segments_complex(f, phase_breaks(X, h, a_min, a_max), opt);

  double tail = 0.0;
  if (!gaussian) {
    tail::PowerSeries s = detail::channel_tail_series(m, j, k, 10);
    if (h < 0.0) s = detail::conj_series(s);
    tail = 2.0 * tail::series_tail_fourier(s, std::fabs(h), X).real();
  }
  if (imag_residue) *imag_residue = std::fabs(body.value.imag());
  return body.value.real() + tail;
}

Eigen::ArrayXd hilbert_numeric(const Eigen::ArrayXd& samples, double spacing) {
  const int n = (int)samples.size();
  if (n < 8) fail(errc::args, "hilbert_numeric needs at least 8 samples");
  if (!(spacing > 0.0)) fail(errc::args, "sample spacing must be positive");

  const int nc = n / 2 + 1;
  double* in = nullptr;
  fftw_complex* spec = nullptr;
  fftw_plan fwd = nullptr, bwd = nullptr;
  {
    std::lock_guard<std::mutex> lk(detail::fftw_mutex());
    in = fftw_alloc_real((std::size_t)n);
    spec = fftw_alloc_complex((std::size_t)nc);
    fwd = fftw_plan_dft_r2c_1d(n, in, spec, FFTW_ESTIMATE);
    bwd = fftw_plan_dft_c2r_1d(n, spec, in, FFTW_ESTIMATE);
  }
  for (int i = 0; i < n; ++i) in[i] = samples(i);
  fftw_execute(fwd);
  // multiply by -i at positive frequencies; the zero and Nyquist bins have no
  // signed frequency and are dropped
  spec[0][0] = spec[0][1] = 0.0;
  for (int i = 1; i < nc - 1; ++i) {
    const double re = spec[i][0], im = spec[i][1];
    spec[i][0] = im;
    spec[i][1] = -re;
  }
  if (n % 2 == 0) spec[nc - 1][0] = spec[nc - 1][1] = 0.0;
  fftw_execute(bwd);

  Eigen::ArrayXd out(n);
  for (int i = 0; i < n; ++i) out(i) = in[i] / n;
  {
    std::lock_guard<std::mutex> lk(detail::fftw_mutex());
    fftw_destroy_plan(fwd);
    fftw_destroy_plan(bwd);
    fftw_free(in);
    fftw_free(spec);
  }
  return out;
}

double mixture_density(double u, double nu) {
  if (!(nu > 0.0)) fail(errc::args, "mixture_density needs nu > 0");
  if (!(u > 0.0)) return 0.0;
  const double lg = -(nu + 1.0) * std::log(u) - 0.25 / u -
                    2.0 * nu * std::log(2.0) - sf::lgamma_fn(nu);
  return std::exp(lg);
}

double schoenberg_mixture(double z, double nu) {
  if (!(z > 0.0) || !(nu > 0.0)) fail(errc::args, "schoenberg_mixture needs z, nu > 0");
  const double z2 = z * z;
  const auto f = [&](double u) { return std::exp(-z2 * u) * mixture_density(u, nu); };
  return require_converged(quad::integrate_half_line(f, 1e-13, 10),
                           "schoenberg_mixture");
}

double dawson_mixture(double h, double nu) {
  if (!(nu > 0.0)) fail(errc::args, "dawson_mixture needs nu > 0");
  if (h == 0.0) return 0.0;
  const auto f = [&](double u) {
    return sf::dawson(std::sqrt(u) * h) * mixture_density(u, nu);
  };
  const double v = require_converged(quad::integrate_half_line(f, 1e-13, 10),
                                     "dawson_mixture");
  // oriented so the result equals -H[matern] (the imaginary-measure
  // cross-covariance shape); the bare mixture integral is its reflection
  return -2.0 / std::sqrt(kPi) * v;
}

double matern_density_check(double nu, int d) {
  if (!(nu > 0.0)) fail(errc::args, "matern_density_check needs nu > 0");
  if (d != 1 && d != 2) fail(errc::args, "matern_density_check handles d in {1,2}");
  const double c = std::exp(sf::lgamma_fn(nu + 0.5 * d) - sf::lgamma_fn(nu) -
                            0.5 * d * std::log(kPi));
  if (d == 1) {
    const auto f = [&](double x) { return std::pow(1.0 + x * x, -nu - 0.5); };
    return 2.0 * c * require_converged(quad::integrate_half_line(f, 1e-13, 10),
                                       "matern_density_check");
  }
  const auto f = [&](double r) {
    return 2.0 * kPi * r * std::pow(1.0 + r * r, -nu - 1.0);
  };
  return c * require_converged(quad::integrate_half_line(f, 1e-13, 10),
                               "matern_density_check");
}

}  // namespace mvm::oracle
