#include "mvmatern/covariance.hpp"

#include <fftw3.h>

#include <algorithm>
#include <array>
#include <boost/math/special_functions/bessel.hpp>
#include <cmath>
#include <cstddef>
#include <functional>
#include <mutex>
#include <sstream>
#include <vector>

#include "mvmatern/errors.hpp"
#include "mvmatern/quadrature.hpp"
#include "mvmatern/specfun.hpp"
#include "powertail.hpp"
#include "fftw_guard.hpp"
#include "spectral_series.hpp"

namespace mvm {
namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;
constexpr double kLn2 = 0.6931471805599453094172321214581766;
using cplx = std::complex<double>;

double sgn(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

bool near_eq(double x, double y) {
  return std::fabs(x - y) <= 1e-12 * std::max(1.0, std::fabs(x) + std::fabs(y));
}

void check_pair(const ProcessParams& pj, const ProcessParams& pk, const char* fn) {
  for (const ProcessParams* p : {&pj, &pk}) {
    if (!std::isfinite(p->nu) || !(p->nu > 0.0) || !std::isfinite(p->a) || !(p->a > 0.0))
      fail(errc::args, std::string(fn) + ": requires finite nu > 0 and a > 0");
  }
}

// log of c(1,ν,a) = a^ν sqrt(Γ(ν+1/2)) / (π^{1/4} sqrt(Γ(ν)))
double log_norm_d1(double nu, double a) {
  return nu * std::log(a) + 0.5 * sf::lgamma_fn(nu + 0.5) - 0.25 * std::log(kPi) -
         0.5 * sf::lgamma_fn(nu);
}

// --- closed forms for the imaginary-measure kernel (unit Im σ, canonical
// geometry: φ* = +1, imaginary axis = +1) ---

// equal smoothness, equal scale, 2ν not an integer: Struve/Bessel form
double imag_claim1(double h, double nu, double a) {
  if (h == 0.0) return 0.0;
  const double z = a * std::fabs(h);
  const double diff = sf::struve_l_minus_bessel_i(nu, z);
  const double pref = std::exp((1.0 - nu) * kLn2 - sf::lgamma_fn(nu) + nu * std::log(z));
  return sgn(h) * (kPi / (2.0 * std::cos(kPi * nu))) * pref * diff;
}

// shared E1/Ei combination; the first scale slot pairs with E1
double expint_pair(double h, double x, double y) {
  const double z = std::fabs(h);
  return -(sgn(h) / kPi) *
         (sf::expint_e1_scaled(x * z) + sf::expint_ei_scaled(y * z));
}

// ν_j = ν_k = 1/2, any scales
double imag_claim2(double h, double aj, double ak) {
  if (h == 0.0) return 0.0;
  const double ap = 0.5 * (aj + ak);
  const double r = (h <= 0.0) ? expint_pair(h, aj, ak) : expint_pair(h, ak, aj);
  return std::sqrt(aj * ak) / ap * r;
}

// ν_j = ν_k = 3/2, equal scales
double imag_claim3(double h, double a) {
  if (h == 0.0) return 0.0;
  const double z = a * std::fabs(h);
  return (z + 1.0) * expint_pair(h, a, a) +
         (2.0 * a * h / kPi) * sf::expint_e1_scaled(z);
}

ImagBackend plan_imag_backend(double nuj, double nuk, double aj, double ak) {
  if (!near_eq(nuj, nuk)) return ImagBackend::fft;
  const double nu = 0.5 * (nuj + nuk);
  const bool same_a = near_eq(aj, ak);
  if (std::fabs(nu - 0.5) <= 1e-9) return ImagBackend::expint_half;
  if (same_a && std::fabs(nu - 1.5) <= 1e-9) return ImagBackend::expint_three_half;
  if (same_a && std::fabs(2.0 * nu - std::round(2.0 * nu)) > 1e-6)
    return ImagBackend::struve_bessel;
  return ImagBackend::fft;
}

// --- FFT table machinery ---

// C² taper to zero across [X-δ, X]; sampling the density with this weight
// makes the frequency-ball complement exactly the region the analytic tail
// correction integrates over.
struct Blend {
  double X = 0.0;
  double delta = 0.0;
  double weight(double r) const {
    if (r <= X - delta) return 1.0;
    if (r >= X) return 0.0;
    const double u = (X - r) / delta;
    return u * u * u * (10.0 + u * (-15.0 + 6.0 * u));
  }
};

struct DftOut {
  Eigen::ArrayXd table;
  double residue = 0.0;
  bool all_zero = false;
};

// C(h_m) = Δx^d (-1)^{Σm} FFT_+[(-1)^{Σn} f(x_n)]_m on the centered grid.
// Nodes with a zero index have no mirror partner, so they are Hermitian-
// symmetrized in place; the adjustment is of truncation-error size.
DftOut dft_table_d1(const ModelSpec& m, int j, int k, double L, int N,
                    const Blend* blend, fftw_plan plan, fftw_complex* buf) {
  const double dx = kPi / L;
  double maxin = 0.0;
  auto put = [&](int n, cplx f) {
    maxin = std::max(maxin, std::abs(f));
    if (n & 1) f = -f;
    buf[n][0] = f.real();
    buf[n][1] = f.imag();
  };
  // a valid spectral matrix satisfies f(-x) = conj f(x), so sampling the
  // positive axis and mirroring halves the density evaluations
  for (int n = N / 2; n < N; ++n) {
    const double x = (n - N / 2) * dx;
    cplx f = spectral_density_d1(m, j, k, x);
    if (blend) f *= blend->weight(x);
    if (n == N / 2) f = cplx(f.real(), 0.0);
    put(n, f);
    if (n > N / 2) put(N - n, std::conj(f));
  }
  {
    // the most negative frequency has no sampled partner; real-force it
    cplx f = spectral_density_d1(m, j, k, (N / 2) * dx);
    if (blend) f *= blend->weight((N / 2) * dx);
    put(0, cplx(f.real(), 0.0));
  }
  DftOut out;
  out.table.setZero(N);
  if (maxin == 0.0) {
    out.all_zero = true;
    return out;
  }
  fftw_execute(plan);
  double maxre = 0.0, maxim = 0.0;
  for (int t = 0; t < N; ++t) {
    const double s = (t & 1) ? -dx : dx;
    const double re = s * buf[t][0];
    maxre = std::max(maxre, std::fabs(re));
    maxim = std::max(maxim, std::fabs(s * buf[t][1]));
    out.table(t) = re;
  }
  out.residue = maxim / std::max(maxre, 1e-300);
  return out;
}

DftOut dft_table_d2(const ModelSpec& m, int j, int k, double L, int N,
                    const Blend* blend, fftw_plan plan, fftw_complex* buf) {
  const double dx = kPi / L;
  double maxin = 0.0;
  Eigen::VectorXd x(2);
  for (int n1 = 0; n1 < N; ++n1) {
    x(0) = (n1 - N / 2) * dx;
    for (int n2 = 0; n2 < N; ++n2) {
      x(1) = (n2 - N / 2) * dx;
      cplx f = spectral_density_cartesian(m, j, k, x);
      if (blend) f *= blend->weight(x.norm());
      maxin = std::max(maxin, std::abs(f));
      fftw_complex& cell = buf[(std::size_t)n1 * N + n2];
      cell[0] = f.real();
      cell[1] = f.imag();
    }
  }
  DftOut out;
  out.table.setZero((Eigen::Index)N * N);
  if (maxin == 0.0) {
    out.all_zero = true;
    return out;
  }
  // symmetrize the unpaired n1=0 and n2=0 lines: average each node with the
  // conjugate of its negated-frequency partner within the line
  auto avg_pair = [&](std::size_t ia, std::size_t ib) {
    const cplx fa(buf[ia][0], buf[ia][1]);
    const cplx fb(buf[ib][0], buf[ib][1]);
    const cplx g = 0.5 * (fa + std::conj(fb));
    buf[ia][0] = g.real();
    buf[ia][1] = g.imag();
    buf[ib][0] = g.real();
    buf[ib][1] = -g.imag();
  };
  for (int n2 = 1; n2 < N / 2; ++n2) avg_pair((std::size_t)n2, (std::size_t)(N - n2));
  for (int n1 = 1; n1 < N / 2; ++n1)
    avg_pair((std::size_t)n1 * N, (std::size_t)(N - n1) * N);
  buf[0][1] = 0.0;
  buf[(std::size_t)N / 2][1] = 0.0;
  buf[(std::size_t)(N / 2) * N][1] = 0.0;
  for (int n1 = 0; n1 < N; ++n1) {
    for (int n2 = (n1 & 1) ? 0 : 1; n2 < N; n2 += 2) {
      fftw_complex& cell = buf[(std::size_t)n1 * N + n2];
      cell[0] = -cell[0];
      cell[1] = -cell[1];
    }
  }
  fftw_execute(plan);
  const double scale = dx * dx;
  double maxre = 0.0, maxim = 0.0;
  for (int t1 = 0; t1 < N; ++t1) {
    for (int t2 = 0; t2 < N; ++t2) {
      const std::size_t idx = (std::size_t)t1 * N + t2;
      const double s = ((t1 + t2) & 1) ? -scale : scale;
      const double re = s * buf[idx][0];
      maxre = std::max(maxre, std::fabs(re));
      maxim = std::max(maxim, std::fabs(s * buf[idx][1]));
      out.table((Eigen::Index)idx) = re;
    }
  }
  out.residue = maxim / std::max(maxre, 1e-300);
  return out;
}

// Laurent expansion of the sampled density along the +x axis (d=1) or of
// f(r)·r for radial d=2 channels; valid for r above the scale parameters.
tail::PowerSeries channel_series(const ModelSpec& m, int j, int k, int terms) {
  tail::PowerSeries s = detail::channel_tail_series(m, j, k, terms);
  if (m.dim == 2) s.lead += 1.0;
  return s;
}

using detail::conj_series;

}  // namespace

namespace detail {

// Differentiating the partial-fraction identity sum_r 1/(z+r) = pi*cot(pi*z)
// gives closed forms in cot(pi*z); near z = 0 those cancel against the
// removed 1/z^s term, so a zeta series takes over there.
void image_lattice_sums(int smax, double z, double* out) {
  if (smax < 1 || smax > 8) fail(errc::args, "image_lattice_sums: order out of range");
  if (std::fabs(z) < 0.125) {
    static const auto zeta = [] {
      std::array<double, 24> t{};
      for (int i = 2; i < 24; ++i) t[(std::size_t)i] = std::riemann_zeta((double)i);
      return t;
    }();
    const double z2 = z * z;
    for (int s = 1; s <= smax; ++s) {
      double acc = 0.0;
      const double sign = (s % 2 == 0) ? 1.0 : -1.0;
      double zn = (s % 2 == 0) ? 1.0 : z;
      for (int n = s % 2; n <= 13; n += 2) {
        double binom = 1.0;
        for (int t = 1; t <= n; ++t) binom *= (double)(s + n - t) / t;
        acc += 2.0 * sign * binom * zeta[(std::size_t)(s + n)] * zn;
        zn *= z2;
      }
      out[s - 1] = acc;
    }
    return;
  }
  // polynomials P_q with d^q/dz^q [pi*cot(pi*z)] = pi^{q+1} P_q(cot(pi*z)),
  // from P_0 = u and P_{q+1} = -(1+u^2) P_q'(u)
  static const auto polys = [] {
    std::array<std::vector<double>, 8> ps;
    ps[0] = {0.0, 1.0};
    for (std::size_t q = 1; q < 8; ++q) {
      const auto& a = ps[q - 1];
      std::vector<double> der(a.size() - 1, 0.0);
      for (std::size_t i = 1; i < a.size(); ++i) der[i - 1] = a[i] * (double)i;
      std::vector<double> nxt(der.size() + 2, 0.0);
      for (std::size_t i = 0; i < der.size(); ++i) {
        nxt[i] -= der[i];
        nxt[i + 2] -= der[i];
      }
      ps[q] = std::move(nxt);
    }
    return ps;
  }();
  const double u = 1.0 / std::tan(kPi * z);
  double fact = 1.0;
  double zp = 1.0;
  double pip = 1.0;
  for (int s = 1; s <= smax; ++s) {
    if (s > 2) fact *= (double)(s - 1);
    zp *= z;
    pip *= kPi;
    const auto& pq = polys[(std::size_t)(s - 1)];
    double pv = 0.0;
    for (std::size_t i = pq.size(); i-- > 0;) pv = pv * u + pq[i];
    out[s - 1] = ((s % 2 == 1) ? 1.0 : -1.0) / fact * pip * pv - 1.0 / zp;
  }
}

double image_lattice_sum(int s, double z) {
  double buf[8];
  image_lattice_sums(s, z, buf);
  return buf[s - 1];
}

}  // namespace detail

namespace {

using detail::image_lattice_sums;

struct CorrOut {
  Eigen::ArrayXd corr;
  double lo = 0.0;
  double step = 0.0;
};

// Samples T(h) on a uniform lag grid until it stays below tolerance. The
// dominant oscillation is e^{ihX}, so the step is a fixed fraction of its
// period; 12 consecutive quiet nodes span enough phase that a zero crossing
// cannot fake convergence.
CorrOut walk_corr(const std::function<double(double)>& T, bool two_sided, double X,
                  double hmax, double tol, int nodes_per_cycle) {
  CorrOut out;
  out.step = 2.0 * kPi / (nodes_per_cycle * X);
  std::vector<double> fwd, bwd;
  fwd.push_back(T(0.0));
  if (two_sided) bwd.push_back(fwd[0]);
  bool any = std::fabs(fwd[0]) >= tol;
  int quiet = any ? 0 : 1;
  for (int n = 1; quiet < 12; ++n) {
    const double h = n * out.step;
    if (h > hmax) break;
    const double a = T(h);
    fwd.push_back(a);
    double mx = std::fabs(a);
    if (two_sided) {
      const double b = T(-h);
      bwd.push_back(b);
      mx = std::max(mx, std::fabs(b));
    }
    if (mx >= tol) {
      any = true;
      quiet = 0;
    } else {
      ++quiet;
    }
  }
  if (!any) return out;  // nothing above tolerance; leave the table empty
  const int nf = (int)fwd.size();
  if (two_sided) {
    out.lo = -(nf - 1) * out.step;
    out.corr.resize(2 * nf - 1);
    for (int i = 0; i < nf - 1; ++i) out.corr(i) = bwd[(std::size_t)(nf - 1 - i)];
    for (int i = 0; i < nf; ++i) out.corr(nf - 1 + i) = fwd[(std::size_t)i];
  } else {
    out.lo = 0.0;
    out.corr.resize(nf);
    for (int i = 0; i < nf; ++i) out.corr(i) = fwd[(std::size_t)i];
  }
  return out;
}

// d=1 truncation compensation: T(h) = 2·Re[rim + tail], the rim being the
// tapered-off part of [X-δ, X] and the tail the Laurent series beyond X.
// Hermitian symmetry folds the negative-frequency half into the real part.
CorrOut build_corr_d1(const ModelSpec& m, int j, int k, const Blend& bl,
                      const tail::PowerSeries& S, double L, double table_scale) {
  const tail::PowerSeries Sc = conj_series(S);
  quad::Options qo;
  qo.abs_tol = 1e-16 * std::max(table_scale, 1e-8);
  qo.rel_tol = 1e-10;
  qo.max_subdivisions = 120;
  auto T = [&, qo](double h) -> double {
    const double far = (h >= 0.0)
                           ? tail::series_tail_fourier(S, h, bl.X).real()
                           : tail::series_tail_fourier(Sc, -h, bl.X).real();
    auto rim_f = [&](double r) -> cplx {
      const double w = 1.0 - bl.weight(r);
      if (w == 0.0) return {0.0, 0.0};
      return w * spectral_density_d1(m, j, k, r) *
             std::exp(cplx(0.0, h * r));
    };
    int parts = std::max(1, (int)std::ceil(std::fabs(h) * bl.delta / kPi));
    parts = std::min(parts, 64);
    std::vector<double> seg(parts + 1);
    for (int i = 0; i <= parts; ++i)
      seg[(std::size_t)i] = bl.X - bl.delta + bl.delta * i / parts;
    const auto rim = quad::integrate_segments_complex(rim_f, seg, qo);
    return 2.0 * (far + rim.value.real());
  };
  const double tol = std::max(1e-7 * table_scale, 1e-14);
  return walk_corr(T, true, bl.X, L, tol, 24);
}

// d=2 radial channels: T(h) = 2π·[rim + tail] under the J₀ kernel.
CorrOut build_corr_d2(const ModelSpec& m, int j, const Blend& bl,
                      const tail::PowerSeries& S, double L, double table_scale) {
  quad::Options qo;
  qo.abs_tol = 1e-16 * std::max(table_scale, 1e-8);
  qo.rel_tol = 1e-10;
  qo.max_subdivisions = 120;
  auto T = [&, qo](double h) -> double {
    const double far = tail::series_tail_hankel0(S, h, bl.X).real();
    Eigen::VectorXd x(2);
    auto rim_f = [&](double r) -> double {
      const double w = 1.0 - bl.weight(r);
      if (w == 0.0) return 0.0;
      x(0) = r;
      x(1) = 0.0;
      return w * spectral_density_cartesian(m, j, j, x).real() *
             boost::math::cyl_bessel_j(0.0, h * r) * r;
    };
    int parts = std::max(1, (int)std::ceil(h * bl.delta / kPi));
    parts = std::min(parts, 64);
    std::vector<double> seg(parts + 1);
    for (int i = 0; i <= parts; ++i)
      seg[(std::size_t)i] = bl.X - bl.delta + bl.delta * i / parts;
    const auto rim = quad::integrate_segments(rim_f, seg, qo);
    return 2.0 * kPi * (far + rim.value);
  };
  const double tol = std::max(1e-7 * table_scale, 1e-14);
  return walk_corr(T, false, bl.X, std::sqrt(2.0) * L, tol, 48);
}

double corr_lookup(const Eigen::ArrayXd& corr, double lo, double step, double r) {
  const int n = (int)corr.size();
  if (n == 0) return 0.0;
  const double t = (r - lo) / step;
  if (!(t >= 0.0) || t > n - 1) return 0.0;
  if (n == 1) return corr(0);
  const int i = std::min((int)t, n - 2);
  const double w = t - i;
  return (1.0 - w) * corr(i) + w * corr(i + 1);
}

struct FftwWorkspace {
  fftw_complex* buf = nullptr;
  fftw_plan plan = nullptr;
  FftwWorkspace(int dim, int N) {
    std::lock_guard<std::mutex> lk(detail::fftw_mutex());
    buf = fftw_alloc_complex(dim == 1 ? (std::size_t)N : (std::size_t)N * N);
    if (!buf) fail(errc::numeric, "fft grid: allocation failed");
    plan = (dim == 1)
               ? fftw_plan_dft_1d(N, buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE)
               : fftw_plan_dft_2d(N, N, buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE);
    if (!plan) {
      fftw_free(buf);
      buf = nullptr;
      fail(errc::numeric, "fft grid: planner failed");
    }
  }
  ~FftwWorkspace() {
    std::lock_guard<std::mutex> lk(detail::fftw_mutex());
    if (plan) fftw_destroy_plan(plan);
    if (buf) fftw_free(buf);
  }
  FftwWorkspace(const FftwWorkspace&) = delete;
  FftwWorkspace& operator=(const FftwWorkspace&) = delete;
};

}  // namespace

double matern(double h, double a, double nu, double sigma2) {
  if (!std::isfinite(h) || !std::isfinite(a) || !(a > 0.0) || !std::isfinite(nu) ||
      !(nu > 0.0) || !std::isfinite(sigma2))
    fail(errc::args, "matern: requires finite h and sigma2, a > 0, nu > 0");
  const double z = a * std::fabs(h);
  if (z == 0.0) return sigma2;
  const double k = sf::bessel_k(nu, z);
  if (k == 0.0) return 0.0;
  return sigma2 * std::exp((1.0 - nu) * kLn2 - sf::lgamma_fn(nu) + nu * std::log(z)) * k;
}

double cross_cov_real_d1(double h, const ProcessParams& pj, const ProcessParams& pk,
                         double re_sigma) {
  check_pair(pj, pk, "cross_cov_real_d1");
  if (!std::isfinite(h) || !std::isfinite(re_sigma))
    fail(errc::args, "cross_cov_real_d1: non-finite arguments");
  if (re_sigma == 0.0) return 0.0;
  const DerivedParams dp(pj, pk);
  if (h == 0.0) {
    const double lg = pj.nu * std::log(pj.a) + pk.nu * std::log(pk.a) -
                      2.0 * dp.nu_plus * std::log(dp.a_plus) +
                      sf::lgamma_fn(2.0 * dp.nu_plus) -
                      0.5 * (sf::lgamma_fn(2.0 * pj.nu) + sf::lgamma_fn(2.0 * pk.nu));
    return re_sigma * std::exp(lg);
  }
  const double z = std::fabs(h);
  if (near_eq(pj.nu, pk.nu)) {
    // equal smoothness collapses the Whittaker function to K_ν
    const double nu = dp.nu_plus;
    const double k = sf::bessel_k(nu, dp.a_plus * z);
    if (k == 0.0) return 0.0;
    const double lg = kLn2 - nu * std::log(2.0 * dp.a_plus) +
                      nu * std::log(pj.a * pk.a * z) - h * dp.a_minus -
                      sf::lgamma_fn(nu);
    return re_sigma * std::exp(lg) * k;
  }
  const double kappa = (h > 0.0) ? dp.nu_minus : -dp.nu_minus;
  const double denom_nu = (h > 0.0) ? pj.nu : pk.nu;
  const double logw = sf::whittaker_w_log(kappa, dp.nu_plus, 2.0 * dp.a_plus * z);
  const double lg = log_norm_d1(pj.nu, pj.a) + log_norm_d1(pk.nu, pk.a) +
                    std::log(kPi) - std::log(dp.a_plus) +
                    (dp.nu_plus - 0.5) * std::log(z / (2.0 * dp.a_plus)) -
                    h * dp.a_minus - sf::lgamma_fn(denom_nu + 0.5) + logw;
  if (lg > 700.0) fail(errc::numeric, "cross_cov_real_d1: overflow");
  return re_sigma * std::exp(lg);
}

const char* imag_backend_name(ImagBackend b) {
  switch (b) {
    case ImagBackend::none: return "none";
    case ImagBackend::struve_bessel: return "struve-bessel";
    case ImagBackend::expint_half: return "expint-nu-half";
    case ImagBackend::expint_three_half: return "expint-nu-three-half";
    case ImagBackend::fft: return "fft-grid";
  }
  return "?";
}

ImagEval cross_cov_imag_d1(double h, const ProcessParams& pj, const ProcessParams& pk,
                           double im_sigma, const CovFunction* fft_fallback) {
  check_pair(pj, pk, "cross_cov_imag_d1");
  if (!std::isfinite(h) || !std::isfinite(im_sigma))
    fail(errc::args, "cross_cov_imag_d1: non-finite arguments");
  ImagEval out;
  if (im_sigma == 0.0) return out;
  out.backend = plan_imag_backend(pj.nu, pk.nu, pj.a, pk.a);
  switch (out.backend) {
    case ImagBackend::none:
      break;
    case ImagBackend::struve_bessel:
      out.value = im_sigma * imag_claim1(h, 0.5 * (pj.nu + pk.nu), 0.5 * (pj.a + pk.a));
      break;
    case ImagBackend::expint_half:
      out.value = im_sigma * imag_claim2(h, pj.a, pk.a);
      break;
    case ImagBackend::expint_three_half:
      out.value = im_sigma * imag_claim3(h, 0.5 * (pj.a + pk.a));
      break;
    case ImagBackend::fft: {
      if (fft_fallback) {
        out.value = im_sigma * fft_fallback->eval1(0, 1, h);
      } else {
        const CovFunction g = make_imag_unit_grid(pj, pk);
        out.value = im_sigma * g.eval1(0, 1, h);
      }
      break;
    }
  }
  return out;
}

CovFunction make_imag_unit_grid(const ProcessParams& pj, const ProcessParams& pk) {
  check_pair(pj, pk, "make_imag_unit_grid");
  ProcessParams qj = pj, qk = pk;
  qj.sigma = qk.sigma = 1.0;
  qj.nugget = qk.nugget = 0.0;
  const ModelSpec m = make_bivariate_d1(Variant::SMM, qj, qk, cplx(0.0, 1.0));
  FFTGrid g = default_grid(m);
  g.tail_correction = TailCorrection::full;
  return CovFunction::fft_grid(m, g);
}

double cross_cov_altfact_d1(double h, const ProcessParams& pj, const ProcessParams& pk,
                            double re_sigma) {
  check_pair(pj, pk, "cross_cov_altfact_d1");
  if (!std::isfinite(h) || !std::isfinite(re_sigma))
    fail(errc::args, "cross_cov_altfact_d1: non-finite arguments");
  if (re_sigma == 0.0) return 0.0;
  const double cj = normalization_constant(1, pj.nu, pj.a);
  const double ck = normalization_constant(1, pk.nu, pk.a);
  const DerivedParams dp(pj, pk);
  const double rel = std::fabs(pj.a - pk.a) / std::max(pj.a, pk.a);
  if (rel <= 1e-7) {
    // shared scale: the amplitude product is again a Matérn density of order
    // ν_+; evaluating at a_+ keeps the formula exact in the equal limit
    const double ceff = normalization_constant(1, dp.nu_plus, dp.a_plus);
    return re_sigma * (cj * ck) / (ceff * ceff) * matern(h, dp.a_plus, dp.nu_plus, 1.0);
  }
  if (std::fabs(pj.nu - 1.5) <= 1e-9 && std::fabs(pk.nu - 1.5) <= 1e-9) {
    const double z = std::fabs(h);
    const double num = pj.a * std::exp(-pk.a * z) - pk.a * std::exp(-pj.a * z);
    return re_sigma * cj * ck * kPi * num /
           (pj.a * pk.a * (pj.a * pj.a - pk.a * pk.a));
  }
  fail(errc::numeric,
       "cross_cov_altfact_d1: no closed form for these parameters; use the fft backend");
}

double cross_cov_sqexp_d1(double h, double a_j, double a_k, std::complex<double> sigma) {
  if (!std::isfinite(h) || !std::isfinite(a_j) || !(a_j > 0.0) || !std::isfinite(a_k) ||
      !(a_k > 0.0) || !std::isfinite(sigma.real()) || !std::isfinite(sigma.imag()))
    fail(errc::args, "cross_cov_sqexp_d1: requires finite h and sigma, a > 0");
  const double ap = 0.5 * (a_j + a_k);
  const double b = a_j * a_k / ap;
  const double pref = std::pow(a_j * a_k, 0.25) / std::sqrt(ap);
  double v = sigma.real() * std::exp(-b * h * h);
  if (sigma.imag() != 0.0)
    v -= sigma.imag() * (2.0 / std::sqrt(kPi)) * sf::dawson(std::sqrt(b) * h);
  return pref * v;
}

FFTGrid default_grid(const ModelSpec& m) {
  if (m.processes.empty()) fail(errc::args, "default_grid: model has no processes");
  double min_a = m.processes[0].a;
  for (const auto& p : m.processes) min_a = std::min(min_a, p.a);
  if (!(min_a > 0.0)) fail(errc::args, "default_grid: requires a > 0");
  FFTGrid g;
  g.half_width = std::max(10.0, 8.0 / min_a);
  g.points_per_axis = (m.dim == 2) ? 1024 : 16384;
  g.interpolation = (m.dim == 2) ? GridInterp::bilinear : GridInterp::linear;
  return g;
}

CovFunction CovFunction::closed_form(const ModelSpec& m) {
  require_valid(m);
  if (m.dim != 1)
    fail(errc::args, "closed-form covariance requires d=1; use the fft backend");
  CovFunction cf;
  cf.model_ = m;
  const int p = m.p();
  cf.channels_.resize((std::size_t)p * p);
  const double gphi = sgn(m.geometry.theta_star_phi(0));
  const double gim = sgn(m.geometry.theta_star_im(0));
  std::shared_ptr<const CovFunction> model_tab;  // lazily built full-model grid
  for (int j = 0; j < p; ++j) {
    for (int k = j; k < p; ++k) {
      Channel& c = cf.channels_[(std::size_t)chidx(j, k, p)];
      c.pj = m.processes[j];
      c.pk = m.processes[k];
      c.sre = m.cross.re(j, k);
      c.sim = m.cross.im(j, k);
      c.gphi = gphi;
      c.gim = gim;
      if (j == k) {
        if (m.variant == Variant::SQEXP) {
          c.rer = Channel::ReR::sqexp;
        } else {
          c.rer = Channel::ReR::diag_matern;
          c.re_a = c.pj.a;
          c.re_nu = c.pj.nu;
          c.re_scale = c.pj.sigma;
        }
        continue;
      }
      const bool has_re = c.sre != 0.0;
      const bool has_im = c.sim != 0.0;
      // routes for the imaginary part that reduce to the canonical kernel of
      // an equal-parameter pair (nu, a), scaled by im_scale
      auto plan_im_equal = [&](double nu, double a, double scale) {
        c.im_scale = scale;
        c.im_nu = nu;
        c.im_aj = c.im_ak = a;
        switch (plan_imag_backend(nu, nu, a, a)) {
          case ImagBackend::expint_half: c.imr = Channel::ImR::claim2; break;
          case ImagBackend::expint_three_half: c.imr = Channel::ImR::claim3; break;
          case ImagBackend::struve_bessel: c.imr = Channel::ImR::claim1; break;
          default: {
            ProcessParams q;
            q.nu = nu;
            q.a = a;
            c.imr = Channel::ImR::table;
            c.im_tab = std::make_shared<const CovFunction>(make_imag_unit_grid(q, q));
            break;
          }
        }
      };
      switch (m.variant) {
        case Variant::IM:
          break;  // zero cross channel
        case Variant::SCF:
          if (has_re) {
            c.rer = Channel::ReR::scaled_matern;
            c.re_a = c.pj.a;
            c.re_nu = c.pj.nu;
            c.re_scale = c.sre;
          }
          break;
        case Variant::SMM: {
          if (has_re) c.rer = Channel::ReR::smm;
          if (has_im) {
            switch (plan_imag_backend(c.pj.nu, c.pk.nu, c.pj.a, c.pk.a)) {
              case ImagBackend::expint_half:
                c.imr = Channel::ImR::claim2;
                c.im_aj = c.pj.a;
                c.im_ak = c.pk.a;
                break;
              case ImagBackend::expint_three_half:
                c.imr = Channel::ImR::claim3;
                c.im_aj = c.im_ak = 0.5 * (c.pj.a + c.pk.a);
                break;
              case ImagBackend::struve_bessel:
                c.imr = Channel::ImR::claim1;
                c.im_nu = 0.5 * (c.pj.nu + c.pk.nu);
                c.im_aj = c.im_ak = 0.5 * (c.pj.a + c.pk.a);
                break;
              default:
                c.imr = Channel::ImR::table;
                c.im_tab = std::make_shared<const CovFunction>(
                    make_imag_unit_grid(c.pj, c.pk));
                break;
            }
          }
          break;
        }
        case Variant::ALT: {
          if (!has_re && !has_im) break;
          const double rel =
              std::fabs(c.pj.a - c.pk.a) / std::max(c.pj.a, c.pk.a);
          const DerivedParams dp(c.pj, c.pk);
          const double cj = normalization_constant(1, c.pj.nu, c.pj.a);
          const double ck = normalization_constant(1, c.pk.nu, c.pk.a);
          if (rel <= 1e-7) {
            const double ceff = normalization_constant(1, dp.nu_plus, dp.a_plus);
            const double ratio = cj * ck / (ceff * ceff);
            if (has_re) {
              c.rer = Channel::ReR::scaled_matern;
              c.re_a = dp.a_plus;
              c.re_nu = dp.nu_plus;
              c.re_scale = c.sre * ratio;
            }
            if (has_im) plan_im_equal(dp.nu_plus, dp.a_plus, ratio);
            break;
          }
          if (!has_im && std::fabs(c.pj.nu - 1.5) <= 1e-9 &&
              std::fabs(c.pk.nu - 1.5) <= 1e-9) {
            c.rer = Channel::ReR::alt32;
            c.re_scale = c.sre;
            break;
          }
          // no closed route: take the whole channel from a model-level grid
          if (!model_tab) {
            FFTGrid g = default_grid(m);
            g.tail_correction = TailCorrection::full;
            model_tab = std::make_shared<const CovFunction>(fft_grid(m, g));
            cf.grid_ = g;
          }
          c = model_tab->channels_[(std::size_t)chidx(j, k, p)];
          break;
        }
        case Variant::MMG: {
          if (!has_re && !has_im) break;
          if (!m.mmg) fail(errc::model, "MMG variant missing per-pair parameters");
          const double njk = m.mmg->nu(j, k);
          const double ajk = m.mmg->a(j, k);
          if (has_re) {
            c.rer = Channel::ReR::scaled_matern;
            c.re_a = ajk;
            c.re_nu = njk;
            c.re_scale = c.sre;
          }
          if (has_im) plan_im_equal(njk, ajk, 1.0);
          break;
        }
        case Variant::SQEXP:
          c.rer = Channel::ReR::sqexp;
          break;
      }
    }
  }
  return cf;
}

CovFunction CovFunction::fft_grid(const ModelSpec& m, const FFTGrid& grid) {
  require_valid(m);
  if (m.dim != 1 && m.dim != 2)
    fail(errc::args, "fft covariance grids support d=1 and d=2");
  const int N = grid.points_per_axis;
  if (N < 256 || (N & (N - 1)) != 0)
    fail(errc::args, "fft grid: points_per_axis must be a power of two, at least 256");
  if (m.dim == 2 && N > 4096)
    fail(errc::args, "fft grid: points_per_axis above 4096 is not supported at d=2");
  const double L = grid.half_width;
  if (!std::isfinite(L) || !(L > 0.0))
    fail(errc::args, "fft grid: half_width must be positive");
  double min_a = m.processes[0].a;
  for (const auto& pp : m.processes) min_a = std::min(min_a, pp.a);
  if (L * min_a < 5.0 - 1e-9)
    fail(errc::args, "fft grid: half_width below 5/min(a); lag table would wrap");

  CovFunction cf;
  cf.model_ = m;
  cf.fft_ = true;
  cf.grid_ = grid;
  cf.grid_.interpolation = (m.dim == 2) ? GridInterp::bilinear : GridInterp::linear;
  const int p = m.p();
  cf.channels_.resize((std::size_t)p * p);
  const double dx = kPi / L;
  const double X = (N / 2) * dx;
  const Blend bl{X, 8.0 * dx};
  const double gphi = sgn(m.geometry.theta_star_phi(0));
  const double gim = sgn(m.geometry.theta_star_im(0));

  FftwWorkspace ws(m.dim, N);
  for (int j = 0; j < p; ++j) {
    for (int k = j; k < p; ++k) {
      Channel& c = cf.channels_[(std::size_t)chidx(j, k, p)];
      c.rer = Channel::ReR::table;
      c.pj = m.processes[j];
      c.pk = m.processes[k];
      c.sre = m.cross.re(j, k);
      c.sim = m.cross.im(j, k);
      c.gphi = gphi;
      c.gim = gim;

      double scale_pair = std::max(c.pj.a, c.pk.a);
      if (j != k && m.variant == Variant::MMG && m.mmg)
        scale_pair = std::max(scale_pair, m.mmg->a(j, k));

      bool want_corr = grid.tail_correction != TailCorrection::none &&
                       m.variant != Variant::SQEXP;
      if (j != k)
        want_corr = want_corr && grid.tail_correction == TailCorrection::full &&
                    m.dim == 1;
      if (want_corr && X < 3.0 * scale_pair) {
        want_corr = false;
        cf.warnings_.push_back(
            "tail compensation skipped for channel (" + std::to_string(j) + "," +
            std::to_string(k) + "): frequency box too small relative to the ranges");
      }

      DftOut dt = (m.dim == 1)
                      ? dft_table_d1(m, j, k, L, N, want_corr ? &bl : nullptr,
                                     ws.plan, ws.buf)
                      : dft_table_d2(m, j, k, L, N, want_corr ? &bl : nullptr,
                                     ws.plan, ws.buf);
      c.table.swap(dt.table);
      if (dt.all_zero) continue;
      cf.imag_residue_ = std::max(cf.imag_residue_, dt.residue);
      if (dt.residue > 1e-8)
        fail(errc::numeric,
             "fft grid: transform left an imaginary residue above 1e-8 of the "
             "real part; spectral matrix is not Hermitian");
      if (m.dim == 1) {
        // the DFT table is the periodization sum_r C(h + 2Lr); a channel with
        // imaginary cross mass decays like 1/h, so the image terms are far
        // from negligible. Cancel them via the analytic inverse-power tail
        // and exact lattice sums over the nonzero images.
        const std::vector<double> D = detail::channel_lag_tail(m, j, k, 6);
        if (!D.empty()) {
          const double dh = 2.0 * L / N;
          double S[8];
          for (int n = 0; n < N; ++n) {
            const double z = (-L + n * dh) / (2.0 * L);
            image_lattice_sums((int)D.size(), z, S);
            double img = 0.0;
            double pw = 1.0;
            for (int s = 1; s <= (int)D.size(); ++s) {
              pw /= 2.0 * L;
              img += D[(std::size_t)(s - 1)] * pw * S[s - 1];
            }
            c.table(n) -= img;
          }
        }
      }
      const double table_scale = c.table.abs().maxCoeff();
      if (want_corr) {
        const tail::PowerSeries S = channel_series(m, j, k, 8);
        CorrOut co = (m.dim == 1) ? build_corr_d1(m, j, k, bl, S, L, table_scale)
                                  : build_corr_d2(m, j, bl, S, L, table_scale);
        c.tail_compensated = true;
        // bake the compensation into the nodes: the raw transform equals the
        // blended covariance there, and the residual term oscillates with a
        // half-period of exactly one lag step, so interpolating it through
        // the table would misbehave between nodes
        const double dh = 2.0 * L / N;
        if (m.dim == 1) {
          for (int n = 0; n < N; ++n)
            c.table(n) += corr_lookup(co.corr, co.lo, co.step, -L + n * dh);
        } else {
          for (int n1 = 0; n1 < N; ++n1)
            for (int n2 = 0; n2 < N; ++n2)
              c.table((Eigen::Index)n1 * N + n2) += corr_lookup(
                  co.corr, co.lo, co.step,
                  std::hypot(-L + n1 * dh, -L + n2 * dh));
        }
      } else if (m.variant != Variant::SQEXP && X >= 3.0 * scale_pair) {
        // without the walk, hard truncation at |x| = X drops spectral mass
        // 2*int_X^inf f. At nonzero node lags the deficit oscillates like
        // e^{ihX} and stays near f(X)/h, but at h = 0 it lands on the table
        // in full; restore that node from the Laurent tail.
        const tail::PowerSeries S = channel_series(m, j, k, 8);
        const double miss =
            (m.dim == 1)
                ? 2.0 * tail::series_tail_fourier(S, 0.0, X).real()
                : 2.0 * kPi * tail::series_tail_hankel0(S, 0.0, X).real();
        if (m.dim == 1)
          c.table(N / 2) += miss;
        else
          c.table((Eigen::Index)(N / 2) * N + N / 2) += miss;
        if (j == k && std::fabs(miss) > 1e-3 * c.pj.sigma) {
          std::ostringstream os;
          os << "grid coarse (Nyquist): process " << j << " put fraction "
             << std::fabs(miss) / c.pj.sigma
             << " of its spectral mass beyond the box; restored at zero lag, "
               "a deficit of that order scaled by 1/(X|h|) remains elsewhere";
          cf.warnings_.push_back(os.str());
        }
      }
    }
  }
  return cf;
}

double CovFunction::table_at_d1(const Channel& c, double h) const {
  const int N = grid_.points_per_axis;
  const double L = grid_.half_width;
  const double dh = 2.0 * L / N;
  const double t = (h + L) / dh;
  if (!(t >= 0.0) || t > (double)(N - 1) + 1e-9)
    fail(errc::numeric, "lag outside covariance grid span");
  const int i = std::min((int)t, N - 2);
  const double w = t - i;
  return (1.0 - w) * c.table(i) + w * c.table(i + 1);
}

double CovFunction::table_at_d2(const Channel& c, double h1, double h2) const {
  const int N = grid_.points_per_axis;
  const double L = grid_.half_width;
  const double dh = 2.0 * L / N;
  const double t1 = (h1 + L) / dh;
  const double t2 = (h2 + L) / dh;
  if (!(t1 >= 0.0) || t1 > (double)(N - 1) + 1e-9 || !(t2 >= 0.0) ||
      t2 > (double)(N - 1) + 1e-9)
    fail(errc::numeric, "lag outside covariance grid span");
  const int i1 = std::min((int)t1, N - 2);
  const int i2 = std::min((int)t2, N - 2);
  const double w1 = t1 - i1;
  const double w2 = t2 - i2;
  auto at = [&](int r, int s) {
    return c.table((Eigen::Index)r * N + s);
  };
  return (1.0 - w1) * ((1.0 - w2) * at(i1, i2) + w2 * at(i1, i2 + 1)) +
         w1 * ((1.0 - w2) * at(i1 + 1, i2) + w2 * at(i1 + 1, i2 + 1));
}

double CovFunction::eval_pair_d1(int j, int k, double h) const {
  if (j > k) {
    std::swap(j, k);
    h = -h;
  }
  const Channel& c = channels_[(std::size_t)chidx(j, k, model_.p())];
  const double he = c.gphi * h;
  double val = 0.0;
  switch (c.rer) {
    case Channel::ReR::zero:
      break;
    case Channel::ReR::diag_matern:
    case Channel::ReR::scaled_matern:
      val = matern(h, c.re_a, c.re_nu, c.re_scale);
      break;
    case Channel::ReR::smm:
      val = cross_cov_real_d1(he, c.pj, c.pk, c.sre);
      break;
    case Channel::ReR::alt32:
      val = cross_cov_altfact_d1(h, c.pj, c.pk, c.re_scale);
      break;
    case Channel::ReR::sqexp:
      return cross_cov_sqexp_d1(h, c.pj.a, c.pk.a, cplx(c.sre, c.gim * c.sim));
    case Channel::ReR::table:
      return table_at_d1(c, h);
  }
  const double gs = c.sim * c.gim * c.gphi * c.im_scale;
  switch (c.imr) {
    case Channel::ImR::zero:
      break;
    case Channel::ImR::claim1:
      val += gs * imag_claim1(he, c.im_nu, c.im_aj);
      break;
    case Channel::ImR::claim2:
      val += gs * imag_claim2(he, c.im_aj, c.im_ak);
      break;
    case Channel::ImR::claim3:
      val += gs * imag_claim3(he, c.im_aj);
      break;
    case Channel::ImR::table:
      val += gs * c.im_tab->eval1(0, 1, he);
      break;
  }
  return val;
}

double CovFunction::eval(int j, int k, const Eigen::VectorXd& h) const {
  const int p = model_.p();
  if (j < 0 || j >= p || k < 0 || k >= p)
    fail(errc::args, "covariance eval: variable index out of range");
  if ((int)h.size() != model_.dim)
    fail(errc::args, "covariance eval: lag arity does not match the model dimension");
  if (!h.allFinite()) fail(errc::args, "covariance eval: non-finite lag");
  if (model_.dim == 1) return eval_pair_d1(j, k, h(0));
  double h1 = h(0), h2 = h(1);
  if (j > k) {
    std::swap(j, k);
    h1 = -h1;
    h2 = -h2;
  }
  return table_at_d2(channels_[(std::size_t)chidx(j, k, p)], h1, h2);
}

double CovFunction::eval1(int j, int k, double h) const {
  if (model_.dim != 1) fail(errc::args, "eval1 requires a d=1 model");
  const int p = model_.p();
  if (j < 0 || j >= p || k < 0 || k >= p)
    fail(errc::args, "covariance eval: variable index out of range");
  if (!std::isfinite(h)) fail(errc::args, "covariance eval: non-finite lag");
  return eval_pair_d1(j, k, h);
}

Eigen::MatrixXd CovFunction::matrix_at(const Eigen::VectorXd& h) const {
  const int p = model_.p();
  Eigen::MatrixXd out(p, p);
  for (int j = 0; j < p; ++j)
    for (int k = 0; k < p; ++k) out(j, k) = eval(j, k, h);
  return out;
}

std::string CovFunction::backend_desc(int j, int k) const {
  const int p = model_.p();
  if (j < 0 || j >= p || k < 0 || k >= p)
    fail(errc::args, "backend_desc: variable index out of range");
  if (j > k) std::swap(j, k);
  const Channel& c = channels_[(std::size_t)chidx(j, k, p)];
  std::ostringstream os;
  switch (c.rer) {
    case Channel::ReR::zero: os << "zero"; break;
    case Channel::ReR::diag_matern: os << "matern"; break;
    case Channel::ReR::scaled_matern: os << "scaled-matern"; break;
    case Channel::ReR::smm:
      os << (near_eq(c.pj.nu, c.pk.nu) ? "cross-bessel" : "cross-whittaker");
      break;
    case Channel::ReR::alt32: os << "altfact-exponential-pair"; break;
    case Channel::ReR::sqexp: os << "sqexp-dawson"; break;
    case Channel::ReR::table:
      os << "fft-table[N=" << grid_.points_per_axis << ",L=" << grid_.half_width
         << (c.tail_compensated ? ",tail-compensated" : "") << "]";
      break;
  }
  switch (c.imr) {
    case Channel::ImR::zero: break;
    case Channel::ImR::claim1:
      os << "+im:" << imag_backend_name(ImagBackend::struve_bessel);
      break;
    case Channel::ImR::claim2:
      os << "+im:" << imag_backend_name(ImagBackend::expint_half);
      break;
    case Channel::ImR::claim3:
      os << "+im:" << imag_backend_name(ImagBackend::expint_three_half);
      break;
    case Channel::ImR::table:
      os << "+im:" << imag_backend_name(ImagBackend::fft);
      break;
  }
  return os.str();
}

double cross_cov(const ModelSpec& m, int j, int k, const Eigen::VectorXd& h) {
  const CovFunction cf = (m.dim == 1) ? CovFunction::closed_form(m)
                                      : CovFunction::fft_grid(m, default_grid(m));
  return cf.eval(j, k, h);
}

Eigen::MatrixXd cov_matrix(const CovFunction& cf,
                           const std::vector<Eigen::VectorXd>& locations,
                           const std::vector<int>& var_index, bool add_nugget) {
  const int n = (int)locations.size();
  if ((int)var_index.size() != n)
    fail(errc::args, "cov_matrix: locations and var_index lengths differ");
  const ModelSpec& m = cf.model();
  for (int i = 0; i < n; ++i) {
    if ((int)locations[(std::size_t)i].size() != m.dim)
      fail(errc::args, "cov_matrix: location arity does not match the model dimension");
    if (var_index[(std::size_t)i] < 0 || var_index[(std::size_t)i] >= m.p())
      fail(errc::args, "cov_matrix: variable index out of range");
  }
  Eigen::MatrixXd g(n, n);
  for (int r = 0; r < n; ++r) {
    for (int s = r; s < n; ++s) {
      const double v = cf.eval(var_index[(std::size_t)r], var_index[(std::size_t)s],
                               locations[(std::size_t)r] - locations[(std::size_t)s]);
      g(r, s) = v;
      g(s, r) = v;
    }
  }
  if (add_nugget)
    for (int r = 0; r < n; ++r)
      g(r, r) += m.processes[(std::size_t)var_index[(std::size_t)r]].nugget;
  return g;
}

ModelSpec reflect_model(const ModelSpec& m) {
  if (m.variant != Variant::SMM)
    fail(errc::model, "reflect_model: defined for the complex-factorization variant only");
  ModelSpec r = m;
  r.cross.im = -m.cross.im;
  r.geometry.theta_star_phi = -m.geometry.theta_star_phi;
  return r;
}

double coherence_sq(const ModelSpec& m, int j, int k, const Eigen::VectorXd& theta) {
  if (m.variant != Variant::SMM)
    fail(errc::model, "coherence_sq: defined for the complex-factorization variant only");
  const int p = m.p();
  if (j < 0 || j >= p || k < 0 || k >= p)
    fail(errc::args, "coherence_sq: variable index out of range");
  if ((int)theta.size() != m.dim)
    fail(errc::args, "coherence_sq: direction arity does not match the model dimension");
  if (!(theta.norm() > 0.0)) fail(errc::args, "coherence_sq: zero direction");
  if (j == k) return 1.0;
  const double s = sgn(theta.dot(m.geometry.theta_star_im));
  const cplx mu(m.cross.re(j, k), s * m.cross.im(j, k));
  return std::norm(mu) / (m.processes[(std::size_t)j].sigma * m.processes[(std::size_t)k].sigma);
}

TailRatioResult tail_ratio(double h, const ProcessParams& pj, const ProcessParams& pk) {
  check_pair(pj, pk, "tail_ratio");
  if (!std::isfinite(h) || !(h > 0.0)) fail(errc::args, "tail_ratio: requires h > 0");
  const DerivedParams dp(pj, pk);
  // log of the leading coefficient of the unit-measure kernel as h -> inf
  const double logc = 0.5 * std::log(pj.a) + pk.nu * std::log(pk.a) +
                      0.5 * (sf::lgamma_fn(pk.nu + 0.5) - sf::lgamma_fn(pj.nu + 0.5)) +
                      kLn2 + 0.5 * std::log(kPi) -
                      (pk.nu + 0.5) * std::log(2.0 * dp.a_plus) -
                      0.5 * (sf::lgamma_fn(pj.nu) + sf::lgamma_fn(pk.nu));
  const double logd = logc + (pj.nu - 0.5) * std::log(pj.a * h) - pj.a * h;
  const double num = cross_cov_real_d1(h, pj, pk, 1.0);
  TailRatioResult out;
  if (num == 0.0 && logd < -700.0) {
    fail(errc::numeric, "tail_ratio: both kernel and leading term underflow at this lag");
  }
  out.ratio = num * std::exp(-logd);
  if (!std::isfinite(out.ratio))
    fail(errc::numeric, "tail_ratio: overflow in the leading-term normalization");
  out.reliable = h >= 1.0 / pj.a;
  return out;
}

double tangent_fbm_gap(double epsilon, double nu, double a, double s1, double s2) {
  if (!(nu > 0.0) || !(nu < 1.0))
    fail(errc::numeric, "tangent_fbm_gap: the rescaled limit requires nu in (0,1)");
  if (!std::isfinite(epsilon) || !(epsilon > 0.0) || !std::isfinite(a) || !(a > 0.0) ||
      !std::isfinite(s1) || !std::isfinite(s2))
    fail(errc::args, "tangent_fbm_gap: requires finite s, epsilon > 0, a > 0");
  const double c2 = 2.0 * sf::gamma_fn(1.0 - nu) * std::pow(a, 2.0 * nu) /
                    (sf::gamma_fn(1.0 + nu) * std::pow(4.0, nu));
  const double e2nu = std::pow(epsilon, 2.0 * nu);
  const double cov_eps = (matern(epsilon * (s1 - s2), a, nu, 1.0) -
                          matern(epsilon * s1, a, nu, 1.0) -
                          matern(epsilon * s2, a, nu, 1.0) + 1.0) /
                         (e2nu * c2);
  const double p2nu = 2.0 * nu;
  const double cov_fbm = 0.5 * (std::pow(std::fabs(s1), p2nu) +
                                std::pow(std::fabs(s2), p2nu) -
                                std::pow(std::fabs(s1 - s2), p2nu));
  return std::fabs(cov_eps - cov_fbm);
}

}  // namespace mvm
