#include "spectral_series.hpp"

#include <complex>

#include "mvmatern/errors.hpp"

namespace mvm::detail {

namespace {
using cplx = std::complex<double>;

constexpr double kPi = 3.141592653589793238462643383279502884;

double sgn(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }
}  // namespace

tail::PowerSeries channel_tail_series(const ModelSpec& m, int j, int k,
                                      int terms) {
  const ProcessParams& pj = m.processes[j];
  const ProcessParams& pk = m.processes[k];
  const double halfd = 0.5 * m.dim;
  double gphi = 1.0, gim = 1.0;
  if (m.dim == 1) {
    gphi = sgn(m.geometry.theta_star_phi(0));
    gim = sgn(m.geometry.theta_star_im(0));
  }
  const cplx bracket = (j == k)
                           ? cplx(pj.sigma, 0.0)
                           : cplx(m.cross.re(j, k), gim * m.cross.im(j, k));
  using K = tail::Factor::Kind;
  tail::PowerSeries s;
  switch (m.variant) {
    case Variant::SMM: {
      const double cj = normalization_constant(m.dim, pj.nu, pj.a);
      const double ck = normalization_constant(m.dim, pk.nu, pk.a);
      const auto f1 = tail::factor_series(
          {gphi >= 0.0 ? K::plus_i : K::minus_i, pj.a, -(pj.nu + halfd)},
          terms);
      const auto f2 = tail::factor_series(
          {gphi >= 0.0 ? K::minus_i : K::plus_i, pk.a, -(pk.nu + halfd)},
          terms);
      s = tail::scale(tail::multiply(f1, f2, terms), cj * ck * bracket);
      break;
    }
    case Variant::ALT: {
      const double cj = normalization_constant(m.dim, pj.nu, pj.a);
      const double ck = normalization_constant(m.dim, pk.nu, pk.a);
      const auto f1 =
          tail::factor_series({K::square, pj.a, -0.5 * (pj.nu + halfd)}, terms);
      const auto f2 =
          tail::factor_series({K::square, pk.a, -0.5 * (pk.nu + halfd)}, terms);
      s = tail::scale(tail::multiply(f1, f2, terms), cj * ck * bracket);
      break;
    }
    case Variant::IM: {
      if (j != k) return tail::PowerSeries{};
      const double cj = normalization_constant(m.dim, pj.nu, pj.a);
      s = tail::scale(
          tail::factor_series({K::square, pj.a, -(pj.nu + halfd)}, terms),
          cj * cj * bracket);
      break;
    }
    case Variant::SCF: {
      const double c = normalization_constant(m.dim, pj.nu, pj.a);
      s = tail::scale(
          tail::factor_series({K::square, pj.a, -(pj.nu + halfd)}, terms),
          c * c * cplx(m.cross.re(j, k), 0.0));
      break;
    }
    case Variant::MMG: {
      double nu = pj.nu, a = pj.a;
      if (j != k) {
        if (!m.mmg) fail(errc::model, "MMG variant missing per-pair parameters");
        nu = m.mmg->nu(j, k);
        a = m.mmg->a(j, k);
      }
      const double c = normalization_constant(m.dim, nu, a);
      s = tail::scale(
          tail::factor_series({K::square, a, -(nu + halfd)}, terms),
          c * c * bracket);
      break;
    }
    case Variant::SQEXP:
      fail(errc::numeric, "no power-law tail for the squared-exponential family");
  }
  return s;
}

tail::PowerSeries conj_series(tail::PowerSeries s) {
  for (auto& c : s.coef) c = std::conj(c);
  return s;
}

namespace {

double pochhammer(double x, int n) {
  double r = 1.0;
  for (int t = 0; t < n; ++t) r *= x + t;
  return r;
}

// Taylor coefficients at x=0 of (a^2 + x^2)^{-g}; even powers only
std::vector<cplx> even_factor_taylor(double a, double g, int orders) {
  std::vector<cplx> c((std::size_t)orders, cplx(0.0, 0.0));
  double fact = 1.0;
  for (int t = 0; 2 * t < orders; ++t) {
    if (t > 0) fact *= t;
    c[(std::size_t)(2 * t)] =
        ((t % 2 == 0) ? 1.0 : -1.0) * pochhammer(g, t) / fact *
        std::pow(a, -2.0 * g - 2.0 * t);
  }
  return c;
}

std::vector<cplx> taylor_product(const std::vector<cplx>& a,
                                 const std::vector<cplx>& b, int orders) {
  std::vector<cplx> c((std::size_t)orders, cplx(0.0, 0.0));
  for (int t = 0; t < orders; ++t)
    for (int u = 0; t + u < orders; ++u) c[(std::size_t)(t + u)] += a[(std::size_t)t] * b[(std::size_t)u];
  return c;
}

}  // namespace

std::vector<double> channel_lag_tail(const ModelSpec& m, int j, int k,
                                     int orders) {
  if (m.dim != 1) fail(errc::args, "channel_lag_tail: requires d=1");
  if (orders < 1) fail(errc::args, "channel_lag_tail: orders must be >= 1");
  if (j == k) return {};
  const double sig_im = m.cross.im(j, k);
  if (sig_im == 0.0 || m.variant == Variant::IM || m.variant == Variant::SCF)
    return {};
  const double gim = sgn(m.geometry.theta_star_im(0));
  if (gim == 0.0) return {};
  const ProcessParams& pj = m.processes[j];
  const ProcessParams& pk = m.processes[k];

  // envelope Taylor coefficients env[q] with f(x) = env(x) * bracket(sign x)
  std::vector<cplx> env;
  switch (m.variant) {
    case Variant::SMM: {
      const double gphi = sgn(m.geometry.theta_star_phi(0));
      const double cj = normalization_constant(1, pj.nu, pj.a);
      const double ck = normalization_constant(1, pk.nu, pk.a);
      const double al = pj.nu + 0.5, be = pk.nu + 0.5;
      std::vector<cplx> fa((std::size_t)orders), fb((std::size_t)orders);
      double fact = 1.0;
      for (int t = 0; t < orders; ++t) {
        if (t > 0) fact *= t;
        fa[(std::size_t)t] = pochhammer(al, t) / fact *
                             std::pow(cplx(0.0, -gphi), t) *
                             std::pow(pj.a, -al - t);
        fb[(std::size_t)t] = pochhammer(be, t) / fact *
                             std::pow(cplx(0.0, gphi), t) *
                             std::pow(pk.a, -be - t);
      }
      env = taylor_product(fa, fb, orders);
      for (auto& c : env) c *= cj * ck;
      break;
    }
    case Variant::ALT: {
      const double cj = normalization_constant(1, pj.nu, pj.a);
      const double ck = normalization_constant(1, pk.nu, pk.a);
      env = taylor_product(even_factor_taylor(pj.a, 0.5 * (pj.nu + 0.5), orders),
                           even_factor_taylor(pk.a, 0.5 * (pk.nu + 0.5), orders),
                           orders);
      for (auto& c : env) c *= cj * ck;
      break;
    }
    case Variant::MMG: {
      if (!m.mmg) fail(errc::model, "MMG variant missing per-pair parameters");
      const double njk = m.mmg->nu(j, k);
      const double ajk = m.mmg->a(j, k);
      const double c = normalization_constant(1, njk, ajk);
      env = even_factor_taylor(ajk, njk + 0.5, orders);
      for (auto& e : env) e *= c * c;
      break;
    }
    case Variant::SQEXP: {
      const double pre = std::pow(4.0 * kPi * pj.a, -0.25) *
                         std::pow(4.0 * kPi * pk.a, -0.25);
      const double cdec = 1.0 / (8.0 * pj.a) + 1.0 / (8.0 * pk.a);
      env.assign((std::size_t)orders, cplx(0.0, 0.0));
      double term = pre;
      for (int t = 0; 2 * t < orders; ++t) {
        env[(std::size_t)(2 * t)] = term;
        term *= -cdec / (t + 1.0);
      }
      break;
    }
    case Variant::IM:
    case Variant::SCF:
      return {};
  }

  // boundary terms: D_s = -2i*gim*Im(sigma) * (s-1)! * env[s-1] * (-i)^s.
  // The result is real because f(-x) = conj(f(x)).
  std::vector<double> d((std::size_t)orders, 0.0);
  const cplx jump(0.0, -2.0 * gim * sig_im);
  cplx pw(0.0, -1.0);
  double fact = 1.0;
  for (int s = 1; s <= orders; ++s) {
    d[(std::size_t)(s - 1)] = (jump * fact * env[(std::size_t)(s - 1)] * pw).real();
    pw *= cplx(0.0, -1.0);
    fact *= s;
  }
  return d;
}

}  // namespace mvm::detail
