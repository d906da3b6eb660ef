#include "mvmatern/model.hpp"

#include <cmath>

#include "mvmatern/errors.hpp"
#include "mvmatern/specfun.hpp"

namespace mvm {
namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

double sign_of(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

// principal-branch complex power (a ± ir)^{-w}; a > 0 keeps us off the cut
std::complex<double> amp_complex(double a, double r_signed, double w) {
  return std::exp(-w * std::log(std::complex<double>(a, r_signed)));
}

}  // namespace

const char* variant_name(Variant v) {
  switch (v) {
    case Variant::IM: return "IM";
    case Variant::SCF: return "SCF";
    case Variant::SMM: return "SMM";
    case Variant::ALT: return "ALT";
    case Variant::MMG: return "MMG";
    case Variant::SQEXP: return "SQEXP";
  }
  return "?";
}

Variant variant_from_name(const std::string& s) {
  if (s == "IM") return Variant::IM;
  if (s == "SCF") return Variant::SCF;
  if (s == "SMM") return Variant::SMM;
  if (s == "ALT") return Variant::ALT;
  if (s == "MMG") return Variant::MMG;
  if (s == "SQEXP") return Variant::SQEXP;
  fail(errc::model, "unknown variant '" + s + "'");
}

ModelSpec make_bivariate_d1(Variant variant, const ProcessParams& p1,
                            const ProcessParams& p2, std::complex<double> sigma12,
                            double theta_star_phi, double theta_star_im) {
  ModelSpec m;
  m.dim = 1;
  m.variant = variant;
  m.processes = {p1, p2};
  m.cross.re.setZero(2, 2);
  m.cross.im.setZero(2, 2);
  m.cross.re(0, 0) = p1.sigma;
  m.cross.re(1, 1) = p2.sigma;
  m.cross.re(0, 1) = m.cross.re(1, 0) = sigma12.real();
  m.cross.im(0, 1) = sigma12.imag();
  m.cross.im(1, 0) = -sigma12.imag();
  m.geometry.theta_star_phi = Eigen::VectorXd::Constant(1, theta_star_phi);
  m.geometry.theta_star_im = Eigen::VectorXd::Constant(1, theta_star_im);
  return m;
}

ModelSpec make_bivariate_d2(Variant variant, const ProcessParams& p1,
                            const ProcessParams& p2, std::complex<double> sigma12,
                            const Eigen::Vector2d& theta_star_phi,
                            const Eigen::Vector2d& theta_star_im) {
  ModelSpec m = make_bivariate_d1(variant, p1, p2, sigma12);
  m.dim = 2;
  m.geometry.theta_star_phi = theta_star_phi.normalized();
  m.geometry.theta_star_im = theta_star_im.normalized();
  return m;
}

std::vector<Violation> validate_model(const ModelSpec& m) {
  std::vector<Violation> out;
  auto add = [&](const std::string& f, const std::string& msg) {
    out.push_back({f, msg});
  };

  const int p = m.p();
  if (p < 1) {
    add("processes", "at least one process required");
    return out;
  }
  if (m.dim != 1 && m.dim != 2) add("dim", "dim must be 1 or 2");
  if (m.variant == Variant::SQEXP && m.dim != 1)
    add("variant", "SQEXP is defined for d=1 only");

  for (int j = 0; j < p; ++j) {
    const auto& pp = m.processes[j];
    const std::string tag = "process." + std::to_string(j + 1);
    if (!(pp.nu > 0.0) || !std::isfinite(pp.nu)) add(tag + ".nu", "must be > 0");
    if (!(pp.a > 0.0) || !std::isfinite(pp.a)) add(tag + ".a", "must be > 0");
    if (!(pp.sigma > 0.0) || !std::isfinite(pp.sigma)) add(tag + ".sigma", "must be > 0");
    if (pp.nugget < 0.0 || !std::isfinite(pp.nugget)) add(tag + ".nugget", "must be >= 0");
  }

  if (m.cross.re.rows() != p || m.cross.re.cols() != p ||
      m.cross.im.rows() != p || m.cross.im.cols() != p) {
    add("cross", "matrices must be p x p");
    return out;
  }

  const double scale = m.cross.re.cwiseAbs().maxCoeff() + 1e-300;
  if ((m.cross.re - m.cross.re.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    add("cross.re", "must be symmetric");
  if ((m.cross.im + m.cross.im.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    add("cross.im", "must be antisymmetric");
  for (int j = 0; j < p; ++j) {
    if (std::fabs(m.cross.im(j, j)) > 0.0) add("cross.im", "diagonal must be zero");
    if (std::fabs(m.cross.re(j, j) - m.processes[j].sigma) >
        1e-12 * std::max(1.0, m.processes[j].sigma))
      add("cross.re", "diagonal must equal the marginal variances");
  }

  // Hermitian PSD check on Σ_H
  Eigen::MatrixXcd sig(p, p);
  for (int j = 0; j < p; ++j)
    for (int k = 0; k < p; ++k) sig(j, k) = std::complex<double>(m.cross.re(j, k), m.cross.im(j, k));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(sig, Eigen::EigenvaluesOnly);
  const double tr = sig.real().trace();
  if (es.eigenvalues().minCoeff() < -1e-10 * tr)
    add("cross", "Sigma_H is not positive semidefinite (min eig " +
                     std::to_string(es.eigenvalues().minCoeff()) + ")");

  auto check_axis = [&](const Eigen::VectorXd& v, const std::string& name) {
    if (v.size() != m.dim) {
      add(name, "must have length d");
      return;
    }
    if (std::fabs(v.norm() - 1.0) > 1e-8) add(name, "must be a unit vector");
  };
  check_axis(m.geometry.theta_star_im, "geometry.theta_star_im");
  check_axis(m.geometry.theta_star_phi, "geometry.theta_star_phi");

  if (m.variant == Variant::IM) {
    for (int j = 0; j < p; ++j)
      for (int k = j + 1; k < p; ++k)
        if (m.cross.re(j, k) != 0.0 || m.cross.im(j, k) != 0.0)
          add("cross", "IM variant requires zero cross terms");
  }
  if (m.variant == Variant::SCF) {
    for (int j = 1; j < p; ++j) {
      if (std::fabs(m.processes[j].nu - m.processes[0].nu) >
              1e-12 * m.processes[0].nu ||
          std::fabs(m.processes[j].a - m.processes[0].a) > 1e-12 * m.processes[0].a)
        add("processes", "SCF variant requires shared (nu, a)");
    }
    if (m.cross.im.cwiseAbs().maxCoeff() > 0.0)
      add("cross.im", "SCF variant requires a real Sigma");
  }
  if (m.variant == Variant::MMG) {
    if (!m.mmg) {
      add("mmg", "MMG variant requires per-pair (nu, a)");
    } else {
      if (m.mmg->nu.rows() != p || m.mmg->a.rows() != p ||
          m.mmg->nu.cols() != p || m.mmg->a.cols() != p) {
        add("mmg", "per-pair matrices must be p x p");
      } else {
        for (int j = 0; j < p; ++j)
          for (int k = j + 1; k < p; ++k) {
            if (!(m.mmg->nu(j, k) > 0.0)) add("mmg.nu", "must be > 0");
            if (!(m.mmg->a(j, k) > 0.0)) add("mmg.a", "must be > 0");
          }
      }
    }
  } else if (m.mmg) {
    add("mmg", "per-pair (nu, a) only apply to the MMG variant");
  }
  return out;
}

void require_valid(const ModelSpec& m) {
  const auto v = validate_model(m);
  if (v.empty()) return;
  std::string msg = "invalid model:";
  for (const auto& viol : v) msg += " [" + viol.field + ": " + viol.message + "]";
  fail(errc::model, msg);
}

double normalization_constant(int d, double nu, double a) {
  if (d < 1 || !(nu > 0.0) || !(a > 0.0))
    fail(errc::model, "normalization_constant: need d >= 1, nu > 0, a > 0");
  return std::pow(a, nu) * std::sqrt(sf::gamma_fn(nu + 0.5 * d)) /
         (std::pow(kPi, 0.25 * d) * std::sqrt(sf::gamma_fn(nu)));
}

std::complex<double> spectral_density_cartesian(const ModelSpec& m, int j, int k,
                                                const Eigen::VectorXd& x) {
  const int p = m.p();
  if (j < 0 || j >= p || k < 0 || k >= p)
    fail(errc::args, "spectral_density: index out of range");
  if (x.size() != m.dim) fail(errc::args, "spectral_density: frequency arity mismatch");

  const double r = x.norm();
  double phi = 0.0, sim = 0.0;
  if (r > 0.0) {
    phi = sign_of(x.dot(m.geometry.theta_star_phi));
    sim = sign_of(x.dot(m.geometry.theta_star_im));
  }

  const auto& pj = m.processes[j];
  const auto& pk = m.processes[k];
  const double halfd = 0.5 * m.dim;

  std::complex<double> bracket =
      (j == k) ? std::complex<double>(pj.sigma, 0.0)
               : std::complex<double>(m.cross.re(j, k), sim * m.cross.im(j, k));

  switch (m.variant) {
    case Variant::SMM: {
      const double cj = normalization_constant(m.dim, pj.nu, pj.a);
      const double ck = normalization_constant(m.dim, pk.nu, pk.a);
      if (phi == 0.0 && r > 0.0) {
        // on the hyperplane orthogonal to theta_star_phi the branch sign
        // jumps; grid sampling needs the average of the two one-sided limits
        const std::complex<double> plus = amp_complex(pj.a, r, pj.nu + halfd) *
                                          amp_complex(pk.a, -r, pk.nu + halfd);
        return cj * ck * 0.5 * (plus + std::conj(plus)) * bracket;
      }
      return cj * ck * amp_complex(pj.a, phi * r, pj.nu + halfd) * bracket *
             amp_complex(pk.a, -phi * r, pk.nu + halfd);
    }
    case Variant::ALT: {
      const double cj = normalization_constant(m.dim, pj.nu, pj.a);
      const double ck = normalization_constant(m.dim, pk.nu, pk.a);
      const double amp = std::pow(pj.a * pj.a + r * r, -0.5 * (pj.nu + halfd)) *
                         std::pow(pk.a * pk.a + r * r, -0.5 * (pk.nu + halfd));
      return cj * ck * amp * bracket;
    }
    case Variant::IM: {
      if (j != k) return {0.0, 0.0};
      const double cj = normalization_constant(m.dim, pj.nu, pj.a);
      return cj * cj * std::pow(pj.a * pj.a + r * r, -(pj.nu + halfd)) * bracket;
    }
    case Variant::SCF: {
      const double c = normalization_constant(m.dim, pj.nu, pj.a);
      return c * c * std::pow(pj.a * pj.a + r * r, -(pj.nu + halfd)) *
             std::complex<double>(m.cross.re(j, k), 0.0);
    }
    case Variant::MMG: {
      if (j == k) {
        const double cj = normalization_constant(m.dim, pj.nu, pj.a);
        return cj * cj * std::pow(pj.a * pj.a + r * r, -(pj.nu + halfd)) * bracket;
      }
      if (!m.mmg) fail(errc::model, "MMG variant missing per-pair parameters");
      const double njk = m.mmg->nu(j, k);
      const double ajk = m.mmg->a(j, k);
      const double c = normalization_constant(m.dim, njk, ajk);
      return c * c * std::pow(ajk * ajk + r * r, -(njk + halfd)) * bracket;
    }
    case Variant::SQEXP: {
      // g_j(x) = (4π a_j)^{-1/4} exp(-x²/(8 a_j)); marginals integrate to σ_jj
      const double gj = std::pow(4.0 * kPi * pj.a, -0.25) * std::exp(-r * r / (8.0 * pj.a));
      const double gk = std::pow(4.0 * kPi * pk.a, -0.25) * std::exp(-r * r / (8.0 * pk.a));
      return gj * gk * bracket;
    }
  }
  fail(errc::model, "unhandled variant");
}

std::complex<double> spectral_density_d1(const ModelSpec& m, int j, int k, double x) {
  if (m.dim != 1) fail(errc::args, "spectral_density_d1: model must have d=1");
  Eigen::VectorXd v(1);
  v(0) = x;
  return spectral_density_cartesian(m, j, k, v);
}

std::complex<double> spectral_density_polar(const ModelSpec& m, int j, int k,
                                            double r, const Eigen::VectorXd& theta) {
  if (!(r > 0.0)) fail(errc::args, "spectral_density_polar: requires r > 0");
  if (theta.size() != m.dim)
    fail(errc::args, "spectral_density_polar: direction arity mismatch");
  if (std::fabs(theta.norm() - 1.0) > 1e-8)
    fail(errc::args, "spectral_density_polar: direction must be a unit vector");
  return spectral_density_cartesian(m, j, k, r * theta) *
         std::pow(r, m.dim - 1.0);
}

Eigen::MatrixXcd spectral_matrix_cartesian(const ModelSpec& m, const Eigen::VectorXd& x) {
  const int p = m.p();
  Eigen::MatrixXcd f(p, p);
  for (int j = 0; j < p; ++j) {
    for (int k = j; k < p; ++k) {
      f(j, k) = spectral_density_cartesian(m, j, k, x);
      if (k != j) f(k, j) = std::conj(f(j, k));
    }
  }
  return f;
}

}  // namespace mvm
