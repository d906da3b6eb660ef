#include "mvmatern/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

#include "mvmatern/errors.hpp"
#include "mvmatern/rng.hpp"

namespace mvm {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;
constexpr double kInf = std::numeric_limits<double>::infinity();

double span_of(const Dataset& ds) {
  if (ds.n() == 0) fail(errc::model, "inference: empty dataset");
  const Eigen::VectorXd lo = ds.locations.colwise().minCoeff();
  const Eigen::VectorXd hi = ds.locations.colwise().maxCoeff();
  return (hi - lo).norm();  // bounding-box diagonal bounds every pair distance
}

std::vector<Eigen::VectorXd> locations_of(const Dataset& ds) {
  std::vector<Eigen::VectorXd> locs((std::size_t)ds.n());
  for (int i = 0; i < ds.n(); ++i) locs[(std::size_t)i] = ds.locations.row(i);
  return locs;
}

std::vector<int> vars_of(const Dataset& ds) {
  std::vector<int> v((std::size_t)ds.n());
  for (int i = 0; i < ds.n(); ++i) v[(std::size_t)i] = ds.var(i);
  return v;
}

Eigen::VectorXd demeaned(const Dataset& ds, bool zero_mean,
                         std::vector<double>* means_out) {
  const int p = ds.p();
  std::vector<double> mu((std::size_t)p, 0.0);
  if (!zero_mean) {
    std::vector<int> cnt((std::size_t)p, 0);
    for (int i = 0; i < ds.n(); ++i) {
      mu[(std::size_t)ds.var(i)] += ds.value(i);
      ++cnt[(std::size_t)ds.var(i)];
    }
    for (int j = 0; j < p; ++j)
      if (cnt[(std::size_t)j] > 0) mu[(std::size_t)j] /= cnt[(std::size_t)j];
  }
  Eigen::VectorXd z(ds.n());
  for (int i = 0; i < ds.n(); ++i)
    z(i) = ds.value(i) - mu[(std::size_t)ds.var(i)];
  if (means_out) *means_out = std::move(mu);
  return z;
}

struct GramStats {
  double logdet = 0.0;
  double quad = 0.0;
};

// Cholesky with the same escalating diagonal ridge the simulator uses.
std::optional<GramStats> factor_quad(const Eigen::MatrixXd& G,
                                     const Eigen::VectorXd& z) {
  const double tr = G.trace();
  Eigen::LLT<Eigen::MatrixXd> llt(G);
  if (llt.info() != Eigen::Success) {
    double rel = 1e-12;
    for (; rel <= 1e-8 * 1.0000001; rel *= 10.0) {
      Eigen::MatrixXd Gr = G;
      Gr.diagonal().array() += rel * tr;
      llt.compute(Gr);
      if (llt.info() == Eigen::Success) break;
    }
    if (llt.info() != Eigen::Success) return std::nullopt;
  }
  GramStats st;
  st.logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  st.quad = z.dot(llt.solve(z));
  return st;
}

FFTGrid grid_for_fit(double span, double a_lo, int dim) {
  FFTGrid g;
  g.tail_correction = TailCorrection::none;
  g.points_per_axis = (dim == 2) ? 1024 : 8192;
  g.half_width = std::max(1.25 * span, 5.05 / a_lo);
  g.interpolation = (dim == 2) ? GridInterp::bilinear : GridInterp::linear;
  return g;
}

double to01(double u) {
  if (u >= 0.0) {
    const double e = std::exp(-u);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(u);
  return e / (1.0 + e);
}

double from01(double q) { return std::log(q) - std::log1p(-q); }

double bounded(double u, double lo, double hi) {
  return lo + (hi - lo) * to01(u);
}

double unbounded(double v, double lo, double hi) {
  double q = (v - lo) / (hi - lo);
  q = std::clamp(q, 1e-12, 1.0 - 1e-12);
  return from01(q);
}

double clamped_atanh(double r) {
  return std::atanh(std::clamp(r, -(1.0 - 1e-12), 1.0 - 1e-12));
}

// Free-parameter layout and the bijection between the optimizer's coordinates
// and a ModelSpec. Order: per process (nu, a, sigma[, nugget]); per pair j<k
// (re[, im]); MMG per-pair (nu, a); d=2 axis angles last.
struct Transform {
  ModelSpec base;
  int p = 0, dim = 1;
  bool fit_nugget = false, fix_imag = false, fit_axes = false;
  double nu_lo = 0.05, nu_hi = 8.0;
  double la_lo = 0.0, la_hi = 0.0;  // log-scale bounds for a
  int count = 0;

  Transform(const ModelSpec& initial, const FitConfig& cfg, double a_lo,
            double a_hi)
      : base(initial),
        p(initial.p()),
        dim(initial.dim),
        fit_nugget(cfg.estimate_nugget),
        fix_imag(cfg.fix_imag),
        fit_axes(cfg.estimate_axes && initial.dim == 2),
        nu_lo(cfg.nu_lo),
        nu_hi(cfg.nu_hi),
        la_lo(std::log(a_lo)),
        la_hi(std::log(a_hi)) {
    count = p * (fit_nugget ? 4 : 3);
    count += (p * (p - 1) / 2) * (fix_imag ? 1 : 2);
    if (base.variant == Variant::MMG) count += p * (p - 1);
    if (fit_axes) count += (base.variant == Variant::SMM) ? 2 : 1;
  }

  Eigen::VectorXd pack(const ModelSpec& m) const {
    Eigen::VectorXd u(count);
    int t = 0;
    for (int j = 0; j < p; ++j) {
      const ProcessParams& pp = m.processes[(std::size_t)j];
      u(t++) = unbounded(pp.nu, nu_lo, nu_hi);
      u(t++) = unbounded(std::log(pp.a), la_lo, la_hi);
      u(t++) = std::log(pp.sigma);
      if (fit_nugget) u(t++) = std::log(std::max(pp.nugget, 1e-300));
    }
    for (int j = 0; j < p; ++j)
      for (int k = j + 1; k < p; ++k) {
        const double s = std::sqrt(m.processes[(std::size_t)j].sigma *
                                   m.processes[(std::size_t)k].sigma);
        const double rr = m.cross.re(j, k) / s;
        u(t++) = clamped_atanh(rr);
        if (!fix_imag) {
          const double denom = std::sqrt(std::max(1.0 - rr * rr, 1e-24));
          u(t++) = clamped_atanh(m.cross.im(j, k) / s / denom);
        }
      }
    if (m.variant == Variant::MMG) {
      for (int j = 0; j < p; ++j)
        for (int k = j + 1; k < p; ++k) {
          u(t++) = unbounded(m.mmg->nu(j, k), nu_lo, nu_hi);
          u(t++) = unbounded(std::log(m.mmg->a(j, k)), la_lo, la_hi);
        }
    }
    if (fit_axes) {
      u(t++) = std::atan2(m.geometry.theta_star_im(1), m.geometry.theta_star_im(0));
      if (m.variant == Variant::SMM)
        u(t++) = std::atan2(m.geometry.theta_star_phi(1),
                            m.geometry.theta_star_phi(0));
    }
    return u;
  }

  bool unpack(const Eigen::VectorXd& u, ModelSpec* out) const {
    if (u.size() != count) fail(errc::args, "transform: wrong coordinate count");
    for (int i = 0; i < count; ++i)
      if (!std::isfinite(u(i)) || std::fabs(u(i)) > 120.0) return false;
    ModelSpec m = base;
    int t = 0;
    for (int j = 0; j < p; ++j) {
      ProcessParams& pp = m.processes[(std::size_t)j];
      pp.nu = bounded(u(t++), nu_lo, nu_hi);
      pp.a = std::exp(bounded(u(t++), la_lo, la_hi));
      pp.sigma = std::exp(u(t++));
      if (fit_nugget) pp.nugget = std::exp(u(t++));
    }
    for (int j = 0; j < p; ++j)
      for (int k = j + 1; k < p; ++k) {
        const double s = std::sqrt(m.processes[(std::size_t)j].sigma *
                                   m.processes[(std::size_t)k].sigma);
        const double rr = std::tanh(u(t++));
        double ri = 0.0;
        if (!fix_imag)
          ri = std::tanh(u(t++)) * std::sqrt(std::max(1.0 - rr * rr, 0.0));
        m.cross.re(j, k) = m.cross.re(k, j) = s * rr;
        m.cross.im(j, k) = s * ri;
        m.cross.im(k, j) = -s * ri;
      }
    for (int j = 0; j < p; ++j) {
      m.cross.re(j, j) = m.processes[(std::size_t)j].sigma;
      m.cross.im(j, j) = 0.0;
    }
    if (m.variant == Variant::MMG) {
      for (int j = 0; j < p; ++j)
        for (int k = j + 1; k < p; ++k) {
          const double njk = bounded(u(t++), nu_lo, nu_hi);
          const double ajk = std::exp(bounded(u(t++), la_lo, la_hi));
          m.mmg->nu(j, k) = m.mmg->nu(k, j) = njk;
          m.mmg->a(j, k) = m.mmg->a(k, j) = ajk;
        }
    }
    if (fit_axes) {
      const double ai = u(t++);
      m.geometry.theta_star_im = Eigen::Vector2d(std::cos(ai), std::sin(ai));
      if (m.variant == Variant::SMM) {
        const double ap = u(t++);
        m.geometry.theta_star_phi = Eigen::Vector2d(std::cos(ap), std::sin(ap));
      }
    }
    // pairwise discs already bound each |sigma_jk|; joint definiteness can
    // still fail from p >= 3 interactions
    if (p >= 3 && !validate_model(m).empty()) return false;
    *out = m;
    return true;
  }
};

struct Objective {
  const Transform& tr;
  const FFTGrid& grid;
  const std::vector<Eigen::VectorXd>& locs;
  const std::vector<int>& vars;
  const Eigen::VectorXd& z;

  double operator()(const Eigen::VectorXd& u) const {
    ModelSpec m;
    if (!tr.unpack(u, &m)) return kInf;
    try {
      const CovFunction cf = CovFunction::fft_grid(m, grid);
      const Eigen::MatrixXd G = cov_matrix(cf, locs, vars, true);
      const auto st = factor_quad(G, z);
      if (!st) return kInf;
      return 0.5 * ((double)z.size() * kLog2Pi + st->logdet + st->quad);
    } catch (const error&) {
      return kInf;
    }
  }
};

std::string grid_desc(const FFTGrid& g, int dim) {
  std::ostringstream os;
  os << "fft[d=" << dim << ",N=" << g.points_per_axis << ",L=" << g.half_width
     << ",tail="
     << (g.tail_correction == TailCorrection::none
             ? "none"
             : (g.tail_correction == TailCorrection::diag ? "diag" : "full"))
     << "]";
  return os.str();
}

FitResult fit_impl(const ModelSpec& initial, const Dataset& ds,
                   const FitConfig& cfg, const ModelSpec* warm) {
  require_valid(initial);
  require_compatible(initial, ds);
  if (cfg.n_starts < 1) fail(errc::args, "fit: n_starts must be >= 1");
  const double span = span_of(ds);
  if (!(span > 0.0))
    fail(errc::model, "fit: all observation locations coincide");

  const double a_lo = cfg.a_lo_factor / span;
  FFTGrid grid = cfg.auto_grid ? grid_for_fit(span, a_lo, ds.dim()) : cfg.grid;
  if (cfg.auto_grid && cfg.auto_points > 0) grid.points_per_axis = cfg.auto_points;
  // keep the searched scales well inside what the frequency box resolves
  const double X =
      (grid.points_per_axis / 2) * (3.141592653589793 / grid.half_width);
  const double a_hi = std::min(cfg.a_hi_factor / span, X / 3.0);
  if (!(a_lo < a_hi)) fail(errc::args, "fit: scale bounds collapsed");

  ModelSpec start_model = initial;
  if (cfg.estimate_nugget)
    for (auto& pp : start_model.processes)
      if (!(pp.nugget > 0.0)) pp.nugget = 1e-3 * pp.sigma;
  if (cfg.fix_imag) {
    start_model.cross.im.setZero();
  }

  const Transform tr(start_model, cfg, a_lo, a_hi);
  const auto locs = locations_of(ds);
  const auto vars = vars_of(ds);
  std::vector<double> means;
  const Eigen::VectorXd z = demeaned(ds, cfg.zero_mean, &means);
  const Objective obj{tr, grid, locs, vars, z};

  OptimOptions oo = cfg.optim;
  std::vector<Eigen::VectorXd> starts;
  starts.push_back(tr.pack(start_model));
  for (int s = 1; s < cfg.n_starts; ++s) {
    Rng rng(derive_seed(cfg.seed, 9000 + (std::uint64_t)s));
    Eigen::VectorXd x = starts[0];
    for (int i = 0; i < x.size(); ++i) x(i) += 0.75 * rng.normal();
    starts.push_back(std::move(x));
  }
  if (warm) starts.push_back(tr.pack(*warm));

  FitResult out;
  out.means = means;
  out.n_params = tr.count;
  out.backend_used = grid_desc(grid, ds.dim());
  double best = kInf;
  OptimResult best_r;
  for (std::size_t s = 0; s < starts.size(); ++s) {
    OptimResult r = minimize(obj, starts[s], oo);
    std::ostringstream line;
    line << "start " << s << (s == starts.size() - 1 && warm ? " (warm)" : "")
         << ": ";
    if (std::isfinite(r.f))
      line << "loglik " << -r.f << ", " << r.iterations << " iterations, "
           << r.evaluations << " evaluations, " << r.message;
    else
      line << "failed: " << r.message;
    out.start_log.push_back(line.str());
    if (std::isfinite(r.f) && r.f < best) {
      best = r.f;
      best_r = std::move(r);
    }
  }
  if (!std::isfinite(best)) {
    std::string msg = "fit: every start failed;";
    for (const auto& l : out.start_log) msg += " [" + l + "]";
    fail(errc::numeric, msg);
  }
  if (!tr.unpack(best_r.x, &out.estimates))
    fail(errc::numeric, "fit: optimum left the representable region");
  out.loglik = -best;
  out.aic = aic(out.loglik, out.n_params);
  out.converged = best_r.converged;
  out.iterations = best_r.iterations;
  out.evaluations = best_r.evaluations;
  return out;
}

}  // namespace

double loglik(const ModelSpec& m, const Dataset& ds, const LoglikOptions& opts) {
  const auto viol = validate_model(m);
  if (!viol.empty()) {
    bool only_psd = true;
    for (const auto& v : viol)
      if (v.message.find("positive semidefinite") == std::string::npos)
        only_psd = false;
    if (only_psd) return -kInf;  // soft barrier for optimizers probing the cone
    require_valid(m);            // structural problem: report and throw
  }
  require_compatible(m, ds);
  const Eigen::VectorXd z = demeaned(ds, opts.zero_mean, nullptr);
  FFTGrid grid = opts.grid;
  if (opts.auto_grid) {
    grid = default_grid(m);
    grid.half_width = std::max(grid.half_width, 1.25 * span_of(ds));
  }
  std::optional<GramStats> st;
  if (opts.use_closed_form && m.dim == 1) {
    const CovFunction cf = CovFunction::closed_form(m);
    st = factor_quad(cov_matrix_obs(cf, ds, true), z);
  } else {
    const CovFunction cf = CovFunction::fft_grid(m, grid);
    st = factor_quad(cov_matrix_obs(cf, ds, true), z);
  }
  if (!st)
    fail(errc::numeric,
         "loglik: covariance factorization failed even with a 1e-8*trace ridge");
  return -0.5 * ((double)ds.n() * kLog2Pi + st->logdet + st->quad);
}

FitResult fit(const ModelSpec& initial, const Dataset& ds, const FitConfig& cfg) {
  return fit_impl(initial, ds, cfg, nullptr);
}

LrtResult lrt_imag(const Dataset& ds, const ModelSpec& initial,
                   const FitConfig& cfg) {
  if (initial.p() != 2)
    fail(errc::args, "lrt_imag: the asymmetry test is defined for p=2");
  FitConfig c0 = cfg;
  c0.fix_imag = true;
  FitConfig c1 = cfg;
  c1.fix_imag = false;

  LrtResult out;
  out.fit0 = fit_impl(initial, ds, c0, nullptr);
  out.fit1 = fit_impl(initial, ds, c1, &out.fit0.estimates);
  const double raw = 2.0 * (out.fit1.loglik - out.fit0.loglik);
  out.lambda = std::max(0.0, raw);
  out.p_value = std::erfc(std::sqrt(0.5 * out.lambda));
  return out;
}

}  // namespace mvm
