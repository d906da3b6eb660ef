#include "mvmatern/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "mvmatern/covariance.hpp"
#include "mvmatern/errors.hpp"
#include "mvmatern/rng.hpp"

namespace mvm {
namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

void check_request(const SimRequest& req) {
  require_valid(req.model);
  if (req.n_replicates < 1)
    fail(errc::args, "simulate: n_replicates must be >= 1");
  if (req.locations.empty()) fail(errc::args, "simulate: no locations");
  for (const auto& s : req.locations) {
    if ((int)s.size() != req.model.dim)
      fail(errc::model, "simulate: location arity does not match the model dimension");
    if (!s.allFinite()) fail(errc::args, "simulate: non-finite location");
  }
  if (req.method == SimMethod::spectral && req.n_frequencies < 1)
    fail(errc::args, "simulate: n_frequencies must be >= 1");
}

SimResult simulate_exact(const SimRequest& req) {
  const ModelSpec& m = req.model;
  const int p = m.p();
  const int n = (int)req.locations.size();
  const int pn = p * n;

  std::vector<Eigen::VectorXd> locs;
  locs.reserve((std::size_t)pn);
  std::vector<int> vars;
  vars.reserve((std::size_t)pn);
  for (int j = 0; j < p; ++j)
    for (int i = 0; i < n; ++i) {
      locs.push_back(req.locations[(std::size_t)i]);
      vars.push_back(j);
    }

  const CovFunction cf = (m.dim == 1)
                             ? CovFunction::closed_form(m)
                             : CovFunction::fft_grid(m, default_grid(m));
  Eigen::MatrixXd G = cov_matrix(cf, locs, vars, true);

  // factorize, ridging the diagonal if rounding pushed G indefinite
  const double tr = G.trace();
  double ridge = 0.0;
  Eigen::LLT<Eigen::MatrixXd> llt(G);
  for (double rel = 1e-12; llt.info() != Eigen::Success; rel *= 10.0) {
    if (rel > 1e-8)
      fail(errc::numeric,
           "exact simulation: covariance factorization failed for the " +
               std::string(variant_name(m.variant)) + " model (p=" +
               std::to_string(p) + ", n=" + std::to_string(n) +
               ") even with a 1e-8*trace diagonal ridge");
    ridge = rel * tr;
    llt.compute(G + ridge * Eigen::MatrixXd::Identity(pn, pn));
  }

  SimResult out;
  out.jitter = ridge;
  out.replicates.resize(req.n_replicates, pn);
  Eigen::VectorXd z(pn);
  for (int r = 0; r < req.n_replicates; ++r) {
    Rng rng(derive_seed(req.seed, (std::uint64_t)r));
    for (int i = 0; i < pn; ++i) z(i) = rng.normal();
    out.replicates.row(r) = (llt.matrixL() * z).transpose();
  }
  return out;
}

SimResult simulate_spectral(const SimRequest& req) {
  const ModelSpec& m = req.model;
  const int p = m.p();
  const int d = m.dim;
  const int n = (int)req.locations.size();
  const int M = req.n_frequencies;

  // proposal: multivariate t with 2*nu_min dof and scale a_min, whose
  // spectral tail is at least as heavy as any channel's
  double nu_min = m.processes[0].nu;
  double a_min = m.processes[0].a;
  for (const auto& pr : m.processes) {
    nu_min = std::min(nu_min, pr.nu);
    a_min = std::min(a_min, pr.a);
  }
  if (m.mmg) {
    nu_min = std::min(nu_min, m.mmg->nu.minCoeff());
    a_min = std::min(a_min, m.mmg->a.minCoeff());
  }
  // folded density on the x(0) >= 0 half-space: 2 * symmetric t density
  const double log_qc = std::log(2.0) + std::lgamma(nu_min + 0.5 * d) -
                        std::lgamma(nu_min) - 0.5 * d * std::log(kPi) +
                        2.0 * nu_min * std::log(a_min);
  const double a2 = a_min * a_min;
  const double qexp = nu_min + 0.5 * d;

  SimResult out;
  out.replicates.resize(req.n_replicates, p * n);
  const double scale = std::sqrt(2.0 / M);

  Eigen::VectorXd x(d), xi(p), eta(p), u(p), v(p);
  Eigen::MatrixXd Y(p, n);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es;
  for (int r = 0; r < req.n_replicates; ++r) {
    Rng rng(derive_seed(req.seed, (std::uint64_t)r));
    Y.setZero();
    for (int f = 0; f < M; ++f) {
      for (int c = 0; c < d; ++c) x(c) = rng.normal();
      const double w = rng.chisq(2.0 * nu_min);
      x *= a_min / std::sqrt(w);
      if (x(0) < 0.0 || (x(0) == 0.0 && d > 1 && x(1) < 0.0)) x = -x;
      const double log_q =
          log_qc - qexp * std::log(a2 + x.squaredNorm());

      // A A^H = f(x) / q(x); eigendecomposition keeps the square root
      // well defined for every variant
      Eigen::MatrixXcd H =
          spectral_matrix_cartesian(m, x) * std::exp(-log_q);
      es.compute(H);
      Eigen::VectorXd ev = es.eigenvalues();
      if (ev.minCoeff() < -1e-10 * std::max(1.0, ev.maxCoeff())) {
        std::ostringstream os;
        os << "spectral simulation: spectral density matrix is not positive"
              " semidefinite at frequency (";
        for (int c = 0; c < d; ++c) os << (c ? "," : "") << x(c);
        os << ")";
        fail(errc::numeric, os.str());
      }
      Eigen::MatrixXcd A =
          es.eigenvectors() * ev.cwiseMax(0.0).cwiseSqrt().asDiagonal();

      for (int j = 0; j < p; ++j) xi(j) = rng.normal();
      for (int j = 0; j < p; ++j) eta(j) = rng.normal();
      // real part of A (xi + i eta) e^{i<s,x>}, the mirrored-frequency pair
      // folded in
      u = A.real() * xi - A.imag() * eta;
      v = A.imag() * xi + A.real() * eta;
      for (int i = 0; i < n; ++i) {
        const double th = req.locations[(std::size_t)i].dot(x);
        Y.col(i) += u * std::cos(th) - v * std::sin(th);
      }
    }
    for (int j = 0; j < p; ++j)
      for (int i = 0; i < n; ++i)
        out.replicates(r, sim_col(n, j, i)) = scale * Y(j, i);
  }
  return out;
}

}  // namespace

SimResult simulate(const SimRequest& req) {
  check_request(req);
  return req.method == SimMethod::exact ? simulate_exact(req)
                                        : simulate_spectral(req);
}

void write_replicates_csv(const std::string& path,
                          const std::vector<Eigen::VectorXd>& locations, int p,
                          const Eigen::MatrixXd& replicates) {
  const int n = (int)locations.size();
  if (n == 0) fail(errc::args, "write_replicates_csv: no locations");
  const int d = (int)locations[0].size();
  if (replicates.cols() != (Eigen::Index)p * n)
    fail(errc::args, "write_replicates_csv: replicate width is not p * n_points");
  std::ofstream out(path);
  if (!out) fail(errc::io, "cannot write replicate file: " + path);
  out << (d == 1 ? "replicate,var,x1,value\n" : "replicate,var,x1,x2,value\n");
  char buf[40];
  const auto put = [&](double val) {
    std::snprintf(buf, sizeof(buf), "%.17g", val);
    out << buf;
  };
  for (Eigen::Index r = 0; r < replicates.rows(); ++r)
    for (int j = 0; j < p; ++j)
      for (int i = 0; i < n; ++i) {
        out << r << "," << j << ",";
        for (int c = 0; c < d; ++c) {
          put(locations[(std::size_t)i](c));
          out << ",";
        }
        put(replicates(r, sim_col(n, j, i)));
        out << "\n";
      }
  if (!out) fail(errc::io, "failed writing replicate file: " + path);
}

}  // namespace mvm
