#include "mvmatern/optim.hpp"

#include <cmath>
#include <limits>

#include "mvmatern/errors.hpp"

namespace mvm {

namespace {

bool finite(double x) { return std::isfinite(x); }

}  // namespace

Eigen::VectorXd numeric_gradient(const Objective& f, const Eigen::VectorXd& x,
                                 double fx, double step, int* evals) {
  const int n = (int)x.size();
  Eigen::VectorXd g(n);
  Eigen::VectorXd xp = x;
  for (int i = 0; i < n; ++i) {
    xp(i) = x(i) + step;
    const double fu = f(xp);
    xp(i) = x(i) - step;
    const double fd = f(xp);
    xp(i) = x(i);
    if (evals) *evals += 2;
    if (finite(fu) && finite(fd)) {
      g(i) = (fu - fd) / (2.0 * step);
    } else if (finite(fu)) {
      g(i) = (fu - fx) / step;
    } else if (finite(fd)) {
      g(i) = (fx - fd) / step;
    } else {
      g(i) = 0.0;
    }
  }
  return g;
}

OptimResult minimize(const Objective& f, Eigen::VectorXd x0,
                     const OptimOptions& opts) {
  if (x0.size() == 0) fail(errc::args, "minimize: empty starting point");
  if (!(opts.grad_step > 0.0) || !(opts.max_iterations > 0))
    fail(errc::args, "minimize: options must have positive step and iterations");

  OptimResult out;
  const int n = (int)x0.size();
  Eigen::VectorXd x = std::move(x0);
  double fx = f(x);
  out.evaluations = 1;
  if (!finite(fx)) {
    out.x = std::move(x);
    out.f = fx;
    out.message = "objective not finite at the starting point";
    return out;
  }

  Eigen::MatrixXd H = Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd g = numeric_gradient(f, x, fx, opts.grad_step, &out.evaluations);
  bool scaled = false;
  int small_steps = 0;

  for (int it = 0; it < opts.max_iterations; ++it) {
    out.iterations = it + 1;
    if (g.lpNorm<Eigen::Infinity>() < opts.g_tol) {
      out.converged = true;
      out.message = "gradient below tolerance";
      break;
    }

    Eigen::VectorXd p = -(H * g);
    double slope = p.dot(g);
    if (!(slope < 0.0)) {
      // curvature information went bad; restart from steepest descent
      H.setIdentity();
      p = -g;
      slope = p.dot(g);
      scaled = false;
    }

    double alpha = 1.0;
    double fn = std::numeric_limits<double>::infinity();
    Eigen::VectorXd xn;
    bool accepted = false;
    for (int bt = 0; bt <= opts.max_backtracks; ++bt) {
      xn = x + alpha * p;
      fn = f(xn);
      ++out.evaluations;
      if (finite(fn) && fn <= fx + 1e-4 * alpha * slope) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      out.converged = true;
      out.message = "line search exhausted; at numerical resolution";
      break;
    }

    const Eigen::VectorXd s = xn - x;
    const double drop = fx - fn;
    x = std::move(xn);
    fx = fn;

    Eigen::VectorXd gn =
        numeric_gradient(f, x, fx, opts.grad_step, &out.evaluations);
    const Eigen::VectorXd y = gn - g;
    g = std::move(gn);

    const double sy = s.dot(y);
    if (sy > 1e-10 * s.norm() * y.norm()) {
      if (!scaled) {
        // first well-behaved pair fixes the metric scale
        H *= sy / y.squaredNorm();
        scaled = true;
      }
      const Eigen::VectorXd Hy = H * y;
      const double yHy = y.dot(Hy);
      H += ((sy + yHy) / (sy * sy)) * (s * s.transpose());
      H -= (Hy * s.transpose() + s * Hy.transpose()) / sy;
    }

    small_steps = (drop < opts.f_tol) ? small_steps + 1 : 0;
    if (small_steps >= 2) {
      out.converged = true;
      out.message = "objective decrease below tolerance";
      break;
    }
  }

  if (!out.converged && out.message.empty())
    out.message = "iteration limit reached";
  out.x = std::move(x);
  out.f = fx;
  return out;
}

}  // namespace mvm
