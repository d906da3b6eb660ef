#pragma once

// Small dense quasi-Newton minimizer for smooth objectives with numerical
// gradients. Used by the fitting layer, which works in an unconstrained
// transformed parameter space and signals infeasible regions by returning
// +infinity; the line search and the finite differences treat +infinity as
// a barrier rather than an error.

#include <Eigen/Dense>

#include <functional>
#include <string>

namespace mvm {

struct OptimOptions {
  int max_iterations = 200;
  // central-difference step for the numerical gradient
  double grad_step = 1e-5;
  // stop when the objective decrease stays below this twice in a row
  double f_tol = 1e-9;
  // stop when the gradient infinity norm falls below this
  double g_tol = 1e-6;
  int max_backtracks = 40;
};

struct OptimResult {
  Eigen::VectorXd x;
  double f = 0.0;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
  std::string message;
};

using Objective = std::function<double(const Eigen::VectorXd&)>;

// BFGS with Armijo backtracking. Requires f(x0) to be finite.
OptimResult minimize(const Objective& f, Eigen::VectorXd x0,
                     const OptimOptions& opts = {});

// Central-difference gradient with one-sided fallback next to the barrier.
// Components walled in on both sides come back as zero.
Eigen::VectorXd numeric_gradient(const Objective& f, const Eigen::VectorXd& x,
                                 double fx, double step, int* evals);

}  // namespace mvm
