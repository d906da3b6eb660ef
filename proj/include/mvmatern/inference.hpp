#pragma once

// Gaussian maximum likelihood for the spectral Matérn family: exact joint
// log-likelihood over irregular multivariate observations, quasi-Newton
// fitting in a transformed parameter space, a likelihood-ratio test for
// covariance asymmetry (imaginary cross mass), and AIC bookkeeping.
//
// Fitting works on unconstrained coordinates: logistic maps for nu and a
// (box bounds), log for variances and nuggets, and a unit-disc pair for each
// cross correlation so |sigma_jk| < sqrt(sigma_jj sigma_kk) holds by
// construction. Positive-definiteness violations that survive the transforms
// (p >= 3) and covariance factorization failures act as soft barriers: the
// objective returns -infinity and the line search retreats. The covariance
// backend is an FFT lag table sized from the data once per fit, so the
// objective stays smooth in the parameters.

#include <cstdint>
#include <string>
#include <vector>

#include "mvmatern/covariance.hpp"
#include "mvmatern/io.hpp"
#include "mvmatern/model.hpp"
#include "mvmatern/optim.hpp"

namespace mvm {

struct LoglikOptions {
  bool zero_mean = false;        // skip per-variable empirical mean removal
  bool auto_grid = true;         // size the FFT table from data and model
  FFTGrid grid;                  // used when auto_grid is false
  bool use_closed_form = false;  // d=1 only: exact channel formulas
};

// -1/2 [n log 2pi + log det G + z' G^{-1} z] with the nugget on the diagonal
// of G and z the (optionally de-meaned) observation vector. Returns
// -infinity for a model whose cross matrix is not positive semidefinite;
// throws on factorization failure after the jitter ladder.
double loglik(const ModelSpec& m, const Dataset& ds,
              const LoglikOptions& opts = {});

inline double aic(double loglik_value, int n_params) {
  return 2.0 * n_params - 2.0 * loglik_value;
}

struct FitConfig {
  bool zero_mean = false;
  bool estimate_nugget = true;
  bool fix_imag = false;       // constrain Im sigma_jk = 0 (nested null model)
  bool estimate_axes = false;  // d=2: fit the special-axis angles
  int n_starts = 3;
  std::uint64_t seed = 0;      // start jitter stream
  OptimOptions optim;          // grad_step stays at the pinned 1e-5
  bool auto_grid = true;
  FFTGrid grid;
  int auto_points = 0;  // override the auto-sized table's point count
  double nu_lo = 0.05, nu_hi = 8.0;
  // scale bounds as multiples of the data span: a in [a_lo_factor/span,
  // a_hi_factor/span]
  double a_lo_factor = 0.25, a_hi_factor = 2000.0;
};

struct FitResult {
  ModelSpec estimates;
  double loglik = 0.0;
  double aic = 0.0;
  int n_params = 0;
  bool converged = false;
  int iterations = 0;
  int evaluations = 0;
  std::string backend_used;
  std::vector<double> means;  // per-variable empirical means removed
  std::vector<std::string> start_log;  // one diagnostic line per start
};

// Maximum likelihood from a valid initial spec; multi-start quasi-Newton,
// best start wins. Throws errc::numeric with per-start diagnostics when
// every start fails.
FitResult fit(const ModelSpec& initial, const Dataset& ds,
              const FitConfig& cfg = {});

struct LrtResult {
  double lambda = 0.0;   // 2 (loglik_free - loglik_constrained), clamped >= 0
  double p_value = 1.0;  // chi-square with 1 dof survival at lambda
  FitResult fit0;        // Im sigma fixed to zero
  FitResult fit1;        // Im sigma free
};

// Likelihood-ratio test of Im sigma_12 = 0 for bivariate data. The free fit
// adds a start warm-started at the constrained optimum, so lambda cannot go
// negative beyond numerical noise.
LrtResult lrt_imag(const Dataset& ds, const ModelSpec& initial,
                   const FitConfig& cfg = {});

}  // namespace mvm
