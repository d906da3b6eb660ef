#pragma once

#include <complex>
#include <functional>
#include <vector>

namespace mvm::quad {

struct Options {
  double abs_tol = 1e-12;
  double rel_tol = 1e-12;
  int max_subdivisions = 2000;
  bool throw_on_nonconvergence = true;
};

struct Result {
  double value = 0.0;
  double error_estimate = 0.0;
  int subdivisions = 0;
  bool converged = false;
};

struct ComplexResult {
  std::complex<double> value{0.0, 0.0};
  double error_estimate = 0.0;
  int subdivisions = 0;
  bool converged = false;
};

// Globally adaptive Gauss-Kronrod (7,15) bisection over [a,b].
Result integrate(const std::function<double(double)>& f, double a, double b,
                 const Options& opt = {});

// Same, but the initial worklist is the given partition a=t0<t1<...<tm=b.
// Useful for oscillatory integrands where one segment per half-period keeps
// the error estimator honest.
Result integrate_segments(const std::function<double(double)>& f,
                          const std::vector<double>& breakpoints,
                          const Options& opt = {});

ComplexResult integrate_complex(const std::function<std::complex<double>(double)>& f,
                                double a, double b, const Options& opt = {});

ComplexResult integrate_segments_complex(
    const std::function<std::complex<double>(double)>& f,
    const std::vector<double>& breakpoints, const Options& opt = {});

// Double-exponential (exp-sinh) quadrature for ∫_0^∞ f(t) dt where f may have
// an integrable singularity at 0 and decays at infinity. Step-halving
// refinement; converged when two successive levels agree to rel_tol.
Result integrate_half_line(const std::function<double(double)>& f,
                           double rel_tol = 1e-13, int max_level = 9);

}  // namespace mvm::quad
