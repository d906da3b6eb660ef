#pragma once

// Independent numerical ground truth for the closed-form covariance routes:
// direct quadrature of the spectral densities, a discrete Hilbert transform,
// the inverse-gamma mixture identities behind the Matérn family, and the
// spectral-density normalization check. Slow but trustworthy; used by tests
// and the `validate` CLI subcommand.

#include <Eigen/Dense>

#include "mvmatern/model.hpp"

namespace mvm::oracle {

struct QuadratureConfig {
  double abs_tol = 1e-11;
  double rel_tol = 1e-10;
  int max_subdivisions = 4000;
  // quadrature span [-X, X]; 0 picks 1e3·max(1, 1/min a), with the remaining
  // mass beyond X restored from an analytic power-law tail series
  double truncation_radius = 0.0;
};

// C_jk(h) = ∫ e^{ihx} f_jk(x) dx by adaptive quadrature over [-X, X] in
// phase-bounded segments, plus the analytic tail. d=1 only. The imaginary
// part of the integral (zero in exact arithmetic since f is Hermitian) is
// written to *imag_residue when given.
double quadrature_cov(const ModelSpec& m, int j, int k, double h,
                      const QuadratureConfig& cfg = {},
                      double* imag_residue = nullptr);

// Discrete Hilbert transform: forward FFT, multiply by -i·sign(frequency),
// inverse FFT. Accurate on interior points when the samples decay toward the
// grid edges. spacing fixes the physical grid step (the multiplier itself
// only needs the sign of the frequency).
Eigen::ArrayXd hilbert_numeric(const Eigen::ArrayXd& samples, double spacing);

// Inverse-gamma mixture density g_nu(u) = u^{-nu-1} e^{-1/(4u)} / (4^nu Γ(nu))
// and its scale mixtures. mixture_density integrates to 1; schoenberg_mixture
// equals matern(z; 1, nu, 1); dawson_mixture equals the unit imaginary-measure
// cross-covariance shape, i.e. -H[matern(·; 1, nu, 1)](h).
double mixture_density(double u, double nu);
double schoenberg_mixture(double z, double nu);
double dawson_mixture(double h, double nu);

// ∫ Γ(nu+d/2)/(π^{d/2} Γ(nu)) (1+‖x‖²)^{-nu-d/2} dx over ℝ^d for d ∈ {1,2};
// equals 1 when the spectral normalization is right.
double matern_density_check(double nu, int d);

}  // namespace mvm::oracle
