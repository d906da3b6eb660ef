#pragma once

#include <Eigen/Dense>
#include <complex>
#include <optional>
#include <string>
#include <vector>

namespace mvm {

// Model families sharing the multivariate Matérn marginals:
//   SMM  — complex factorization (a_j + iφ(θ)r)^{-ν_j-d/2} with a directional
//          sign measure; the model this library is primarily about
//   ALT  — real-amplitude factorization (a_j² + r²)^{-(ν_j+d/2)/2}
//   MMG  — classical multivariate Matérn with per-pair (ν_jk, a_jk)
//   SCF  — single shared correlation function, Σ real
//   IM   — independent Matérn marginals, zero cross terms
//   SQEXP— squared-exponential analogue with a Dawson-function imaginary part (d=1)
enum class Variant { IM, SCF, SMM, ALT, MMG, SQEXP };

const char* variant_name(Variant v);
Variant variant_from_name(const std::string& s);

struct ProcessParams {
  double nu = 0.5;      // smoothness, > 0
  double a = 1.0;       // inverse range, > 0
  double sigma = 1.0;   // marginal variance, > 0
  double nugget = 0.0;  // measurement-error variance, >= 0
};

// Σ_H = re + i·im must be Hermitian PSD with diag(re) matching the marginal
// variances; im carries the covariance asymmetry.
struct CrossSigma {
  Eigen::MatrixXd re;
  Eigen::MatrixXd im;
};

// Unit axes defining the directional measure: φ(θ) = sign(θ·theta_star_phi)
// picks the complex branch, sign(θ·theta_star_im) orients the imaginary part.
struct DirectionalGeometry {
  Eigen::VectorXd theta_star_im;
  Eigen::VectorXd theta_star_phi;
};

struct MmgExtras {
  Eigen::MatrixXd nu;  // off-diagonal ν_jk (diagonal ignored)
  Eigen::MatrixXd a;   // off-diagonal a_jk
};

struct ModelSpec {
  int dim = 1;
  Variant variant = Variant::SMM;
  std::vector<ProcessParams> processes;
  CrossSigma cross;
  DirectionalGeometry geometry;
  std::optional<MmgExtras> mmg;

  int p() const { return static_cast<int>(processes.size()); }
  std::complex<double> sigma(int j, int k) const {
    return {cross.re(j, k), cross.im(j, k)};
  }
};

// Convenience constructor for the ubiquitous bivariate d=1 case. Geometry
// defaults to the +1 axes; cross.re diagonal is wired to the sigmas.
ModelSpec make_bivariate_d1(Variant variant, const ProcessParams& p1,
                            const ProcessParams& p2,
                            std::complex<double> sigma12,
                            double theta_star_phi = 1.0,
                            double theta_star_im = 1.0);

// Same idea for d=2 with explicit axes.
ModelSpec make_bivariate_d2(Variant variant, const ProcessParams& p1,
                            const ProcessParams& p2,
                            std::complex<double> sigma12,
                            const Eigen::Vector2d& theta_star_phi,
                            const Eigen::Vector2d& theta_star_im);

struct Violation {
  std::string field;
  std::string message;
};

std::vector<Violation> validate_model(const ModelSpec& m);
// Throws errc::model listing the violations; no-op when valid.
void require_valid(const ModelSpec& m);

// c(d,ν,a) = a^ν sqrt(Γ(ν+d/2)) / (π^{d/4} sqrt(Γ(ν))): normalizes the
// squared amplitude to the Matérn spectral density with unit variance.
double normalization_constant(int d, double nu, double a);

// Cross-spectral density entries. The Cartesian form carries no Jacobian;
// the polar form includes the r^{d-1} factor.
std::complex<double> spectral_density_d1(const ModelSpec& m, int j, int k, double x);
std::complex<double> spectral_density_cartesian(const ModelSpec& m, int j, int k,
                                                const Eigen::VectorXd& x);
std::complex<double> spectral_density_polar(const ModelSpec& m, int j, int k,
                                            double r, const Eigen::VectorXd& theta);
Eigen::MatrixXcd spectral_matrix_cartesian(const ModelSpec& m,
                                           const Eigen::VectorXd& x);

}  // namespace mvm
