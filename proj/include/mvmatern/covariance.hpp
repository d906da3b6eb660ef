#pragma once

#include <Eigen/Dense>
#include <complex>
#include <memory>
#include <string>
#include <vector>

#include "mvmatern/model.hpp"

namespace mvm {

struct DerivedParams {
  double a_plus, a_minus, nu_plus, nu_minus;
  DerivedParams(const ProcessParams& pj, const ProcessParams& pk)
      : a_plus(0.5 * (pj.a + pk.a)),
        a_minus(0.5 * (pj.a - pk.a)),
        nu_plus(0.5 * (pj.nu + pk.nu)),
        nu_minus(0.5 * (pj.nu - pk.nu)) {}
};

// Matérn covariance σ²·2^{1-ν}/Γ(ν)·(ah)^ν K_ν(ah); continuous at h=0 with
// value σ².
double matern(double h, double a, double nu, double sigma2);

// Real-measure cross-covariance of the complex factorization at d=1 in the
// canonical (+1,+1) geometry; re_sigma multiplies the unit kernel. Equal
// smoothness reduces to a K_ν form; the general case uses W_{κ,μ} with the
// branch chosen by sign(h).
double cross_cov_real_d1(double h, const ProcessParams& pj,
                         const ProcessParams& pk, double re_sigma);

enum class ImagBackend { none, struve_bessel, expint_half, expint_three_half, fft };
const char* imag_backend_name(ImagBackend b);

struct ImagEval {
  double value = 0.0;
  ImagBackend backend = ImagBackend::none;
};

class CovFunction;

// Imaginary-measure cross-covariance at d=1 (canonical geometry): closed
// forms for equal smoothness (Struve/Bessel away from half-integers, E1/Ei at
// ν=1/2 for any scales, the ν=3/2 equal-scale form), otherwise an FFT grid.
// Callers in a loop should pass a grid from make_imag_unit_grid; without one
// a grid is built per call.
ImagEval cross_cov_imag_d1(double h, const ProcessParams& pj,
                           const ProcessParams& pk, double im_sigma,
                           const CovFunction* fft_fallback = nullptr);

// Unit-amplitude imaginary-measure kernel for the process pair, as an FFT
// CovFunction whose (0,1) channel is C^Im with Im σ = 1.
CovFunction make_imag_unit_grid(const ProcessParams& pj, const ProcessParams& pk);

// Real-measure cross-covariance of the (a²+x²)-amplitude factorization.
// Closed forms: shared a (scaled Matérn of order ν_+) and ν_j=ν_k=3/2 with
// distinct a's; anything else must use the FFT backend.
double cross_cov_altfact_d1(double h, const ProcessParams& pj,
                            const ProcessParams& pk, double re_sigma);

// Squared-exponential-family cross-covariance (d=1), complex sigma.
double cross_cov_sqexp_d1(double h, double a_j, double a_k,
                          std::complex<double> sigma);

// Compensation of the frequency-box truncation when building FFT tables:
// none leaves the raw transform; diag compensates the (slowly decaying)
// diagonal spectral tails; full also compensates d=1 cross channels.
enum class TailCorrection { none, diag, full };

enum class GridInterp { linear, bilinear };

struct FFTGrid {
  double half_width = 10.0;     // covariance table spans [-L, L] per axis
  int points_per_axis = 16384;  // power of two, >= 256
  TailCorrection tail_correction = TailCorrection::diag;
  GridInterp interpolation = GridInterp::linear;  // bilinear is forced for d=2
};

// L = max(10, 8/min a_j); N = 2^14 for d=1, 2^10 per axis for d=2.
FFTGrid default_grid(const ModelSpec& m);

// Evaluates C_jk(h) from closed forms (d=1) or an FFT-sampled table with
// (bi)linear interpolation. Immutable after construction; evaluation is
// const and thread-compatible.
class CovFunction {
 public:
  static CovFunction closed_form(const ModelSpec& m);
  static CovFunction fft_grid(const ModelSpec& m, const FFTGrid& grid);

  double eval(int j, int k, const Eigen::VectorXd& h) const;
  double eval1(int j, int k, double h) const;  // d=1 shorthand
  Eigen::MatrixXd matrix_at(const Eigen::VectorXd& h) const;

  const ModelSpec& model() const { return model_; }
  bool is_fft() const { return fft_; }
  const FFTGrid& grid() const { return grid_; }
  std::string backend_desc(int j, int k) const;
  const std::vector<std::string>& warnings() const { return warnings_; }
  // max over channels of max|Im|/max|Re| left by the transform (FFT tables)
  double imag_residue() const { return imag_residue_; }

 private:
  CovFunction() = default;

  struct Channel {
    enum class ReR { zero, diag_matern, scaled_matern, smm, alt32, sqexp, table };
    enum class ImR { zero, claim1, claim2, claim3, table };
    ReR rer = ReR::zero;
    ImR imr = ImR::zero;
    double sre = 0.0, sim = 0.0;  // σ_jk parts
    double gphi = 1.0, gim = 1.0; // d=1 geometry signs
    double re_scale = 0.0, re_a = 0.0, re_nu = 0.0;  // diag/scaled routes
    ProcessParams pj, pk;                            // pair-parameter routes
    double im_scale = 1.0, im_nu = 0.0, im_aj = 0.0, im_ak = 0.0;
    std::shared_ptr<const CovFunction> im_tab;  // unit imaginary kernel
    Eigen::ArrayXd table;  // FFT table (d=1: N; d=2: N² row-major)
    bool tail_compensated = false;
  };

  static int chidx(int j, int k, int p) { return j * p + k; }
  double eval_pair_d1(int j, int k, double h) const;
  double table_at_d1(const Channel& c, double h) const;
  double table_at_d2(const Channel& c, double h1, double h2) const;

  ModelSpec model_;
  bool fft_ = false;
  FFTGrid grid_;
  std::vector<Channel> channels_;  // filled for j <= k
  std::vector<std::string> warnings_;
  double imag_residue_ = 0.0;
};

inline CovFunction build_cov_grid_fft(const ModelSpec& m, const FFTGrid& grid) {
  return CovFunction::fft_grid(m, grid);
}

// Single-lag convenience built on a fresh backend; use a CovFunction for
// repeated evaluation.
double cross_cov(const ModelSpec& m, int j, int k, const Eigen::VectorXd& h);

// Γ(r,c) = C_{v_r v_c}(s_r - s_c), plus the nugget variance on the diagonal.
Eigen::MatrixXd cov_matrix(const CovFunction& cf,
                           const std::vector<Eigen::VectorXd>& locations,
                           const std::vector<int>& var_index,
                           bool add_nugget = true);

// Conjugated directional measure (negated im matrix, negated φ axis):
// cross_cov(reflected, j, k, h) = cross_cov(original, j, k, -h).
ModelSpec reflect_model(const ModelSpec& m);

// |μ_jk(θ)|²/(σ_jj σ_kk); constant in frequency magnitude by construction.
double coherence_sq(const ModelSpec& m, int j, int k, const Eigen::VectorXd& theta);

struct TailRatioResult {
  double ratio = 0.0;
  bool reliable = true;  // false when h < 1/a_j; the ratio says little there
};

// C_jk(h) against its leading large-h term
// Re(σ_jk)·c*_jk·(a_j h)^{ν_j-1/2}·e^{-a_j h}; diagnostic only.
TailRatioResult tail_ratio(double h, const ProcessParams& pj, const ProcessParams& pk);

// |Cov_ε(s1,s2) − Cov_fBm(s1,s2)| for rescaled Matérn increments at scale
// epsilon; the limit requires ν in (0,1).
double tangent_fbm_gap(double epsilon, double nu, double a, double s1, double s2);

}  // namespace mvm
