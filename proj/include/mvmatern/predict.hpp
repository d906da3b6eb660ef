#pragma once

// Conditional Gaussian (cokriging) prediction and cross-validation.
//
// Each target is predicted from a conditioning subset of the observations
// chosen by the mode: every variable, only the target's own variable, or
// only the other variables. Unless zero_mean is set, per-variable empirical
// means of the conditioning dataset are removed before solving and the
// target variable's mean is added back; a variable absent from the
// observations contributes mean zero. The predictive variance covers the
// latent field by default; include_nugget adds the target variable's noise
// variance, which is the right spread for forecasting a new observation.

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mvmatern/covariance.hpp"
#include "mvmatern/io.hpp"
#include "mvmatern/model.hpp"

namespace mvm {

enum class PredictMode { both, univariate, other };

const char* predict_mode_name(PredictMode mode);
PredictMode predict_mode_from_name(const std::string& name);

struct PredictTarget {
  Eigen::VectorXd location;
  int var = 0;
};

struct PredictionRequest {
  ModelSpec model;
  Dataset observed;
  std::vector<PredictTarget> targets;
  PredictMode mode = PredictMode::both;
  bool include_nugget = false;  // variance of a new observation, not the field
  bool zero_mean = false;       // treat the data as already centered
  bool auto_grid = true;        // size the FFT table from data and model
  FFTGrid grid;                 // used when auto_grid is false
  bool use_closed_form = false;  // d=1 only: exact channel formulas
};

struct Prediction {
  double mean = 0.0;
  double variance = 0.0;
};

// Conditional mean and variance per target. An empty conditioning subset
// (say, "other" mode when no other variable was observed) degrades to the
// unconditional law. Throws errc::numeric when the observation covariance
// cannot be factorized even with the jitter ladder.
std::vector<Prediction> cokrige(const PredictionRequest& req);

// Cross-validation over seeded per-variable fold partitions; folds = 0 means
// leave-one-out. Each fold of a variable is held out and predicted from the
// remaining data under every requested mode. The "other" mode never
// conditions on the target variable, so it ignores the fold structure and is
// computed once per variable. RMSE cells come back per (variable, mode),
// together with the per-variable RMSE of predicting plain zero as a
// baseline.
struct CvConfig {
  int folds = 5;  // 0 = leave-one-out
  std::uint64_t seed = 0;
  std::vector<PredictMode> modes = {PredictMode::both, PredictMode::univariate,
                                    PredictMode::other};
  bool include_nugget = false;
  bool zero_mean = false;  // otherwise per-fold training means, no leakage
  bool auto_grid = true;
  FFTGrid grid;
  bool use_closed_form = false;
  int threads = 1;  // fold tasks run in parallel; 0 = hardware concurrency
};

struct CvCell {
  int var = 0;
  PredictMode mode = PredictMode::both;
  double rmse = 0.0;
  int n_predicted = 0;
};

struct CvResult {
  std::vector<CvCell> cells;     // variable-major, one per requested mode
  std::vector<double> baseline;  // per-variable RMSE of the zero prediction
};

CvResult cross_validate(const Dataset& ds, const ModelSpec& model,
                        const CvConfig& cfg = {});

}  // namespace mvm
