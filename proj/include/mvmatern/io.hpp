#pragma once

// Dataset CSV ingestion, model config round-tripping, and the glue between
// datasets and covariance evaluation.

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "mvmatern/covariance.hpp"
#include "mvmatern/model.hpp"

namespace mvm {

// Tabular observations: one record per (location, variable, value). d and p
// are inferred from the file; var indices are 0-based and dense in [0, p).
struct Dataset {
  Eigen::MatrixXd locations;  // n × d
  Eigen::VectorXi var;        // n
  Eigen::VectorXd value;      // n

  int n() const { return static_cast<int>(value.size()); }
  int dim() const { return static_cast<int>(locations.cols()); }
  int p() const { return var.size() ? var.maxCoeff() + 1 : 0; }
  // rows per variable, length p()
  std::vector<int> counts() const;
};

// CSV with header x1[,x2],var,value. Rejects NaN values, inconsistent column
// counts, and malformed fields, reporting the offending line number.
Dataset read_dataset(const std::string& path);
void write_dataset(const std::string& path, const Dataset& ds);

// Model round trip through a flat key=value config. Writing uses a reversible
// decimal form (17 significant digits); reading is strict: unknown keys and
// missing required keys are errors, and the loaded spec must validate.
ModelSpec read_model(const std::string& path);
void write_model(const std::string& path, const ModelSpec& m);
std::string model_to_string(const ModelSpec& m);
ModelSpec model_from_string(const std::string& text);

// Dataset/model compatibility: dimensions agree, var indices are within the
// model's process count, and duplicated (location, var) pairs appear only for
// variables carrying a positive nugget (otherwise the covariance matrix is
// singular by construction).
void require_compatible(const ModelSpec& m, const Dataset& ds);

// Observation covariance Γ from a dataset's layout (nugget on the diagonal).
Eigen::MatrixXd cov_matrix_obs(const CovFunction& cf, const Dataset& ds,
                               bool add_nugget = true);

}  // namespace mvm
