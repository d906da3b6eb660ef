#pragma once

// Gaussian simulation of a model at arbitrary point sets.
//
// Two generators:
//  - exact: assemble the covariance matrix of the stacked observations,
//    factorize it, and draw jointly Gaussian vectors. Includes the nugget.
//  - spectral: importance-sampled superposition of random frequencies.
//    Frequencies come from a multivariate t proposal with 2*min(nu) degrees
//    of freedom and scale min(a), folded onto a half-space and paired with
//    the mirrored frequency so the field is real; the proposal's tails
//    dominate every channel of the spectral density, keeping the
//    reweighting bounded. Simulates the continuous field only (no nugget).
//
// Row r of `replicates` is replicate r; columns are grouped by variable, so
// column var*n_points + point is that variable at locations[point].
//
// Randomness: std::mt19937_64 seeded per replicate via derive_seed(seed, r)
// with hand-written Box-Muller and Marsaglia-Tsang transforms (see rng.hpp),
// so output is bit-identical for a fixed (seed, method) on any platform.

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mvmatern/model.hpp"

namespace mvm {

enum class SimMethod { exact, spectral };

struct SimRequest {
  ModelSpec model;
  std::vector<Eigen::VectorXd> locations;
  int n_replicates = 1;
  std::uint64_t seed = 0;
  SimMethod method = SimMethod::exact;
  int n_frequencies = 4096;  // spectral method only
};

struct SimResult {
  Eigen::MatrixXd replicates;  // n_replicates x (p * n_points)
  double jitter = 0.0;  // diagonal ridge the factorization needed, 0 if none
};

SimResult simulate(const SimRequest& req);

inline int sim_col(int n_points, int var, int point) {
  return var * n_points + point;
}

// CSV with columns replicate,var,x1[,x2],value, one row per scalar sample
void write_replicates_csv(const std::string& path,
                          const std::vector<Eigen::VectorXd>& locations, int p,
                          const Eigen::MatrixXd& replicates);

}  // namespace mvm
