#pragma once

// Laurent tail expansion of a spectral-density channel along the positive
// frequency axis (d=1) or radius (d=2). Shared by the FFT grid's truncation
// compensation and the quadrature oracle's analytic tails. Valid above the
// pair's scale parameters; the squared-exponential family has no power-law
// tail and is rejected.

#include <mvmatern/model.hpp>

#include "powertail.hpp"

namespace mvm::detail {

tail::PowerSeries channel_tail_series(const ModelSpec& m, int j, int k,
                                      int terms);

tail::PowerSeries conj_series(tail::PowerSeries s);

// Coefficients D_1..D_orders of the large-lag expansion
//   C_jk(h) = sum_s D_s h^{-s} + (exponentially small terms), d=1.
// A cross channel with Im(sigma_jk) != 0 carries an odd sign(x) component,
// so its density jumps at x = 0; integrating the Fourier transform by parts
// across that point turns the jump of each density derivative into an
// inverse power of h. The jumps come from the analytic envelope's Taylor
// coefficients at the origin times the bracket discontinuity 2i*Im(sigma).
// Channels whose density is smooth at x = 0 (diagonals, real cross mass)
// decay exponentially and return an empty vector. The FFT lag grid uses
// these coefficients to cancel periodic images of the slowly decaying part.
std::vector<double> channel_lag_tail(const ModelSpec& m, int j, int k,
                                     int orders);

// Lattice sums over the nonzero integers, S_s(z) = sum_{r != 0} (z+r)^{-s},
// for z in [-1/2, 1/2]. image_lattice_sums writes S_1..S_smax (smax <= 8)
// into out in one pass; the scalar overload returns a single order. Used to
// subtract the periodic images of an inverse-power covariance tail from an
// FFT lag table.
void image_lattice_sums(int smax, double z, double* out);
double image_lattice_sum(int s, double z);

}  // namespace mvm::detail
