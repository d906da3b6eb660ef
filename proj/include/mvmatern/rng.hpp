#pragma once

// Deterministic random number stack. The engine is std::mt19937_64, whose
// sequence is fully specified by the C++ standard, and every variate
// transform is written out here instead of using <random> distributions,
// whose algorithms are implementation-defined. A fixed seed therefore gives
// bit-identical streams on any conforming compiler.
//
// Independent streams come from derive_seed(master, index), one SplitMix64
// step, so callers can generate replicates out of order or in parallel.

#include <cmath>
#include <cstdint>
#include <random>

#include "mvmatern/errors.hpp"

namespace mvm {

// SplitMix64 output function, used to spread correlated (master seed, index)
// pairs into well-mixed engine seeds
inline std::uint64_t splitmix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return splitmix64(master + (index + 1) * 0x9e3779b97f4a7c15ull);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t u64() { return eng_(); }

  // uniform integer in [0, bound), rejection sampled so no modulo bias
  std::uint64_t below(std::uint64_t bound) {
    if (bound == 0) fail(errc::args, "below: bound must be positive");
    const std::uint64_t cut = (0ull - bound) % bound;
    std::uint64_t r;
    do {
      r = eng_();
    } while (r < cut);
    return r % bound;
  }

  // uniform on (0, 1]: 53 random bits, shifted off zero so logs are safe
  double uniform() { return ((double)(eng_() >> 11) + 1.0) * 0x1p-53; }

  // Box-Muller, both outputs used
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double r = std::sqrt(-2.0 * std::log(uniform()));
    const double t = 2.0 * kPi * uniform();
    spare_ = r * std::sin(t);
    have_spare_ = true;
    return r * std::cos(t);
  }

  // Marsaglia-Tsang squeeze for shape >= 1; below 1, boost from shape+1
  double gamma(double shape) {
    if (!(shape > 0.0)) fail(errc::args, "gamma shape must be positive");
    if (shape < 1.0)
      return gamma(shape + 1.0) * std::pow(uniform(), 1.0 / shape);
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  double chisq(double dof) { return 2.0 * gamma(0.5 * dof); }

 private:
  static constexpr double kPi = 3.141592653589793238462643383279502884;
  std::mt19937_64 eng_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace mvm
