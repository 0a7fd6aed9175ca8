#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "so3net/common.hpp"

namespace so3net {

/// Deterministic random source. std::mt19937_64 is fully specified by the
/// standard and the distributions below are implemented by hand, so streams
/// are bit-identical across platforms and compilers for a given seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1) with 53-bit resolution.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller.
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
  }

  /// Complex with independent N(0, 1/2) parts, so E|z|^2 = 1.
  cplx normal_complex() {
    const double s = std::sqrt(0.5);
    return {s * normal(), s * normal()};
  }

  int uniform_int(int n) { return static_cast<int>(engine_() % static_cast<std::uint64_t>(n)); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace so3net
