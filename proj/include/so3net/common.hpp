#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace so3net {

using cplx = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846264338327950288;
inline constexpr double kTwoPi = 2.0 * kPi;

/// Raised when array shapes, band limits or grids are incompatible.
struct ShapeError : std::runtime_error {
  explicit ShapeError(const std::string& what) : std::runtime_error(what) {}
};

/// Raised on malformed or unreadable files.
struct IoError : std::runtime_error {
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

/// Raised on invalid run configuration.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Raised when a computation produces non-finite values.
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

#define SO3NET_CHECK(cond, ErrorType, msg) \
  do {                                     \
    if (!(cond)) throw ErrorType(msg);     \
  } while (0)

/// Number of (m, n) pairs for degrees below l: sum_{j<l} (2j+1)^2.
inline std::int64_t degree_offset(int l) {
  const std::int64_t ll = l;
  return ll * (2 * ll - 1) * (2 * ll + 1) / 3;
}

/// Total coefficient count for band limit L.
inline std::int64_t coeff_count(int band_limit) { return degree_offset(band_limit + 1); }

/// Flat index of coefficient (l, m, n), with -l <= m, n <= l.
inline std::int64_t coeff_index(int l, int m, int n) {
  return degree_offset(l) + static_cast<std::int64_t>(m + l) * (2 * l + 1) + (n + l);
}

/// i^k for any integer k.
inline cplx ipow(int k) {
  switch (((k % 4) + 4) % 4) {
    case 0: return {1.0, 0.0};
    case 1: return {0.0, 1.0};
    case 2: return {-1.0, 0.0};
    default: return {0.0, -1.0};
  }
}

/// (-1)^k for any integer k.
inline double parity(int k) { return (k % 2 == 0) ? 1.0 : -1.0; }

}  // namespace so3net
