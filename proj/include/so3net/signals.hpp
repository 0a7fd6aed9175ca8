#pragma once

#include <array>
#include <optional>
#include <vector>

#include "so3net/common.hpp"
#include "so3net/rng.hpp"

namespace so3net {

// ---------------------------------------------------------------------------
// Rotations and Euler ZYZ geometry
// ---------------------------------------------------------------------------

/// 3x3 rotation matrix, row-major. Factories validate orthogonality and
/// orientation to 1e-12.
struct RotationMatrix {
  std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};

  double at(int r, int c) const { return m[3 * r + c]; }
  double& at(int r, int c) { return m[3 * r + c]; }

  static RotationMatrix identity() { return {}; }
  static RotationMatrix from_array(const std::array<double, 9>& entries);
  static RotationMatrix rot_x(double theta);
  static RotationMatrix rot_y(double theta);
  static RotationMatrix rot_z(double theta);

  RotationMatrix operator*(const RotationMatrix& rhs) const;
  RotationMatrix transposed() const;  // = inverse
  std::array<double, 3> apply(const std::array<double, 3>& p) const;
};

struct EulerAngles {
  double alpha = 0.0, beta = 0.0, gamma = 0.0;
};

/// Z(alpha) Y(beta) Z(gamma); angles need not lie in the canonical ranges.
RotationMatrix euler_to_matrix(double alpha, double beta, double gamma);

/// Inverse of euler_to_matrix with beta = arccos(A33) in [0, pi] and
/// alpha, gamma in [0, 2pi). On the gimbal locus |A33| = 1 the convention
/// gamma = 0 applies.
EulerAngles matrix_to_euler(const RotationMatrix& a);

/// Haar-uniform rotation: alpha, gamma uniform on [0, 2pi), cos(beta) uniform
/// on [-1, 1].
RotationMatrix random_rotation(Rng& rng);

// ---------------------------------------------------------------------------
// Grids and signal containers
// ---------------------------------------------------------------------------

/// Sampling grid for Euler angles: alpha_j = 2pi j / n_alpha,
/// gamma_i = 2pi i / n_gamma, beta_k = pi k / (n_beta - 1) including both
/// endpoints. The beta axis extends to a torus of 2(n_beta - 1) nodes.
struct EulerGrid {
  int n_alpha = 0, n_beta = 0, n_gamma = 0;

  /// Grid meeting the sampling minima for band limit L (with optional
  /// oversampling), rounded up to even 5-smooth FFT sizes.
  static EulerGrid for_band_limit(int band_limit, double oversample = 1.0);

  bool supports(int band_limit) const {
    return n_alpha >= 2 * band_limit + 1 && n_gamma >= 2 * band_limit + 1 &&
           n_beta >= 2 * band_limit + 2;
  }

  int n_beta_torus() const { return 2 * (n_beta - 1); }
  double alpha(int j) const { return kTwoPi * j / n_alpha; }
  double beta(int k) const { return kPi * k / (n_beta - 1); }
  double gamma(int i) const { return kTwoPi * i / n_gamma; }

  std::int64_t size() const { return static_cast<std::int64_t>(n_alpha) * n_beta * n_gamma; }
  std::int64_t index(int j, int k, int i) const {
    return (static_cast<std::int64_t>(j) * n_beta + k) * n_gamma + i;
  }
  bool operator==(const EulerGrid& o) const = default;
};

/// Complex samples on an EulerGrid, gamma fastest.
struct SpatialSignalSO3 {
  EulerGrid grid;
  std::vector<cplx> samples;

  static SpatialSignalSO3 zero(const EulerGrid& g) { return {g, std::vector<cplx>(g.size())}; }
  cplx& at(int j, int k, int i) { return samples[grid.index(j, k, i)]; }
  cplx at(int j, int k, int i) const { return samples[grid.index(j, k, i)]; }
};

/// Ragged complex coefficient array x^l_{m,n}, 0 <= l <= L, -l <= m,n <= l,
/// degree-major then m then n. `order` tags membership of the column subspace
/// (all coefficients off column n = order vanish); it is advisory metadata,
/// verified on demand and never silently trusted.
struct SpectralSignal {
  int band_limit = 0;
  std::optional<int> order;
  std::vector<cplx> coeffs;

  static SpectralSignal zero(int band_limit, std::optional<int> order = std::nullopt) {
    return {band_limit, order, std::vector<cplx>(coeff_count(band_limit))};
  }
  cplx& at(int l, int m, int n) { return coeffs[coeff_index(l, m, n)]; }
  cplx at(int l, int m, int n) const { return coeffs[coeff_index(l, m, n)]; }

  /// Largest |coefficient| outside column n = p.
  double off_column_residue(int p) const;
  /// True if the off-column residue is at most tol * (largest |coefficient|).
  bool in_column(int p, double tol = 1e-8) const;
};

// ---------------------------------------------------------------------------
// Sphere fields
// ---------------------------------------------------------------------------

enum class FieldKind : std::uint8_t { kScalar = 0, kVector = 1 };

/// Values on a lon/lat grid: longitude alpha_j = 2pi j / n_lon, colatitude
/// beta_k = pi k / (n_lat - 1) including both poles. Storage is
/// latitude-major. Vector fields carry eastward (U) and northward (V)
/// components and are zero at the poles, where the tangent frame is undefined.
struct SphereField {
  int n_lat = 0, n_lon = 0;
  FieldKind kind = FieldKind::kScalar;
  std::vector<double> t;     // scalar values, size n_lat*n_lon
  std::vector<double> u, v;  // vector components, size n_lat*n_lon each

  static SphereField scalar_field(int n_lat, int n_lon);
  static SphereField vector_field(int n_lat, int n_lon);

  std::int64_t node(int k, int j) const { return static_cast<std::int64_t>(k) * n_lon + j; }
  double lon(int j) const { return kTwoPi * j / n_lon; }
  double colat(int k) const { return kPi * k / (n_lat - 1); }

  /// Force vector values at the pole rows to zero.
  void zero_poles();
  bool same_grid(const SphereField& o) const { return n_lat == o.n_lat && n_lon == o.n_lon; }
};

/// Lon/lat grid matching an Euler grid (n_lat = n_beta, n_lon = n_alpha).
inline std::pair<int, int> sphere_grid_of(const EulerGrid& g) { return {g.n_beta, g.n_alpha}; }

// ---------------------------------------------------------------------------
// Associated functions: sphere tensors <-> equivariant signals
// ---------------------------------------------------------------------------

/// Scalar field f -> gamma-independent signal f(p(alpha, beta)); bilinear
/// interpolation in (alpha, beta) when the grids differ.
SpatialSignalSO3 associate_scalar(const SphereField& field, const EulerGrid& grid);

/// Vector field (U, V) -> i (U + iV) e^{-i gamma}; the result lies in the
/// column-1 subspace. Pole rows contribute zero.
SpatialSignalSO3 associate_vector(const SphereField& field, const EulerGrid& grid);

/// Inverse of associate_vector on a shared grid: with w = value at gamma = 0,
/// U = Im w and V = -Re w. Rejects signals whose gamma content is not the
/// single e^{-i gamma} frequency (relative residue above tol).
SphereField extract_vector(const SpatialSignalSO3& x, double tol = 1e-8);

/// Left translation (l_B x)(A) = x(B^-1 A) by trilinear resampling in Euler
/// angles. Interpolation-accuracy reference only; exact rotation is the
/// spectral route.
SpatialSignalSO3 left_translate_spatial(const SpatialSignalSO3& x, const RotationMatrix& b);

// ---------------------------------------------------------------------------
// Field metrics
// ---------------------------------------------------------------------------

/// Mean sin(beta)-weighted magnitude of the pointwise difference:
///   (1/(A*B)) sum sin(beta_k) sqrt(dU^2 + dV^2).
double distance(const SphereField& x, const SphereField& y);

/// sum sin(beta_k)^2 * (dU^2 + dV^2), the training loss.
double loss_weighted_mse(const SphereField& x, const SphereField& y);

}  // namespace so3net
