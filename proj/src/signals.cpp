#include "so3net/signals.hpp"

#include <algorithm>
#include <cmath>

#include "so3net/fft.hpp"

namespace so3net {

// ---------------------------------------------------------------------------
// Rotations
// ---------------------------------------------------------------------------

RotationMatrix RotationMatrix::from_array(const std::array<double, 9>& entries) {
  RotationMatrix r;
  r.m = entries;
  double max_dev = 0.0;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      double dot = 0.0;
      for (int k = 0; k < 3; ++k) dot += r.at(k, i) * r.at(k, j);
      max_dev = std::max(max_dev, std::abs(dot - (i == j ? 1.0 : 0.0)));
    }
  }
  const double det = r.at(0, 0) * (r.at(1, 1) * r.at(2, 2) - r.at(1, 2) * r.at(2, 1)) -
                     r.at(0, 1) * (r.at(1, 0) * r.at(2, 2) - r.at(1, 2) * r.at(2, 0)) +
                     r.at(0, 2) * (r.at(1, 0) * r.at(2, 1) - r.at(1, 1) * r.at(2, 0));
  SO3NET_CHECK(max_dev <= 1e-12 && std::abs(det - 1.0) <= 1e-12, ShapeError,
               "matrix is not a rotation");
  return r;
}

RotationMatrix RotationMatrix::rot_x(double t) {
  RotationMatrix r;
  r.m = {1, 0, 0, 0, std::cos(t), -std::sin(t), 0, std::sin(t), std::cos(t)};
  return r;
}

RotationMatrix RotationMatrix::rot_y(double t) {
  RotationMatrix r;
  r.m = {std::cos(t), 0, std::sin(t), 0, 1, 0, -std::sin(t), 0, std::cos(t)};
  return r;
}

RotationMatrix RotationMatrix::rot_z(double t) {
  RotationMatrix r;
  r.m = {std::cos(t), -std::sin(t), 0, std::sin(t), std::cos(t), 0, 0, 0, 1};
  return r;
}

RotationMatrix RotationMatrix::operator*(const RotationMatrix& rhs) const {
  RotationMatrix r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double acc = 0.0;
      for (int k = 0; k < 3; ++k) acc += at(i, k) * rhs.at(k, j);
      r.at(i, j) = acc;
    }
  return r;
}

RotationMatrix RotationMatrix::transposed() const {
  RotationMatrix r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r.at(i, j) = at(j, i);
  return r;
}

std::array<double, 3> RotationMatrix::apply(const std::array<double, 3>& p) const {
  return {at(0, 0) * p[0] + at(0, 1) * p[1] + at(0, 2) * p[2],
          at(1, 0) * p[0] + at(1, 1) * p[1] + at(1, 2) * p[2],
          at(2, 0) * p[0] + at(2, 1) * p[1] + at(2, 2) * p[2]};
}

RotationMatrix euler_to_matrix(double alpha, double beta, double gamma) {
  const double ca = std::cos(alpha), sa = std::sin(alpha);
  const double cb = std::cos(beta), sb = std::sin(beta);
  const double cg = std::cos(gamma), sg = std::sin(gamma);
  RotationMatrix r;
  r.m = {ca * cb * cg - sa * sg, -cg * sa - ca * cb * sg, ca * sb,
         ca * sg + cb * cg * sa, ca * cg - cb * sa * sg,  sa * sb,
         -cg * sb,               sb * sg,                 cb};
  return r;
}

namespace {
inline double wrap_2pi(double x) {
  x = std::fmod(x, kTwoPi);
  return x < 0 ? x + kTwoPi : x;
}
}  // namespace

EulerAngles matrix_to_euler(const RotationMatrix& a) {
  const double a33 = std::clamp(a.at(2, 2), -1.0, 1.0);
  EulerAngles e;
  e.beta = std::acos(a33);
  if (a33 >= 1.0 - 1e-12) {  // A = Z(alpha)
    e.beta = 0.0;
    e.alpha = wrap_2pi(std::atan2(a.at(1, 0), a.at(0, 0)));
    e.gamma = 0.0;
  } else if (a33 <= -1.0 + 1e-12) {  // A = Z(alpha) Y(pi)
    e.beta = kPi;
    e.alpha = wrap_2pi(std::atan2(-a.at(1, 0), -a.at(0, 0)));
    e.gamma = 0.0;
  } else {
    e.alpha = wrap_2pi(std::atan2(a.at(1, 2), a.at(0, 2)));
    e.gamma = wrap_2pi(std::atan2(a.at(2, 1), -a.at(2, 0)));
  }
  return e;
}

RotationMatrix random_rotation(Rng& rng) {
  const double alpha = rng.uniform(0.0, kTwoPi);
  const double gamma = rng.uniform(0.0, kTwoPi);
  const double beta = std::acos(rng.uniform(-1.0, 1.0));
  return euler_to_matrix(alpha, beta, gamma);
}

// ---------------------------------------------------------------------------
// Grids and spectra
// ---------------------------------------------------------------------------

EulerGrid EulerGrid::for_band_limit(int band_limit, double oversample) {
  SO3NET_CHECK(band_limit >= 0, ShapeError, "band limit must be non-negative");
  SO3NET_CHECK(oversample >= 1.0, ShapeError, "oversample factor must be >= 1");
  const int na = next_even_5smooth(static_cast<int>(std::ceil(oversample * (2 * band_limit + 2))));
  const int nbt = next_even_5smooth(static_cast<int>(std::ceil(oversample * (4 * band_limit + 4))));
  return {na, nbt / 2 + 1, na};
}

double SpectralSignal::off_column_residue(int p) const {
  double worst = 0.0;
  for (int l = 0; l <= band_limit; ++l)
    for (int m = -l; m <= l; ++m)
      for (int n = -l; n <= l; ++n)
        if (n != p) worst = std::max(worst, std::abs(at(l, m, n)));
  return worst;
}

bool SpectralSignal::in_column(int p, double tol) const {
  double peak = 0.0;
  for (const cplx& c : coeffs) peak = std::max(peak, std::abs(c));
  if (peak == 0.0) return true;
  return off_column_residue(p) <= tol * peak;
}

// ---------------------------------------------------------------------------
// Sphere fields
// ---------------------------------------------------------------------------

SphereField SphereField::scalar_field(int n_lat, int n_lon) {
  SO3NET_CHECK(n_lat >= 2 && n_lon >= 1, ShapeError, "grid too small");
  SphereField f;
  f.n_lat = n_lat;
  f.n_lon = n_lon;
  f.kind = FieldKind::kScalar;
  f.t.assign(static_cast<size_t>(n_lat) * n_lon, 0.0);
  return f;
}

SphereField SphereField::vector_field(int n_lat, int n_lon) {
  SO3NET_CHECK(n_lat >= 2 && n_lon >= 1, ShapeError, "grid too small");
  SphereField f;
  f.n_lat = n_lat;
  f.n_lon = n_lon;
  f.kind = FieldKind::kVector;
  f.u.assign(static_cast<size_t>(n_lat) * n_lon, 0.0);
  f.v.assign(static_cast<size_t>(n_lat) * n_lon, 0.0);
  return f;
}

void SphereField::zero_poles() {
  if (kind != FieldKind::kVector) return;
  for (int j = 0; j < n_lon; ++j) {
    u[node(0, j)] = v[node(0, j)] = 0.0;
    u[node(n_lat - 1, j)] = v[node(n_lat - 1, j)] = 0.0;
  }
}

namespace {

// Bilinear read of a lat-major table at (lon alpha, colat beta); periodic in
// longitude, clamped in colatitude.
double bilinear(const std::vector<double>& tab, int n_lat, int n_lon, double alpha, double beta) {
  double pa = alpha / (kTwoPi / n_lon);
  pa -= std::floor(pa / n_lon) * n_lon;
  const int j0 = static_cast<int>(std::floor(pa)) % n_lon;
  const int j1 = (j0 + 1) % n_lon;
  const double fa = pa - std::floor(pa);

  double pb = beta / (kPi / (n_lat - 1));
  pb = std::clamp(pb, 0.0, static_cast<double>(n_lat - 1));
  const int k0 = std::min(static_cast<int>(std::floor(pb)), n_lat - 2);
  const int k1 = k0 + 1;
  const double fb = pb - k0;

  const auto v = [&](int k, int j) { return tab[static_cast<size_t>(k) * n_lon + j]; };
  return (1 - fb) * ((1 - fa) * v(k0, j0) + fa * v(k0, j1)) +
         fb * ((1 - fa) * v(k1, j0) + fa * v(k1, j1));
}

}  // namespace

SpatialSignalSO3 associate_scalar(const SphereField& field, const EulerGrid& grid) {
  SO3NET_CHECK(field.kind == FieldKind::kScalar, ShapeError, "scalar field required");
  SpatialSignalSO3 x = SpatialSignalSO3::zero(grid);
  for (int j = 0; j < grid.n_alpha; ++j) {
    for (int k = 0; k < grid.n_beta; ++k) {
      const double val = bilinear(field.t, field.n_lat, field.n_lon, grid.alpha(j), grid.beta(k));
      for (int i = 0; i < grid.n_gamma; ++i) x.at(j, k, i) = val;
    }
  }
  return x;
}

SpatialSignalSO3 associate_vector(const SphereField& field, const EulerGrid& grid) {
  SO3NET_CHECK(field.kind == FieldKind::kVector, ShapeError, "vector field required");
  SpatialSignalSO3 x = SpatialSignalSO3::zero(grid);
  std::vector<cplx> phase(grid.n_gamma);
  for (int i = 0; i < grid.n_gamma; ++i)
    phase[i] = {std::cos(grid.gamma(i)), -std::sin(grid.gamma(i))};
  for (int j = 0; j < grid.n_alpha; ++j) {
    for (int k = 0; k < grid.n_beta; ++k) {
      const double uu = bilinear(field.u, field.n_lat, field.n_lon, grid.alpha(j), grid.beta(k));
      const double vv = bilinear(field.v, field.n_lat, field.n_lon, grid.alpha(j), grid.beta(k));
      const cplx w = cplx(0, 1) * cplx(uu, vv);  // i (U + iV)
      for (int i = 0; i < grid.n_gamma; ++i) x.at(j, k, i) = w * phase[i];
    }
  }
  return x;
}

SphereField extract_vector(const SpatialSignalSO3& x, double tol) {
  const EulerGrid& g = x.grid;
  std::vector<cplx> phase(g.n_gamma);
  for (int i = 0; i < g.n_gamma; ++i)
    phase[i] = {std::cos(g.gamma(i)), std::sin(g.gamma(i))};

  SphereField f = SphereField::vector_field(g.n_beta, g.n_alpha);
  double total_sq = 0.0, off_sq = 0.0;
  for (int j = 0; j < g.n_alpha; ++j) {
    for (int k = 0; k < g.n_beta; ++k) {
      cplx w = 0.0;
      for (int i = 0; i < g.n_gamma; ++i) {
        const cplx s = x.at(j, k, i);
        w += s * phase[i];
        total_sq += std::norm(s);
      }
      w /= static_cast<double>(g.n_gamma);
      for (int i = 0; i < g.n_gamma; ++i)
        off_sq += std::norm(x.at(j, k, i) - w * std::conj(phase[i]));
      f.u[f.node(k, j)] = w.imag();
      f.v[f.node(k, j)] = -w.real();
    }
  }
  SO3NET_CHECK(off_sq <= tol * tol * total_sq || total_sq == 0.0, ShapeError,
               "signal has gamma content outside the e^{-i gamma} frequency");
  f.zero_poles();
  return f;
}

SpatialSignalSO3 left_translate_spatial(const SpatialSignalSO3& x, const RotationMatrix& b) {
  const EulerGrid& g = x.grid;
  const RotationMatrix binv = b.transposed();
  SpatialSignalSO3 out = SpatialSignalSO3::zero(g);

#pragma omp parallel for schedule(static)
  for (std::int64_t node = 0; node < g.size(); ++node) {
    const int j = static_cast<int>(node / (static_cast<std::int64_t>(g.n_beta) * g.n_gamma));
    const int k = static_cast<int>((node / g.n_gamma) % g.n_beta);
    const int i = static_cast<int>(node % g.n_gamma);
    const EulerAngles e =
        matrix_to_euler(binv * euler_to_matrix(g.alpha(j), g.beta(k), g.gamma(i)));

    double pa = e.alpha / (kTwoPi / g.n_alpha);
    double pg = e.gamma / (kTwoPi / g.n_gamma);
    double pb = std::clamp(e.beta / (kPi / (g.n_beta - 1)), 0.0, static_cast<double>(g.n_beta - 1));
    const int ja = static_cast<int>(std::floor(pa)) % g.n_alpha;
    const int ig = static_cast<int>(std::floor(pg)) % g.n_gamma;
    const int kb = std::min(static_cast<int>(std::floor(pb)), g.n_beta - 2);
    const double fa = pa - std::floor(pa), fg = pg - std::floor(pg), fb = pb - kb;

    cplx acc = 0.0;
    for (int da = 0; da < 2; ++da) {
      for (int db = 0; db < 2; ++db) {
        for (int dg = 0; dg < 2; ++dg) {
          const double w = (da ? fa : 1 - fa) * (db ? fb : 1 - fb) * (dg ? fg : 1 - fg);
          acc += w * x.at((ja + da) % g.n_alpha, kb + db, (ig + dg) % g.n_gamma);
        }
      }
    }
    out.samples[node] = acc;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

double distance(const SphereField& x, const SphereField& y) {
  SO3NET_CHECK(x.same_grid(y), ShapeError, "field grids differ");
  SO3NET_CHECK(x.kind == FieldKind::kVector && y.kind == FieldKind::kVector, ShapeError,
               "distance is defined for vector fields");
  double acc = 0.0;
  for (int k = 0; k < x.n_lat; ++k) {
    const double w = std::sin(x.colat(k));
    for (int j = 0; j < x.n_lon; ++j) {
      const double du = x.u[x.node(k, j)] - y.u[y.node(k, j)];
      const double dv = x.v[x.node(k, j)] - y.v[y.node(k, j)];
      acc += w * std::sqrt(du * du + dv * dv);
    }
  }
  return acc / (static_cast<double>(x.n_lon) * x.n_lat);
}

double loss_weighted_mse(const SphereField& x, const SphereField& y) {
  SO3NET_CHECK(x.same_grid(y), ShapeError, "field grids differ");
  SO3NET_CHECK(x.kind == FieldKind::kVector && y.kind == FieldKind::kVector, ShapeError,
               "loss is defined for vector fields");
  double acc = 0.0;
  for (int k = 0; k < x.n_lat; ++k) {
    const double s = std::sin(x.colat(k));
    const double w = s * s;
    for (int j = 0; j < x.n_lon; ++j) {
      const double du = x.u[x.node(k, j)] - y.u[y.node(k, j)];
      const double dv = x.v[x.node(k, j)] - y.v[y.node(k, j)];
      acc += w * (du * du + dv * dv);
    }
  }
  return acc;
}

}  // namespace so3net
