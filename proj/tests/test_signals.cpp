#include "so3net/signals.hpp"

#include "so3net/wigner.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace so3net;

namespace {

double max_diff(const RotationMatrix& a, const RotationMatrix& b) {
  double worst = 0.0;
  for (int i = 0; i < 9; ++i) worst = std::max(worst, std::abs(a.m[i] - b.m[i]));
  return worst;
}

}  // namespace

TEST(Euler, IdentityAndExplicitEntries) {
  EXPECT_LT(max_diff(euler_to_matrix(0, 0, 0), RotationMatrix::identity()), 1e-15);

  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const double a = rng.uniform(0.0, kTwoPi), b = rng.uniform(0.0, kPi),
                 g = rng.uniform(0.0, kTwoPi);
    const RotationMatrix r = euler_to_matrix(a, b, g);
    const double ca = std::cos(a), sa = std::sin(a);
    const double cb = std::cos(b), sb = std::sin(b);
    const double cg = std::cos(g), sg = std::sin(g);
    EXPECT_NEAR(r.at(0, 0), ca * cb * cg - sa * sg, 1e-14);
    EXPECT_NEAR(r.at(0, 1), -cg * sa - ca * cb * sg, 1e-14);
    EXPECT_NEAR(r.at(0, 2), ca * sb, 1e-14);
    EXPECT_NEAR(r.at(1, 0), ca * sg + cb * cg * sa, 1e-14);
    EXPECT_NEAR(r.at(1, 1), ca * cg - cb * sa * sg, 1e-14);
    EXPECT_NEAR(r.at(1, 2), sa * sb, 1e-14);
    EXPECT_NEAR(r.at(2, 0), -cg * sb, 1e-14);
    EXPECT_NEAR(r.at(2, 1), sb * sg, 1e-14);
    EXPECT_NEAR(r.at(2, 2), cb, 1e-14);

    // Composition against the generator matrices.
    const RotationMatrix composed =
        RotationMatrix::rot_z(a) * RotationMatrix::rot_y(b) * RotationMatrix::rot_z(g);
    EXPECT_LT(max_diff(r, composed), 1e-14);
  }
}

TEST(Euler, TorusExtensionIdentity) {
  Rng rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    const double a = rng.uniform(0.0, kTwoPi);
    const double b = rng.uniform(kPi, kTwoPi);  // out-of-range branch
    const double g = rng.uniform(0.0, kTwoPi);
    const RotationMatrix lhs = euler_to_matrix(a, b, g);
    const RotationMatrix rhs = euler_to_matrix(a + kPi, kTwoPi - b, g + kPi);
    EXPECT_LT(max_diff(lhs, rhs), 1e-13);
  }
}

TEST(Euler, MatrixRoundTrip) {
  Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const double a = rng.uniform(0.0, kTwoPi);
    const double b = rng.uniform(0.01, kPi - 0.01);
    const double g = rng.uniform(0.0, kTwoPi);
    const RotationMatrix r = euler_to_matrix(a, b, g);
    const EulerAngles e = matrix_to_euler(r);
    EXPECT_LT(max_diff(euler_to_matrix(e.alpha, e.beta, e.gamma), r), 1e-10);
    EXPECT_GE(e.alpha, 0.0);
    EXPECT_LT(e.alpha, kTwoPi);
    EXPECT_GE(e.beta, 0.0);
    EXPECT_LE(e.beta, kPi);
  }
}

TEST(Euler, GimbalConvention) {
  const EulerAngles id = matrix_to_euler(RotationMatrix::identity());
  EXPECT_EQ(id.alpha, 0.0);
  EXPECT_EQ(id.beta, 0.0);
  EXPECT_EQ(id.gamma, 0.0);

  const double theta = 2.1;
  const EulerAngles e = matrix_to_euler(RotationMatrix::rot_z(theta));
  EXPECT_NEAR(e.alpha, theta, 1e-12);
  EXPECT_EQ(e.beta, 0.0);
  EXPECT_EQ(e.gamma, 0.0);

  const EulerAngles f = matrix_to_euler(RotationMatrix::rot_z(0.4) * RotationMatrix::rot_y(kPi));
  EXPECT_NEAR(f.beta, kPi, 1e-12);
  EXPECT_EQ(f.gamma, 0.0);
  EXPECT_NEAR(f.alpha, 0.4, 1e-12);
}

TEST(Euler, RejectsNonRotation) {
  std::array<double, 9> bad{1, 0, 0, 0, 2, 0, 0, 0, 1};
  EXPECT_THROW(RotationMatrix::from_array(bad), ShapeError);
  std::array<double, 9> reflection{1, 0, 0, 0, 1, 0, 0, 0, -1};
  EXPECT_THROW(RotationMatrix::from_array(reflection), ShapeError);
}

TEST(Grid, DefaultSizesMeetMinima) {
  for (int L : {0, 1, 2, 4, 6, 8, 12, 16}) {
    const EulerGrid g = EulerGrid::for_band_limit(L);
    EXPECT_TRUE(g.supports(L)) << "L=" << L;
    EXPECT_EQ(g.n_alpha % 2, 0);
    EXPECT_EQ(g.n_gamma % 2, 0);
    EXPECT_EQ(g.n_beta_torus() % 2, 0);
  }
  const EulerGrid g2 = EulerGrid::for_band_limit(8, 2.0);
  EXPECT_GE(g2.n_alpha, 36);
}

TEST(Associate, ScalarConstantAndCosBeta) {
  const EulerGrid grid = EulerGrid::for_band_limit(4);
  SphereField ones = SphereField::scalar_field(grid.n_beta, grid.n_alpha);
  for (double& x : ones.t) x = 1.0;
  const SpatialSignalSO3 xs = associate_scalar(ones, grid);
  for (const cplx& c : xs.samples) EXPECT_LT(std::abs(c - cplx(1.0)), 1e-15);

  // f(p) = p_z has associated signal cos(beta).
  SphereField pz = SphereField::scalar_field(grid.n_beta, grid.n_alpha);
  for (int k = 0; k < pz.n_lat; ++k)
    for (int j = 0; j < pz.n_lon; ++j) pz.t[pz.node(k, j)] = std::cos(pz.colat(k));
  const SpatialSignalSO3 xz = associate_scalar(pz, grid);
  for (int j = 0; j < grid.n_alpha; ++j)
    for (int k = 0; k < grid.n_beta; ++k)
      for (int i = 0; i < grid.n_gamma; ++i)
        EXPECT_NEAR(xz.at(j, k, i).real(), std::cos(grid.beta(k)), 1e-14);
}

TEST(Associate, ScalarIsRightZInvariantOnNodes) {
  const EulerGrid grid = EulerGrid::for_band_limit(3);
  Rng rng(5);
  SphereField f = SphereField::scalar_field(grid.n_beta, grid.n_alpha);
  for (double& x : f.t) x = rng.normal();
  const SpatialSignalSO3 x = associate_scalar(f, grid);
  for (int j = 0; j < grid.n_alpha; ++j)
    for (int k = 0; k < grid.n_beta; ++k)
      for (int i = 0; i < grid.n_gamma; ++i)
        EXPECT_EQ(x.at(j, k, i), x.at(j, k, (i + 3) % grid.n_gamma));
}

TEST(Associate, VectorPhaseAndEquivariance) {
  const EulerGrid grid = EulerGrid::for_band_limit(4);
  SphereField f = SphereField::vector_field(grid.n_beta, grid.n_alpha);
  for (int k = 1; k < f.n_lat - 1; ++k)
    for (int j = 0; j < f.n_lon; ++j) f.u[f.node(k, j)] = 1.0;
  const SpatialSignalSO3 x = associate_vector(f, grid);

  // U=1, V=0 at gamma=0 gives value i away from the poles.
  EXPECT_LT(std::abs(x.at(0, 2, 0) - cplx(0.0, 1.0)), 1e-14);
  // Grid-aligned right Z-translation multiplies by e^{-i theta} exactly.
  const int shift = 3;
  const cplx phase = {std::cos(grid.gamma(shift)), -std::sin(grid.gamma(shift))};
  for (int j = 0; j < grid.n_alpha; ++j)
    for (int k = 0; k < grid.n_beta; ++k)
      for (int i = 0; i + shift < grid.n_gamma; ++i)
        EXPECT_LT(std::abs(x.at(j, k, i + shift) - phase * x.at(j, k, i)), 1e-14);
}

TEST(Associate, VectorZeroFieldAndGammaContent) {
  const EulerGrid grid = EulerGrid::for_band_limit(3);
  SphereField zero = SphereField::vector_field(grid.n_beta, grid.n_alpha);
  const SpatialSignalSO3 xz = associate_vector(zero, grid);
  for (const cplx& c : xz.samples) EXPECT_EQ(c, cplx(0.0));

  // Discrete gamma-DFT of an associated vector signal is confined to the
  // e^{-i gamma} bin; scalar association is confined to the zero bin.
  Rng rng(8);
  SphereField f = SphereField::vector_field(grid.n_beta, grid.n_alpha);
  for (int k = 1; k < f.n_lat - 1; ++k)
    for (int j = 0; j < f.n_lon; ++j) {
      f.u[f.node(k, j)] = rng.normal();
      f.v[f.node(k, j)] = rng.normal();
    }
  const SpatialSignalSO3 x = associate_vector(f, grid);
  const int ng = grid.n_gamma;
  for (int j = 0; j < grid.n_alpha; ++j)
    for (int k = 0; k < grid.n_beta; ++k)
      for (int bin = 0; bin < ng; ++bin) {
        cplx acc = 0.0;
        for (int i = 0; i < ng; ++i) {
          const double ph = -bin * grid.gamma(i);
          acc += x.at(j, k, i) * cplx(std::cos(ph), std::sin(ph));
        }
        if (bin != ng - 1) {
          EXPECT_LT(std::abs(acc) / ng, 1e-12);  // e^{-i gamma} lands in bin ng-1
        }
      }
}

TEST(Extract, RoundTripAndValidation) {
  const EulerGrid grid = EulerGrid::for_band_limit(5);
  Rng rng(12);
  SphereField f = SphereField::vector_field(grid.n_beta, grid.n_alpha);
  for (int k = 1; k < f.n_lat - 1; ++k)
    for (int j = 0; j < f.n_lon; ++j) {
      f.u[f.node(k, j)] = rng.normal();
      f.v[f.node(k, j)] = rng.normal();
    }
  const SphereField back = extract_vector(associate_vector(f, grid));
  double worst = 0.0;
  for (size_t i = 0; i < f.u.size(); ++i) {
    worst = std::max(worst, std::abs(back.u[i] - f.u[i]));
    worst = std::max(worst, std::abs(back.v[i] - f.v[i]));
  }
  EXPECT_LE(worst, 1e-12);

  // Constant value i at gamma = 0 means U = 1, V = 0.
  SpatialSignalSO3 c = SpatialSignalSO3::zero(grid);
  for (int j = 0; j < grid.n_alpha; ++j)
    for (int k = 0; k < grid.n_beta; ++k)
      for (int i = 0; i < grid.n_gamma; ++i) {
        const double g = grid.gamma(i);
        c.at(j, k, i) = cplx(0.0, 1.0) * cplx(std::cos(g), -std::sin(g));
      }
  const SphereField cf = extract_vector(c);
  for (int k = 1; k < cf.n_lat - 1; ++k)
    for (int j = 0; j < cf.n_lon; ++j) {
      EXPECT_NEAR(cf.u[cf.node(k, j)], 1.0, 1e-13);
      EXPECT_NEAR(cf.v[cf.node(k, j)], 0.0, 1e-13);
    }

  // A scalar-type (gamma-invariant) signal is rejected.
  SpatialSignalSO3 bad = SpatialSignalSO3::zero(grid);
  for (cplx& s : bad.samples) s = 1.0;
  EXPECT_THROW(extract_vector(bad), ShapeError);
}

TEST(LeftTranslate, IdentityAndGridAlignedShift) {
  // Needs a genuine function on the group (pole fibers depend on alpha+gamma
  // only), so sample a small combination of basis entries.
  const EulerGrid grid = EulerGrid::for_band_limit(3);
  SpatialSignalSO3 x = SpatialSignalSO3::zero(grid);
  for (int j = 0; j < grid.n_alpha; ++j)
    for (int k = 0; k < grid.n_beta; ++k) {
      const DegreeMatrixC d2 = wigner_D(2, grid.alpha(j), grid.beta(k), 0.0);
      const DegreeMatrixC d1 = wigner_D(1, grid.alpha(j), grid.beta(k), 0.0);
      for (int i = 0; i < grid.n_gamma; ++i) {
        const double g = grid.gamma(i);
        x.at(j, k, i) = d2.at(1, -1) * cplx(std::cos(g), std::sin(g)) +
                        cplx(0.3, 0.1) * d1.at(0, 0) +
                        cplx(0.2, -0.4) * d2.at(-2, 2) * cplx(std::cos(2 * g), -std::sin(2 * g));
      }
    }

  const SpatialSignalSO3 same = left_translate_spatial(x, RotationMatrix::identity());
  for (std::int64_t i = 0; i < grid.size(); ++i)
    EXPECT_LT(std::abs(same.samples[i] - x.samples[i]), 1e-9);

  // Z-rotation by a whole alpha step permutes the alpha axis.
  const int shift = 2;
  const SpatialSignalSO3 shifted =
      left_translate_spatial(x, RotationMatrix::rot_z(grid.alpha(shift)));
  for (int j = 0; j < grid.n_alpha; ++j)
    for (int k = 0; k < grid.n_beta; ++k)
      for (int i = 0; i < grid.n_gamma; ++i)
        EXPECT_LT(std::abs(shifted.at(j, k, i) -
                           x.at((j - shift + grid.n_alpha) % grid.n_alpha, k, i)),
                  1e-9);
}

TEST(Metrics, DistanceExamples) {
  const int n_lat = 11, n_lon = 10;
  Rng rng(3);
  SphereField x = SphereField::vector_field(n_lat, n_lon);
  for (int k = 1; k < n_lat - 1; ++k)
    for (int j = 0; j < n_lon; ++j) {
      x.u[x.node(k, j)] = rng.normal();
      x.v[x.node(k, j)] = rng.normal();
    }
  EXPECT_EQ(distance(x, x), 0.0);

  // Adding a unit east vector everywhere gives the mean of sin(beta).
  SphereField y = x;
  double mean_sin = 0.0;
  for (int k = 0; k < n_lat; ++k)
    for (int j = 0; j < n_lon; ++j) {
      y.u[y.node(k, j)] += 1.0;
      mean_sin += std::sin(x.colat(k));
    }
  mean_sin /= n_lat * n_lon;
  EXPECT_NEAR(distance(x, y), mean_sin, 1e-13);

  SphereField z = SphereField::vector_field(n_lat, n_lon);
  for (int k = 1; k < n_lat - 1; ++k)
    for (int j = 0; j < n_lon; ++j) {
      z.u[z.node(k, j)] = rng.normal();
      z.v[z.node(k, j)] = rng.normal();
    }
  EXPECT_DOUBLE_EQ(distance(x, z), distance(z, x));

  SphereField wrong = SphereField::vector_field(n_lat + 1, n_lon);
  EXPECT_THROW(distance(x, wrong), ShapeError);
}

TEST(Metrics, LossExamples) {
  const int n_lat = 9, n_lon = 8;
  SphereField x = SphereField::vector_field(n_lat, n_lon);
  EXPECT_EQ(loss_weighted_mse(x, x), 0.0);

  // A single-node difference of magnitude d contributes sin^2(beta) d^2.
  SphereField y = x;
  const int k = 3, j = 5;
  const double d = 1.7;
  y.v[y.node(k, j)] = d;
  const double s = std::sin(y.colat(k));
  EXPECT_NEAR(loss_weighted_mse(x, y), s * s * d * d, 1e-13);
}

TEST(Metrics, InvariantUnderLongitudeRelabeling) {
  const int n_lat = 11, n_lon = 12, shift = 5;
  Rng rng(77);
  SphereField x = SphereField::vector_field(n_lat, n_lon);
  SphereField y = SphereField::vector_field(n_lat, n_lon);
  for (int k = 1; k < n_lat - 1; ++k)
    for (int j = 0; j < n_lon; ++j) {
      x.u[x.node(k, j)] = rng.normal();
      x.v[x.node(k, j)] = rng.normal();
      y.u[y.node(k, j)] = rng.normal();
      y.v[y.node(k, j)] = rng.normal();
    }
  SphereField xs = x, ys = y;
  for (int k = 0; k < n_lat; ++k)
    for (int j = 0; j < n_lon; ++j) {
      xs.u[xs.node(k, (j + shift) % n_lon)] = x.u[x.node(k, j)];
      xs.v[xs.node(k, (j + shift) % n_lon)] = x.v[x.node(k, j)];
      ys.u[ys.node(k, (j + shift) % n_lon)] = y.u[y.node(k, j)];
      ys.v[ys.node(k, (j + shift) % n_lon)] = y.v[y.node(k, j)];
    }
  EXPECT_DOUBLE_EQ(distance(x, y), distance(xs, ys));
  EXPECT_DOUBLE_EQ(loss_weighted_mse(x, y), loss_weighted_mse(xs, ys));
}
