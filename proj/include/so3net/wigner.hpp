#pragma once

#include <vector>

#include "so3net/common.hpp"

namespace so3net {

/// Real (2l+1) x (2l+1) matrix with both indices running over -l..l.
struct DegreeMatrix {
  int l = 0;
  std::vector<double> v;

  DegreeMatrix() = default;
  explicit DegreeMatrix(int degree) : l(degree), v((2 * degree + 1) * (2 * degree + 1), 0.0) {}

  int dim() const { return 2 * l + 1; }
  double& at(int a, int b) { return v[static_cast<size_t>(a + l) * dim() + (b + l)]; }
  double at(int a, int b) const { return v[static_cast<size_t>(a + l) * dim() + (b + l)]; }
};

/// Complex counterpart of DegreeMatrix.
struct DegreeMatrixC {
  int l = 0;
  std::vector<cplx> v;

  DegreeMatrixC() = default;
  explicit DegreeMatrixC(int degree) : l(degree), v((2 * degree + 1) * (2 * degree + 1)) {}

  int dim() const { return 2 * l + 1; }
  cplx& at(int a, int b) { return v[static_cast<size_t>(a + l) * dim() + (b + l)]; }
  cplx at(int a, int b) const { return v[static_cast<size_t>(a + l) * dim() + (b + l)]; }
};

using GeneratorMatrix = DegreeMatrix;
using WignerDelta = DegreeMatrix;

/// Skew-symmetric ladder-difference matrix G = Q - Q^T with superdiagonal
/// Q_{m,m+1} = sqrt((l-m)(l+m+1)). The rotation generator around y is G/2.
GeneratorMatrix generator(int l);

/// d^l(pi/2), the real orthogonal matrix diagonalizing every d^l(beta).
/// Computed once per degree by eigendecomposition of the tridiagonal
/// generator and cached; the symmetry Delta_{-s,-m} = (-1)^{s-m} Delta_{s,m}
/// is enforced exactly on the stored values.
const WignerDelta& wigner_delta(int l);

/// d^l(beta) = exp(beta * G/2), evaluated through the Delta expansion
///   d_{m,n}(beta) = i^{n-m} sum_s Delta_{s,m} Delta_{s,n} e^{i s beta}.
DegreeMatrix wigner_d(int l, double beta);

/// D^l entries for Euler angles (alpha, beta, gamma):
///   D_{m,n} = e^{-i m alpha - i n gamma} d_{m,n}(beta).
DegreeMatrixC wigner_D(int l, double alpha, double beta, double gamma);

}  // namespace so3net
