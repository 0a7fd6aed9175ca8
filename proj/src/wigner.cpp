#include "so3net/wigner.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <memory>
#include <mutex>

namespace so3net {

GeneratorMatrix generator(int l) {
  SO3NET_CHECK(l >= 0, ShapeError, "degree must be non-negative");
  GeneratorMatrix g(l);
  for (int m = -l; m < l; ++m) {
    const double q = std::sqrt(static_cast<double>(l - m) * (l + m + 1));
    g.at(m, m + 1) = q;
    g.at(m + 1, m) = -q;
  }
  return g;
}

namespace {

WignerDelta compute_delta(int l) {
  const int dim = 2 * l + 1;

  // i*(G/2) conjugated by diag(i^k) is the real symmetric tridiagonal below,
  // with exact integer spectrum -l..l.
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim, dim);
  for (int m = -l; m < l; ++m) {
    const double q = std::sqrt(static_cast<double>(l - m) * (l + m + 1));
    h(m + l, m + l + 1) = -0.5 * q;
    h(m + l + 1, m + l) = -0.5 * q;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(h);
  SO3NET_CHECK(solver.info() == Eigen::Success, NumericError, "eigensolve failed");
  const Eigen::MatrixXd& vec = solver.eigenvectors();  // columns ordered by ascending eigenvalue
  for (int i = 0; i < dim; ++i)
    SO3NET_CHECK(std::abs(solver.eigenvalues()(i) - (i - l)) < 1e-9, NumericError,
                 "generator spectrum is not -l..l");

  // Delta_{a,b} = sum_m V_{a,m} V_{b,m} i^{a-b-m}; only even a-b-m contributes
  // since the result is real.
  WignerDelta delta(l);
  for (int a = -l; a <= l; ++a) {
    for (int b = -l; b <= l; ++b) {
      double acc = 0.0;
      for (int m = -l; m <= l; ++m) {
        const int k = a - b - m;
        if (((k % 2) + 2) % 2 != 0) continue;
        acc += vec(a + l, m + l) * vec(b + l, m + l) * parity(k / 2);
      }
      delta.at(a, b) = acc;
    }
  }

  // Enforce Delta_{-s,-m} = (-1)^{s-m} Delta_{s,m} exactly on stored values.
  for (int s = -l; s <= l; ++s) {
    for (int m = -l; m <= l; ++m) {
      if (s < 0 || (s == 0 && m < 0)) continue;
      const double sgn = parity(s - m);
      const double avg = 0.5 * (delta.at(s, m) + sgn * delta.at(-s, -m));
      delta.at(s, m) = avg;
      delta.at(-s, -m) = sgn * avg;
    }
  }

  double max_dev = 0.0;
  for (int a = -l; a <= l; ++a) {
    for (int b = -l; b <= l; ++b) {
      double dot = 0.0;
      for (int s = -l; s <= l; ++s) dot += delta.at(s, a) * delta.at(s, b);
      max_dev = std::max(max_dev, std::abs(dot - (a == b ? 1.0 : 0.0)));
    }
  }
  SO3NET_CHECK(max_dev <= 1e-12, NumericError,
               "Delta orthogonality residue " + std::to_string(max_dev) + " at l=" + std::to_string(l));
  return delta;
}

}  // namespace

const WignerDelta& wigner_delta(int l) {
  SO3NET_CHECK(l >= 0, ShapeError, "degree must be non-negative");
  static std::mutex mutex;
  static std::vector<std::unique_ptr<const WignerDelta>> cache;
  std::lock_guard<std::mutex> lock(mutex);
  if (static_cast<int>(cache.size()) <= l) cache.resize(l + 1);
  if (!cache[l]) cache[l] = std::make_unique<const WignerDelta>(compute_delta(l));
  return *cache[l];
}

DegreeMatrix wigner_d(int l, double beta) {
  const WignerDelta& delta = wigner_delta(l);
  const int dim = 2 * l + 1;

  std::vector<cplx> phase(dim);
  for (int s = -l; s <= l; ++s) phase[s + l] = {std::cos(s * beta), std::sin(s * beta)};

  DegreeMatrix d(l);
  for (int m = -l; m <= l; ++m) {
    for (int n = -l; n <= l; ++n) {
      cplx acc = 0.0;
      for (int s = -l; s <= l; ++s) acc += delta.at(s, m) * delta.at(s, n) * phase[s + l];
      // Real part of i^{n-m} * acc; the imaginary residue is roundoff only.
      switch (((n - m) % 4 + 4) % 4) {
        case 0: d.at(m, n) = acc.real(); break;
        case 1: d.at(m, n) = -acc.imag(); break;
        case 2: d.at(m, n) = -acc.real(); break;
        default: d.at(m, n) = acc.imag(); break;
      }
    }
  }
  return d;
}

DegreeMatrixC wigner_D(int l, double alpha, double beta, double gamma) {
  const DegreeMatrix d = wigner_d(l, beta);
  DegreeMatrixC big(l);
  for (int m = -l; m <= l; ++m) {
    const cplx ea = {std::cos(m * alpha), -std::sin(m * alpha)};
    for (int n = -l; n <= l; ++n) {
      const cplx eg = {std::cos(n * gamma), -std::sin(n * gamma)};
      big.at(m, n) = ea * eg * d.at(m, n);
    }
  }
  return big;
}

}  // namespace so3net
