#include "so3net/spectral_ops.hpp"

#include <cmath>

namespace so3net {

RestrictedFilter RestrictedFilter::zero(int band_limit, int order) {
  SO3NET_CHECK(band_limit >= std::abs(order), ShapeError, "band limit below |order|");
  RestrictedFilter f;
  f.band_limit = band_limit;
  f.order = order;
  f.coeffs.assign(entry_count(band_limit, order), cplx(0.0));
  return f;
}

Filter embed_restricted(const RestrictedFilter& psi) {
  Filter full = Filter::zero(psi.band_limit);
  const int p = psi.order;
  for (int l = std::abs(p); l <= psi.band_limit; ++l)
    for (int n = -l; n <= l; ++n) full.at(l, n, p) = psi.at(l, n);
  return full;
}

SpectralSignal conv_left(const SpectralSignal& x, const Filter& psi) {
  SO3NET_CHECK(x.band_limit == psi.band_limit, ShapeError, "band limit mismatch");
  const int L = x.band_limit;
  SpectralSignal y = SpectralSignal::zero(L);
  for (int l = 0; l <= L; ++l) {
    const double c = 1.0 / (2 * l + 1);
    for (int m = -l; m <= l; ++m)
      for (int n = -l; n <= l; ++n) {
        cplx acc = 0.0;
        for (int s = -l; s <= l; ++s) acc += x.at(l, m, s) * std::conj(psi.at(l, n, s));
        y.at(l, m, n) = c * acc;
      }
  }
  return y;
}

SpectralSignal conv_left_restricted(const SpectralSignal& x, const RestrictedFilter& psi) {
  SO3NET_CHECK(x.band_limit == psi.band_limit, ShapeError, "band limit mismatch");
  SO3NET_CHECK(x.order.has_value() && *x.order == psi.order, ShapeError,
               "input column tag does not match filter restriction order");
  const int L = x.band_limit;
  const int p = psi.order;
  SpectralSignal y = SpectralSignal::zero(L);
  for (int l = std::abs(p); l <= L; ++l) {
    const double c = 1.0 / (2 * l + 1);
    for (int m = -l; m <= l; ++m) {
      const cplx xm = x.at(l, m, p);
      for (int n = -l; n <= l; ++n) y.at(l, m, n) = c * xm * std::conj(psi.at(l, n));
    }
  }
  return y;
}

SpectralSignal cov_right(const SpectralSignal& x, const Filter& psi) {
  SO3NET_CHECK(x.band_limit == psi.band_limit, ShapeError, "band limit mismatch");
  const int L = x.band_limit;
  SpectralSignal y = SpectralSignal::zero(L);
  y.order = x.order;
  for (int l = 0; l <= L; ++l) {
    const double c = 1.0 / (2 * l + 1);
    for (int m = -l; m <= l; ++m)
      for (int n = -l; n <= l; ++n) {
        cplx acc = 0.0;
        for (int s = -l; s <= l; ++s) acc += x.at(l, s, n) * std::conj(psi.at(l, s, m));
        y.at(l, m, n) = c * acc;
      }
  }
  return y;
}

SpectralSignal smooth(const SpectralSignal& x, int q) {
  SO3NET_CHECK(std::abs(q) <= x.band_limit, ShapeError, "|q| exceeds band limit");
  SpectralSignal y = SpectralSignal::zero(x.band_limit, q);
  for (int l = std::abs(q); l <= x.band_limit; ++l)
    for (int m = -l; m <= l; ++m) y.at(l, m, q) = x.at(l, m, q);
  return y;
}

SpectralSignal pool(const SpectralSignal& x, int l_out) {
  SO3NET_CHECK(l_out <= x.band_limit && l_out >= 0, ShapeError,
               "pool target band exceeds input band");
  SpectralSignal y = SpectralSignal::zero(l_out, x.order);
  std::copy(x.coeffs.begin(), x.coeffs.begin() + coeff_count(l_out), y.coeffs.begin());
  return y;
}

SpectralSignal unpool(const SpectralSignal& x, int l_out) {
  SO3NET_CHECK(l_out >= x.band_limit, ShapeError, "unpool target band below input band");
  SpectralSignal y = SpectralSignal::zero(l_out, x.order);
  std::copy(x.coeffs.begin(), x.coeffs.end(), y.coeffs.begin());
  return y;
}

SpectralSignal rotate_spectral(const SpectralSignal& x, const RotationMatrix& b) {
  const int L = x.band_limit;
  const EulerAngles e = matrix_to_euler(b.transposed());
  SpectralSignal y = SpectralSignal::zero(L, x.order);
  for (int l = 0; l <= L; ++l) {
    const DegreeMatrixC d = wigner_D(l, e.alpha, e.beta, e.gamma);
    for (int m = -l; m <= l; ++m)
      for (int n = -l; n <= l; ++n) {
        cplx acc = 0.0;
        for (int s = -l; s <= l; ++s) acc += d.at(s, m) * x.at(l, s, n);
        y.at(l, m, n) = acc;
      }
  }
  return y;
}

}  // namespace so3net
