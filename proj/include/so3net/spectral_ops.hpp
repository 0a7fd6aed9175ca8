#pragma once

#include "so3net/signals.hpp"
#include "so3net/wigner.hpp"

namespace so3net {

/// Full-form filter psi^l_{n,s}, same ragged layout as SpectralSignal.
/// Used by the general convolution/covariance operators and their oracles.
struct Filter {
  int band_limit = 0;
  std::vector<cplx> coeffs;

  static Filter zero(int band_limit) {
    return {band_limit, std::vector<cplx>(coeff_count(band_limit))};
  }
  cplx& at(int l, int n, int s) { return coeffs[coeff_index(l, n, s)]; }
  cplx at(int l, int n, int s) const { return coeffs[coeff_index(l, n, s)]; }
};

/// Restricted filter for inputs confined to column p: one row psi^l_n per
/// degree l >= |p|. Entry count is (L+1)^2 - p^2, i.e. L(L+2)+1 for p = 0 and
/// L(L+2) for |p| = 1.
struct RestrictedFilter {
  int band_limit = 0;
  int order = 0;
  std::vector<cplx> coeffs;

  static RestrictedFilter zero(int band_limit, int order);
  static std::int64_t entry_count(int band_limit, int order) {
    const std::int64_t l1 = band_limit + 1, p = std::abs(order);
    return l1 * l1 - p * p;
  }
  std::int64_t offset(int l) const {
    const std::int64_t p = std::abs(order);
    return static_cast<std::int64_t>(l) * l - p * p;
  }
  cplx& at(int l, int n) { return coeffs[offset(l) + n + l]; }
  cplx at(int l, int n) const { return coeffs[offset(l) + n + l]; }
};

/// Restricted filter placed at column s = p of a full filter, zero elsewhere.
Filter embed_restricted(const RestrictedFilter& psi);

/// Left convolution (x *_l psi)^l_{m,n} = 1/(2l+1) sum_s x^l_{m,s} conj(psi^l_{n,s}).
SpectralSignal conv_left(const SpectralSignal& x, const Filter& psi);

/// Single-column form for x in column p:
///   y^l_{m,n} = 1/(2l+1) x^l_{m,p} conj(psi^l_n).
/// The output generally spreads over all columns until smoothed.
SpectralSignal conv_left_restricted(const SpectralSignal& x, const RestrictedFilter& psi);

/// Right covariance (x *_r psi)^l_{m,n} = 1/(2l+1) sum_s x^l_{s,n} conj(psi^l_{s,m});
/// preserves column membership.
SpectralSignal cov_right(const SpectralSignal& x, const Filter& psi);

/// Orthogonal projection onto column q: keeps exactly the n = q column.
SpectralSignal smooth(const SpectralSignal& x, int q);

/// Pooling: truncate degrees above l_out (l_out <= L).
SpectralSignal pool(const SpectralSignal& x, int l_out);

/// Unpooling: zero-pad degrees up to l_out (l_out >= L).
SpectralSignal unpool(const SpectralSignal& x, int l_out);

/// Exact left translation in the spectral domain:
///   (l_B x)^l_{m,n} = sum_s D^l_{s,m}(B^{-1}) x^l_{s,n}.
/// Preserves the column structure exactly.
SpectralSignal rotate_spectral(const SpectralSignal& x, const RotationMatrix& b);

}  // namespace so3net
