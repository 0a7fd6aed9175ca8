#pragma once

#include <memory>
#include <vector>

#include "so3net/fft.hpp"
#include "so3net/signals.hpp"
#include "so3net/wigner.hpp"

namespace so3net {

/// Closed-form sin-beta quadrature moments
///   w_k = (1/2pi) * integral_0^pi e^{i k beta} sin(beta) d(beta),
/// returned as a table for |k| <= max_k (index k + max_k). Satisfies
/// w_{-k} = conj(w_k); w_0 = 1/pi, w_{+-1} = +-i/4, w_k = -1/(pi(k^2-1)) for
/// even k, and 0 for odd |k| >= 3.
std::vector<cplx> beta_weights(int max_k);

/// Immutable transform plan: grid, Delta stack, beta quadrature weights and
/// FFT sub-plans. Shareable across threads; transforms allocate their own
/// scratch and are re-entrant.
class FftPlan {
 public:
  FftPlan(int band_limit, const EulerGrid& grid);

  /// Plan on the default grid for the band limit (optionally oversampled).
  static std::shared_ptr<const FftPlan> create(int band_limit, double oversample = 1.0);
  static std::shared_ptr<const FftPlan> create(int band_limit, const EulerGrid& grid);

  int band_limit() const { return band_limit_; }
  const EulerGrid& grid() const { return grid_; }

  const WignerDelta& delta(int l) const { return *deltas_[l]; }
  int weight_kmax() const { return weight_kmax_; }
  cplx beta_weight(int k) const { return weights_[k + weight_kmax_]; }

  /// Quadrature weights on the half grid beta_k in [0, pi]:
  ///   sum_k W_k g(beta_k) = integral_0^pi g(beta) sin(beta) d(beta)
  /// exactly for trigonometric g of degree <= 2L+1 with the torus-extension
  /// symmetry.
  const std::vector<double>& half_grid_weights() const { return half_weights_; }

  const Fft1d& fft_alpha() const { return fft_alpha_; }
  const Fft1d& fft_beta_torus() const { return fft_beta_; }
  const Fft1d& fft_gamma() const { return fft_gamma_; }

 private:
  int band_limit_;
  EulerGrid grid_;
  Fft1d fft_alpha_, fft_beta_, fft_gamma_;
  int weight_kmax_;
  std::vector<cplx> weights_;
  std::vector<double> half_weights_;
  std::vector<const WignerDelta*> deltas_;
};

// ---------------------------------------------------------------------------
// Torus extension
// ---------------------------------------------------------------------------

/// Extend samples to the full beta torus (2(n_beta-1) nodes) through the
/// group identity x(alpha, beta, gamma) = x(alpha+pi, 2pi-beta, gamma+pi).
std::vector<cplx> extend_to_torus(const SpatialSignalSO3& x);

/// Restrict torus samples back to beta in [0, pi].
SpatialSignalSO3 restrict_to_half(const std::vector<cplx>& torus, const EulerGrid& grid);

// ---------------------------------------------------------------------------
// Direct transforms (serial reference implementations)
// ---------------------------------------------------------------------------

/// x^l_{m,n} = (2l+1) <x, D^l_{m,n}> by quadrature: uniform trapezoid in
/// alpha/gamma and the closed-form sin-beta weights in beta. Exact on
/// band-limited inputs sampled above the Nyquist minima.
SpectralSignal ft_direct(const SpatialSignalSO3& x, int band_limit);

/// Pointwise synthesis x = sum x^l_{m,n} D^l_{m,n} on the grid nodes.
SpatialSignalSO3 ift_direct(const SpectralSignal& xhat, const EulerGrid& grid);

// ---------------------------------------------------------------------------
// Fast transforms (OpenMP-parallel kernels)
// ---------------------------------------------------------------------------

/// Forward transform: torus extension, 3-D FFT, sin-beta weight convolution,
/// Delta contraction. Matches ft_direct to roundoff on band-limited inputs.
SpectralSignal ft_fast(const SpatialSignalSO3& x, const FftPlan& plan);

/// Inverse transform: Delta spreading into the three-index torus spectrum
/// followed by an inverse 3-D FFT, restricted to beta in [0, pi].
SpatialSignalSO3 ift_fast(const SpectralSignal& xhat, const FftPlan& plan);

/// Torus-domain variants used by layer pipelines (no extend/restrict step).
std::vector<cplx> ift_fast_torus(const SpectralSignal& xhat, const FftPlan& plan);
SpectralSignal ft_fast_torus(std::vector<cplx> torus, const FftPlan& plan);

/// Forward transform restricted to the single coefficient column n = q:
/// the gamma axis reduces to one Fourier bin and the Delta contraction to one
/// column. Equals smooth(ft_fast_torus(...), q); used by layer pipelines.
SpectralSignal ft_fast_torus_column(const std::vector<cplx>& torus, const FftPlan& plan, int q);

/// Exact adjoints of the linear maps above under the real inner product
/// sum Re(a)Re(b) + Im(a)Im(b); used by reverse-mode differentiation.
SpectralSignal ift_fast_torus_adjoint(const std::vector<cplx>& torus_cotangent,
                                      const FftPlan& plan);
std::vector<cplx> ft_fast_torus_adjoint(const SpectralSignal& coeff_cotangent,
                                        const FftPlan& plan);
std::vector<cplx> ft_fast_torus_column_adjoint(const SpectralSignal& coeff_cotangent,
                                               const FftPlan& plan, int q);

/// Naive zero-extension forward transform (no torus identity, no weight
/// convolution). Aliases at O(1/n_beta); kept for comparison experiments.
SpectralSignal ft_zero_extension(const SpatialSignalSO3& x, const FftPlan& plan);

// ---------------------------------------------------------------------------
// Inner products
// ---------------------------------------------------------------------------

/// Field ingestion: associate a sphere field with its equivariant signal and
/// transform, confined to the field's column (0 for scalar, 1 for vector).
/// Vector fields carry no data at the poles (the tangent frame is undefined
/// there), while the beta quadrature has small nonzero endpoint weights; the
/// pole samples are therefore refined by a short fixed-point iteration, which
/// restores exactness on band-limited fields.
SpectralSignal analyze_field(const SphereField& field, const FftPlan& plan);

/// Haar-measure L2 inner product <x, y> by grid quadrature.
cplx inner_product(const SpatialSignalSO3& x, const SpatialSignalSO3& y, const FftPlan& plan);

/// Parseval sum: <x, x> = sum |x^l_{m,n}|^2 / (2l+1).
double parseval_norm_sq(const SpectralSignal& xhat);

}  // namespace so3net
