#include "so3net/so3fft.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <tuple>

namespace so3net {

std::vector<cplx> beta_weights(int max_k) {
  SO3NET_CHECK(max_k >= 0, ShapeError, "max_k must be non-negative");
  std::vector<cplx> w(2 * max_k + 1);
  for (int k = -max_k; k <= max_k; ++k) {
    cplx val;
    if (k == 0) {
      val = {1.0 / kPi, 0.0};
    } else if (k == 1) {
      val = {0.0, 0.25};
    } else if (k == -1) {
      val = {0.0, -0.25};
    } else if (k % 2 == 0) {
      val = {-1.0 / (kPi * (static_cast<double>(k) * k - 1.0)), 0.0};
    } else {
      val = {0.0, 0.0};
    }
    w[k + max_k] = val;
  }
  return w;
}

namespace {

// Quadrature weights on beta_k in [0, pi] such that sum_k W_k g(beta_k)
// equals integral_0^pi g sin(beta) d(beta) exactly for trigonometric g of
// degree <= cap with the torus-extension symmetry. Built from the torus
// weights W_k = (2pi/N) sum_{|s|<=cap} w_s e^{-i s beta_k}, folding the
// mirrored node N-k onto interior node k.
std::vector<double> half_grid_quadrature(const EulerGrid& grid, int cap) {
  const int nb_torus = grid.n_beta_torus();
  const std::vector<cplx> w = beta_weights(cap);
  std::vector<double> torus_w(nb_torus);
  for (int k = 0; k < nb_torus; ++k) {
    const double beta = kTwoPi * k / nb_torus;
    double acc = w[cap].real();
    for (int s = 1; s <= cap; ++s)
      acc += 2.0 * (w[s + cap] * cplx(std::cos(s * beta), -std::sin(s * beta))).real();
    torus_w[k] = acc * kTwoPi / nb_torus;
  }
  std::vector<double> half(grid.n_beta);
  half[0] = torus_w[0];
  half[grid.n_beta - 1] = torus_w[grid.n_beta - 1];
  for (int k = 1; k < grid.n_beta - 1; ++k) half[k] = torus_w[k] + torus_w[nb_torus - k];
  return half;
}

}  // namespace

FftPlan::FftPlan(int band_limit, const EulerGrid& grid)
    : band_limit_(band_limit),
      grid_(grid),
      fft_alpha_(grid.n_alpha),
      fft_beta_(grid.n_beta_torus()),
      fft_gamma_(grid.n_gamma) {
  SO3NET_CHECK(band_limit >= 0, ShapeError, "band limit must be non-negative");
  SO3NET_CHECK(grid.supports(band_limit), ShapeError, "grid too coarse for band limit");
  SO3NET_CHECK(grid.n_alpha % 2 == 0 && grid.n_gamma % 2 == 0, ShapeError,
               "torus extension needs even alpha/gamma counts");

  weight_kmax_ = std::max(2 * band_limit + 1, grid.n_beta_torus() / 2 + band_limit);
  weights_ = beta_weights(weight_kmax_);
  half_weights_ = half_grid_quadrature(grid, 2 * band_limit + 1);

  deltas_.resize(band_limit + 1);
  for (int l = 0; l <= band_limit; ++l) deltas_[l] = &wigner_delta(l);
}

std::shared_ptr<const FftPlan> FftPlan::create(int band_limit, double oversample) {
  return create(band_limit, EulerGrid::for_band_limit(band_limit, oversample));
}

std::shared_ptr<const FftPlan> FftPlan::create(int band_limit, const EulerGrid& grid) {
  using Key = std::tuple<int, int, int, int>;
  static std::mutex mutex;
  static std::map<Key, std::shared_ptr<const FftPlan>> cache;
  const Key key{band_limit, grid.n_alpha, grid.n_beta, grid.n_gamma};
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  auto plan = std::make_shared<const FftPlan>(band_limit, grid);
  cache.emplace(key, plan);
  return plan;
}

// ---------------------------------------------------------------------------
// Torus extension
// ---------------------------------------------------------------------------

std::vector<cplx> extend_to_torus(const SpatialSignalSO3& x) {
  const EulerGrid& g = x.grid;
  const int na = g.n_alpha, nb = g.n_beta_torus(), ng = g.n_gamma;
  SO3NET_CHECK(na % 2 == 0 && ng % 2 == 0, ShapeError,
               "torus extension needs even alpha/gamma counts");
  std::vector<cplx> torus(static_cast<size_t>(na) * nb * ng);
  for (int j = 0; j < na; ++j) {
    const int j2 = (j + na / 2) % na;
    for (int k = 0; k < nb; ++k) {
      cplx* dst = torus.data() + (static_cast<std::int64_t>(j) * nb + k) * ng;
      if (k < g.n_beta) {
        const cplx* src = x.samples.data() + g.index(j, k, 0);
        for (int i = 0; i < ng; ++i) dst[i] = src[i];
      } else {
        const cplx* src = x.samples.data() + g.index(j2, nb - k, 0);
        for (int i = 0; i < ng; ++i) dst[i] = src[(i + ng / 2) % ng];
      }
    }
  }
  return torus;
}

SpatialSignalSO3 restrict_to_half(const std::vector<cplx>& torus, const EulerGrid& grid) {
  const int nb = grid.n_beta_torus(), ng = grid.n_gamma;
  SO3NET_CHECK(torus.size() == static_cast<size_t>(grid.n_alpha) * nb * ng, ShapeError,
               "torus array does not match grid");
  SpatialSignalSO3 x = SpatialSignalSO3::zero(grid);
  for (int j = 0; j < grid.n_alpha; ++j)
    for (int k = 0; k < grid.n_beta; ++k) {
      const cplx* src = torus.data() + (static_cast<std::int64_t>(j) * nb + k) * ng;
      cplx* dst = x.samples.data() + grid.index(j, k, 0);
      for (int i = 0; i < ng; ++i) dst[i] = src[i];
    }
  return x;
}

// ---------------------------------------------------------------------------
// Fast transform kernels
// ---------------------------------------------------------------------------

namespace {

// Analysis: 3-D FFT with the e^{+i} kernel followed by the Delta contraction.
// weighted=true is the forward transform (sin-beta weight convolution and the
// pi(2l+1) factor); weighted=false is the adjoint of ift_fast_torus.
SpectralSignal analysis_kernel(std::vector<cplx> torus, const FftPlan& plan, bool weighted) {
  const EulerGrid& g = plan.grid();
  const int L = plan.band_limit();
  const int na = g.n_alpha, nb = g.n_beta_torus(), ng = g.n_gamma;
  SO3NET_CHECK(torus.size() == static_cast<size_t>(na) * nb * ng, ShapeError,
               "torus array does not match plan grid");

  fft3_inplace(torus.data(), plan.fft_alpha(), plan.fft_beta_torus(), plan.fft_gamma(), +1);
  const double inv_n = 1.0 / (static_cast<double>(na) * nb * ng);

  SpectralSignal out = SpectralSignal::zero(L);
#pragma omp parallel
  {
    std::vector<cplx> line(nb), u(2 * L + 1);
#pragma omp for schedule(static)
    for (int m = -L; m <= L; ++m) {
      const int ja = (m % na + na) % na;
      for (int n = -L; n <= L; ++n) {
        const int ig = (n % ng + ng) % ng;
        const cplx* base = torus.data() + static_cast<std::int64_t>(ja) * nb * ng + ig;
        for (int k = 0; k < nb; ++k) line[k] = base[static_cast<std::int64_t>(k) * ng];

        if (weighted) {
          for (int s = -L; s <= L; ++s) {
            cplx acc = 0.0;
            for (int k = 0; k < nb; ++k) {
              const int sp = (k < nb / 2) ? k : k - nb;
              acc += line[k] * plan.beta_weight(s - sp);
            }
            u[s + L] = acc * inv_n;
          }
        } else {
          for (int s = -L; s <= L; ++s) u[s + L] = line[(s % nb + nb) % nb];
        }

        const int l0 = std::max(std::abs(m), std::abs(n));
        for (int l = l0; l <= L; ++l) {
          const WignerDelta& d = plan.delta(l);
          cplx acc = 0.0;
          for (int s = -l; s <= l; ++s) acc += d.at(s, m) * d.at(s, n) * u[s + L];
          const double scale = weighted ? kPi * (2 * l + 1) : 1.0;
          out.at(l, m, n) = scale * ipow(n - m) * acc;
        }
      }
    }
  }
  return out;
}

// Synthesis: Delta spreading into the torus spectrum followed by the e^{-i}
// FFT. adjoint=false is ift_fast_torus; adjoint=true is the adjoint of the
// forward transform (conjugated weight correlation and 1/N scaling).
std::vector<cplx> synthesis_kernel(const SpectralSignal& xhat, const FftPlan& plan, bool adjoint) {
  const EulerGrid& g = plan.grid();
  const int L = plan.band_limit();
  const int Lx = xhat.band_limit;
  SO3NET_CHECK(Lx <= L, ShapeError, "coefficient band limit exceeds plan band limit");
  SO3NET_CHECK(xhat.coeffs.size() == static_cast<size_t>(coeff_count(Lx)), ShapeError,
               "coefficient array size mismatch");
  const int na = g.n_alpha, nb = g.n_beta_torus(), ng = g.n_gamma;

  std::vector<cplx> spec(static_cast<size_t>(na) * nb * ng, cplx(0.0));
#pragma omp parallel
  {
    std::vector<cplx> t(2 * Lx + 1);
#pragma omp for schedule(static)
    for (int m = -Lx; m <= Lx; ++m) {
      const int ja = (m % na + na) % na;
      for (int n = -Lx; n <= Lx; ++n) {
        const int ig = (n % ng + ng) % ng;
        std::fill(t.begin(), t.end(), cplx(0.0));
        const int l0 = std::max(std::abs(m), std::abs(n));
        for (int l = l0; l <= Lx; ++l) {
          const WignerDelta& d = plan.delta(l);
          const double scale = adjoint ? kPi * (2 * l + 1) : 1.0;
          const cplx v = scale * ipow(m - n) * xhat.at(l, m, n);
          for (int s = -l; s <= l; ++s) t[s + Lx] += v * d.at(s, m) * d.at(s, n);
        }
        cplx* base = spec.data() + static_cast<std::int64_t>(ja) * nb * ng + ig;
        if (!adjoint) {
          for (int s = -Lx; s <= Lx; ++s)
            base[static_cast<std::int64_t>((s % nb + nb) % nb) * ng] += t[s + Lx];
        } else {
          for (int k = 0; k < nb; ++k) {
            const int sp = (k < nb / 2) ? k : k - nb;
            cplx acc = 0.0;
            for (int s = -Lx; s <= Lx; ++s)
              acc += t[s + Lx] * std::conj(plan.beta_weight(s - sp));
            base[static_cast<std::int64_t>(k) * ng] += acc;
          }
        }
      }
    }
  }

  fft3_inplace(spec.data(), plan.fft_alpha(), plan.fft_beta_torus(), plan.fft_gamma(), -1);
  if (adjoint) {
    const double inv_n = 1.0 / (static_cast<double>(na) * nb * ng);
    for (cplx& c : spec) c *= inv_n;
  }
  return spec;
}

}  // namespace

SpectralSignal ft_fast(const SpatialSignalSO3& x, const FftPlan& plan) {
  SO3NET_CHECK(x.grid == plan.grid(), ShapeError, "signal grid does not match plan grid");
  return analysis_kernel(extend_to_torus(x), plan, /*weighted=*/true);
}

SpectralSignal ft_fast_torus(std::vector<cplx> torus, const FftPlan& plan) {
  return analysis_kernel(std::move(torus), plan, /*weighted=*/true);
}

SpatialSignalSO3 ift_fast(const SpectralSignal& xhat, const FftPlan& plan) {
  return restrict_to_half(synthesis_kernel(xhat, plan, /*adjoint=*/false), plan.grid());
}

std::vector<cplx> ift_fast_torus(const SpectralSignal& xhat, const FftPlan& plan) {
  return synthesis_kernel(xhat, plan, /*adjoint=*/false);
}

SpectralSignal ift_fast_torus_adjoint(const std::vector<cplx>& torus_cotangent,
                                      const FftPlan& plan) {
  return analysis_kernel(torus_cotangent, plan, /*weighted=*/false);
}

namespace {

// In-place 2-D FFT of an (n_alpha x n_beta_torus) plane, beta fastest.
void fft2_inplace(cplx* plane, const Fft1d& fa, const Fft1d& fb, int sign) {
  const int na = fa.size(), nb = fb.size();
#pragma omp parallel
  {
    std::vector<cplx> gather(na), buf(std::max(na, nb));
#pragma omp for schedule(static)
    for (int j = 0; j < na; ++j) {
      fb.run(plane + static_cast<std::int64_t>(j) * nb, buf.data(), sign);
      for (int k = 0; k < nb; ++k) plane[static_cast<std::int64_t>(j) * nb + k] = buf[k];
    }
#pragma omp for schedule(static)
    for (int k = 0; k < nb; ++k) {
      for (int j = 0; j < na; ++j) gather[j] = plane[static_cast<std::int64_t>(j) * nb + k];
      fa.run(gather.data(), buf.data(), sign);
      for (int j = 0; j < na; ++j) plane[static_cast<std::int64_t>(j) * nb + k] = buf[j];
    }
  }
}

}  // namespace

SpectralSignal ft_fast_torus_column(const std::vector<cplx>& torus, const FftPlan& plan, int q) {
  const EulerGrid& g = plan.grid();
  const int L = plan.band_limit();
  SO3NET_CHECK(std::abs(q) <= L, ShapeError, "|q| exceeds band limit");
  const int na = g.n_alpha, nb = g.n_beta_torus(), ng = g.n_gamma;
  SO3NET_CHECK(torus.size() == static_cast<size_t>(na) * nb * ng, ShapeError,
               "torus array does not match plan grid");

  // Project the gamma axis onto the e^{-i q gamma} component.
  std::vector<cplx> gphase(ng);
  for (int i = 0; i < ng; ++i) {
    const double ph = q * (kTwoPi * i / ng);
    gphase[i] = cplx(std::cos(ph), std::sin(ph));
  }
  std::vector<cplx> plane(static_cast<size_t>(na) * nb);
#pragma omp parallel for schedule(static)
  for (std::int64_t line = 0; line < static_cast<std::int64_t>(na) * nb; ++line) {
    const cplx* src = torus.data() + line * ng;
    cplx acc = 0.0;
    for (int i = 0; i < ng; ++i) acc += src[i] * gphase[i];
    plane[line] = acc;
  }

  fft2_inplace(plane.data(), plan.fft_alpha(), plan.fft_beta_torus(), +1);
  const double inv_n = 1.0 / (static_cast<double>(na) * nb * ng);

  SpectralSignal out = SpectralSignal::zero(L, q);
#pragma omp parallel
  {
    std::vector<cplx> line(nb), u(2 * L + 1);
#pragma omp for schedule(static)
    for (int m = -L; m <= L; ++m) {
      const int ja = (m % na + na) % na;
      const cplx* base = plane.data() + static_cast<std::int64_t>(ja) * nb;
      for (int k = 0; k < nb; ++k) line[k] = base[k];
      for (int s = -L; s <= L; ++s) {
        cplx acc = 0.0;
        for (int k = 0; k < nb; ++k) {
          const int sp = (k < nb / 2) ? k : k - nb;
          acc += line[k] * plan.beta_weight(s - sp);
        }
        u[s + L] = acc * inv_n;
      }
      const int l0 = std::max(std::abs(m), std::abs(q));
      for (int l = l0; l <= L; ++l) {
        const WignerDelta& d = plan.delta(l);
        cplx acc = 0.0;
        for (int s = -l; s <= l; ++s) acc += d.at(s, m) * d.at(s, q) * u[s + L];
        out.at(l, m, q) = kPi * (2 * l + 1) * ipow(q - m) * acc;
      }
    }
  }
  return out;
}

std::vector<cplx> ft_fast_torus_column_adjoint(const SpectralSignal& cot, const FftPlan& plan,
                                               int q) {
  const EulerGrid& g = plan.grid();
  const int L = plan.band_limit();
  SO3NET_CHECK(cot.band_limit == L, ShapeError, "cotangent band limit mismatch");
  const int na = g.n_alpha, nb = g.n_beta_torus(), ng = g.n_gamma;

  std::vector<cplx> plane(static_cast<size_t>(na) * nb, cplx(0.0));
#pragma omp parallel
  {
    std::vector<cplx> t(2 * L + 1);
#pragma omp for schedule(static)
    for (int m = -L; m <= L; ++m) {
      const int ja = (m % na + na) % na;
      std::fill(t.begin(), t.end(), cplx(0.0));
      const int l0 = std::max(std::abs(m), std::abs(q));
      for (int l = l0; l <= L; ++l) {
        const WignerDelta& d = plan.delta(l);
        const cplx v = kPi * (2 * l + 1) * ipow(m - q) * cot.at(l, m, q);
        for (int s = -l; s <= l; ++s) t[s + L] += v * d.at(s, m) * d.at(s, q);
      }
      cplx* base = plane.data() + static_cast<std::int64_t>(ja) * nb;
      for (int k = 0; k < nb; ++k) {
        const int sp = (k < nb / 2) ? k : k - nb;
        cplx acc = 0.0;
        for (int s = -L; s <= L; ++s) acc += t[s + L] * std::conj(plan.beta_weight(s - sp));
        base[k] = acc;
      }
    }
  }

  fft2_inplace(plane.data(), plan.fft_alpha(), plan.fft_beta_torus(), -1);

  const double inv_n = 1.0 / (static_cast<double>(na) * nb * ng);
  std::vector<cplx> gphase(ng);
  for (int i = 0; i < ng; ++i) {
    const double ph = q * (kTwoPi * i / ng);
    gphase[i] = cplx(std::cos(ph), -std::sin(ph));
  }
  std::vector<cplx> torus(static_cast<size_t>(na) * nb * ng);
#pragma omp parallel for schedule(static)
  for (std::int64_t line = 0; line < static_cast<std::int64_t>(na) * nb; ++line) {
    const cplx v = plane[line] * inv_n;
    cplx* dst = torus.data() + line * ng;
    for (int i = 0; i < ng; ++i) dst[i] = v * gphase[i];
  }
  return torus;
}

std::vector<cplx> ft_fast_torus_adjoint(const SpectralSignal& coeff_cotangent,
                                        const FftPlan& plan) {
  return synthesis_kernel(coeff_cotangent, plan, /*adjoint=*/true);
}

SpectralSignal ft_zero_extension(const SpatialSignalSO3& x, const FftPlan& plan) {
  SO3NET_CHECK(x.grid == plan.grid(), ShapeError, "signal grid does not match plan grid");
  const EulerGrid& g = x.grid;
  const int na = g.n_alpha, nb = g.n_beta_torus(), ng = g.n_gamma;
  const int L = plan.band_limit();

  std::vector<cplx> torus(static_cast<size_t>(na) * nb * ng, cplx(0.0));
  for (int j = 0; j < na; ++j)
    for (int k = 0; k < g.n_beta; ++k) {
      const double w = std::sin(g.beta(k));
      const cplx* src = x.samples.data() + g.index(j, k, 0);
      cplx* dst = torus.data() + (static_cast<std::int64_t>(j) * nb + k) * ng;
      for (int i = 0; i < ng; ++i) dst[i] = w * src[i];
    }
  fft3_inplace(torus.data(), plan.fft_alpha(), plan.fft_beta_torus(), plan.fft_gamma(), +1);
  const double inv_n = 1.0 / (static_cast<double>(na) * nb * ng);

  SpectralSignal out = SpectralSignal::zero(L);
  for (int m = -L; m <= L; ++m) {
    const int ja = (m % na + na) % na;
    for (int n = -L; n <= L; ++n) {
      const int ig = (n % ng + ng) % ng;
      const cplx* base = torus.data() + static_cast<std::int64_t>(ja) * nb * ng + ig;
      const int l0 = std::max(std::abs(m), std::abs(n));
      for (int l = l0; l <= L; ++l) {
        const WignerDelta& d = plan.delta(l);
        cplx acc = 0.0;
        for (int s = -l; s <= l; ++s)
          acc += d.at(s, m) * d.at(s, n) * base[static_cast<std::int64_t>((s % nb + nb) % nb) * ng];
        out.at(l, m, n) = kPi * (2 * l + 1) * ipow(n - m) * acc * inv_n;
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Direct transforms
// ---------------------------------------------------------------------------

SpectralSignal ft_direct(const SpatialSignalSO3& x, int band_limit) {
  const EulerGrid& g = x.grid;
  SO3NET_CHECK(g.supports(band_limit), ShapeError, "grid too coarse for band limit");
  const int L = band_limit;
  const int na = g.n_alpha, ng = g.n_gamma, nbh = g.n_beta;
  const int dim = 2 * L + 1;

  // Quadrature weights for this grid (independent of any plan).
  const std::vector<double> half = half_grid_quadrature(g, 2 * L + 1);

  // Per-slab 2-D Fourier sums with the e^{+i} kernel.
  std::vector<cplx> slab(static_cast<size_t>(nbh) * dim * dim);
  std::vector<cplx> tmp(static_cast<size_t>(na) * dim);
  for (int k = 0; k < nbh; ++k) {
    for (int j = 0; j < na; ++j) {
      const cplx* src = x.samples.data() + g.index(j, k, 0);
      for (int n = -L; n <= L; ++n) {
        cplx acc = 0.0;
        for (int i = 0; i < ng; ++i) {
          const double ph = n * g.gamma(i);
          acc += src[i] * cplx(std::cos(ph), std::sin(ph));
        }
        tmp[static_cast<size_t>(j) * dim + (n + L)] = acc;
      }
    }
    for (int m = -L; m <= L; ++m)
      for (int n = -L; n <= L; ++n) {
        cplx acc = 0.0;
        for (int j = 0; j < na; ++j) {
          const double ph = m * g.alpha(j);
          acc += tmp[static_cast<size_t>(j) * dim + (n + L)] * cplx(std::cos(ph), std::sin(ph));
        }
        slab[(static_cast<size_t>(k) * dim + (m + L)) * dim + (n + L)] =
            acc / (static_cast<double>(na) * ng);
      }
  }

  SpectralSignal out = SpectralSignal::zero(L);
  for (int k = 0; k < nbh; ++k) {
    for (int l = 0; l <= L; ++l) {
      const DegreeMatrix d = wigner_d(l, g.beta(k));
      for (int m = -l; m <= l; ++m)
        for (int n = -l; n <= l; ++n)
          out.at(l, m, n) += 0.5 * (2 * l + 1) * half[k] * d.at(m, n) *
                             slab[(static_cast<size_t>(k) * dim + (m + L)) * dim + (n + L)];
    }
  }
  return out;
}

SpatialSignalSO3 ift_direct(const SpectralSignal& xhat, const EulerGrid& grid) {
  const int L = xhat.band_limit;
  const int dim = 2 * L + 1;
  SpatialSignalSO3 x = SpatialSignalSO3::zero(grid);
  std::vector<cplx> a(static_cast<size_t>(dim) * dim);
  std::vector<cplx> row(static_cast<size_t>(dim) * grid.n_gamma);

  for (int k = 0; k < grid.n_beta; ++k) {
    std::fill(a.begin(), a.end(), cplx(0.0));
    for (int l = 0; l <= L; ++l) {
      const DegreeMatrix d = wigner_d(l, grid.beta(k));
      for (int m = -l; m <= l; ++m)
        for (int n = -l; n <= l; ++n)
          a[static_cast<size_t>(m + L) * dim + (n + L)] += xhat.at(l, m, n) * d.at(m, n);
    }
    for (int m = -L; m <= L; ++m)
      for (int i = 0; i < grid.n_gamma; ++i) {
        cplx acc = 0.0;
        for (int n = -L; n <= L; ++n) {
          const double ph = -n * grid.gamma(i);
          acc += a[static_cast<size_t>(m + L) * dim + (n + L)] * cplx(std::cos(ph), std::sin(ph));
        }
        row[static_cast<size_t>(m + L) * grid.n_gamma + i] = acc;
      }
    for (int j = 0; j < grid.n_alpha; ++j)
      for (int i = 0; i < grid.n_gamma; ++i) {
        cplx acc = 0.0;
        for (int m = -L; m <= L; ++m) {
          const double ph = -m * grid.alpha(j);
          acc += row[static_cast<size_t>(m + L) * grid.n_gamma + i] *
                 cplx(std::cos(ph), std::sin(ph));
        }
        x.at(j, k, i) = acc;
      }
  }
  return x;
}

// ---------------------------------------------------------------------------
// Inner products
// ---------------------------------------------------------------------------

namespace {

// Keep only column q of a full analysis, in place.
void keep_column(SpectralSignal& x, int q) {
  for (int l = 0; l <= x.band_limit; ++l)
    for (int m = -l; m <= l; ++m)
      for (int n = -l; n <= l; ++n)
        if (n != q) x.at(l, m, n) = 0.0;
  x.order = q;
}

}  // namespace

SpectralSignal analyze_field(const SphereField& field, const FftPlan& plan) {
  const EulerGrid& g = plan.grid();
  const int L = plan.band_limit();

  if (field.kind == FieldKind::kScalar) {
    SpectralSignal x = ft_fast(associate_scalar(field, g), plan);
    keep_column(x, 0);
    return x;
  }

  SpatialSignalSO3 xs = associate_vector(field, g);

  // The column-1 signal on the pole rows is determined by the coefficients:
  //   x(alpha, 0, gamma)  = e^{-i(alpha+gamma)} c0,   c0  = sum_l x^l_{1,1},
  //   x(alpha, pi, gamma) = e^{+i(alpha-gamma)} cpi,  cpi = sum_l x^l_{-1,1} d^l_{-1,1}(pi).
  // Analysis with pole rows filled from (c0, cpi) is affine in (c0, cpi);
  // solve the 2x2 fixed point, which restores exactness on band-limited data.
  std::vector<double> dpi(L + 1, 0.0);
  for (int l = 1; l <= L; ++l) dpi[l] = wigner_d(l, kPi).at(-1, 1);

  const int k_pi = g.n_beta - 1;
  auto fill_poles = [&](SpatialSignalSO3& s, cplx c0, cplx cpi) {
    for (int j = 0; j < g.n_alpha; ++j) {
      const double a = g.alpha(j);
      for (int i = 0; i < g.n_gamma; ++i) {
        const double ga = g.gamma(i);
        s.at(j, 0, i) = c0 * cplx(std::cos(a + ga), -std::sin(a + ga));
        s.at(j, k_pi, i) = cpi * cplx(std::cos(a - ga), std::sin(a - ga));
      }
    }
  };
  auto pole_response = [&](const SpectralSignal& x) {
    cplx c0 = 0.0, cpi = 0.0;
    for (int l = 1; l <= L; ++l) {
      c0 += x.at(l, 1, 1);
      cpi += x.at(l, -1, 1) * dpi[l];
    }
    return std::pair<cplx, cplx>{c0, cpi};
  };
  auto analyze_with = [&](cplx c0, cplx cpi) {
    fill_poles(xs, c0, cpi);
    SpectralSignal x = ft_fast(xs, plan);
    keep_column(x, 1);
    return x;
  };

  const SpectralSignal base = analyze_with(0.0, 0.0);
  const auto [a0, b0] = pole_response(base);
  const auto [a1, b1] = pole_response(analyze_with(1.0, 0.0));
  const auto [a2, b2] = pole_response(analyze_with(0.0, 1.0));

  // Solve (I - M) c = (a0, b0) with M = [[a1-a0, a2-a0], [b1-b0, b2-b0]].
  const cplx m00 = 1.0 - (a1 - a0), m01 = -(a2 - a0);
  const cplx m10 = -(b1 - b0), m11 = 1.0 - (b2 - b0);
  const cplx det = m00 * m11 - m01 * m10;
  SO3NET_CHECK(std::abs(det) > 1e-8, NumericError, "pole fixed point is singular");
  const cplx c0 = (m11 * a0 - m01 * b0) / det;
  const cplx cpi = (m00 * b0 - m10 * a0) / det;
  return analyze_with(c0, cpi);
}

cplx inner_product(const SpatialSignalSO3& x, const SpatialSignalSO3& y, const FftPlan& plan) {
  SO3NET_CHECK(x.grid == plan.grid() && y.grid == plan.grid(), ShapeError,
               "signal grids do not match plan grid");
  const EulerGrid& g = x.grid;
  const std::vector<double>& half = plan.half_grid_weights();
  cplx acc = 0.0;
  for (int k = 0; k < g.n_beta; ++k) {
    cplx slab = 0.0;
    for (int j = 0; j < g.n_alpha; ++j) {
      const cplx* px = x.samples.data() + g.index(j, k, 0);
      const cplx* py = y.samples.data() + g.index(j, k, 0);
      for (int i = 0; i < g.n_gamma; ++i) slab += px[i] * std::conj(py[i]);
    }
    acc += half[k] * slab;
  }
  return acc * 0.5 / (static_cast<double>(g.n_alpha) * g.n_gamma);
}

double parseval_norm_sq(const SpectralSignal& xhat) {
  double acc = 0.0;
  for (int l = 0; l <= xhat.band_limit; ++l) {
    double block = 0.0;
    const std::int64_t base = degree_offset(l);
    const std::int64_t count = static_cast<std::int64_t>(2 * l + 1) * (2 * l + 1);
    for (std::int64_t i = 0; i < count; ++i) block += std::norm(xhat.coeffs[base + i]);
    acc += block / (2 * l + 1);
  }
  return acc;
}

}  // namespace so3net
