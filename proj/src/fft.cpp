#include "so3net/fft.hpp"

#include <cmath>

namespace so3net {

bool is_5smooth(int n) {
  if (n < 1) return false;
  for (int p : {2, 3, 5})
    while (n % p == 0) n /= p;
  return n == 1;
}

int next_even_5smooth(int n) {
  int k = std::max(2, n + (n % 2));
  while (!is_5smooth(k)) k += 2;
  return k;
}

Fft1d::Fft1d(int n) : n_(n), twiddle_(n) {
  SO3NET_CHECK(is_5smooth(n), ShapeError, "FFT size must be 5-smooth, got " + std::to_string(n));
  for (int k = 0; k < n; ++k) {
    const double phase = -kTwoPi * static_cast<double>(k) / static_cast<double>(n);
    twiddle_[k] = {std::cos(phase), std::sin(phase)};
  }
}

namespace {
inline int smallest_radix(int n) {
  if (n % 2 == 0) return 2;
  if (n % 3 == 0) return 3;
  return 5;
}
}  // namespace

void Fft1d::recurse(const cplx* in, std::int64_t stride, cplx* out, int n, int sign) const {
  if (n == 1) {
    out[0] = in[0];
    return;
  }
  const int r = smallest_radix(n);
  const int m = n / r;
  for (int q = 0; q < r; ++q) recurse(in + q * stride, stride * r, out + q * m, m, sign);

  // Combine the r sub-transforms. For each c the outputs at positions
  // {c + d*m : d} form an r-point DFT of t_q = w_n^{qc} * out[q*m + c].
  const int step_n = n_ / n;  // twiddle table stride for w_n
  const int step_r = n_ / r;
  cplx t[5], y[5];
  int base = 0;  // = c * step_n (mod n_), stepped incrementally
  for (int c = 0; c < m; ++c) {
    int idx = 0;  // = q * c * step_n (mod n_)
    for (int q = 0; q < r; ++q) {
      const cplx w = (sign < 0) ? twiddle_[idx] : std::conj(twiddle_[idx]);
      t[q] = w * out[q * m + c];
      idx += base;
      if (idx >= n_) idx -= n_;
    }
    for (int d = 0; d < r; ++d) {
      cplx acc = t[0];
      int widx = 0;  // = q * d * step_r (mod n_)
      for (int q = 1; q < r; ++q) {
        widx += d * step_r;
        if (widx >= n_) widx -= n_;
        const cplx w = (sign < 0) ? twiddle_[widx] : std::conj(twiddle_[widx]);
        acc += w * t[q];
      }
      y[d] = acc;
    }
    for (int d = 0; d < r; ++d) out[d * m + c] = y[d];
    base += step_n;
    if (base >= n_) base -= n_;
  }
}

void Fft1d::run(const cplx* in, cplx* out, int sign) const { recurse(in, 1, out, n_, sign); }

void fft3_inplace(cplx* data, const Fft1d& fa, const Fft1d& fb, const Fft1d& fc, int sign) {
  const int na = fa.size(), nb = fb.size(), nc = fc.size();

  // Axis c: contiguous lines.
  {
    const std::int64_t lines = static_cast<std::int64_t>(na) * nb;
#pragma omp parallel
    {
      std::vector<cplx> buf(nc);
#pragma omp for schedule(static)
      for (std::int64_t line = 0; line < lines; ++line) {
        cplx* p = data + line * nc;
        fc.run(p, buf.data(), sign);
        for (int i = 0; i < nc; ++i) p[i] = buf[i];
      }
    }
  }

  // Axis b: stride nc within each a-slab.
  {
    const std::int64_t lines = static_cast<std::int64_t>(na) * nc;
#pragma omp parallel
    {
      std::vector<cplx> gather(nb), buf(nb);
#pragma omp for schedule(static)
      for (std::int64_t line = 0; line < lines; ++line) {
        const std::int64_t j = line / nc, i = line % nc;
        cplx* base = data + (j * nb) * static_cast<std::int64_t>(nc) + i;
        for (int k = 0; k < nb; ++k) gather[k] = base[static_cast<std::int64_t>(k) * nc];
        fb.run(gather.data(), buf.data(), sign);
        for (int k = 0; k < nb; ++k) base[static_cast<std::int64_t>(k) * nc] = buf[k];
      }
    }
  }

  // Axis a: stride nb*nc.
  {
    const std::int64_t lines = static_cast<std::int64_t>(nb) * nc;
    const std::int64_t stride = static_cast<std::int64_t>(nb) * nc;
#pragma omp parallel
    {
      std::vector<cplx> gather(na), buf(na);
#pragma omp for schedule(static)
      for (std::int64_t line = 0; line < lines; ++line) {
        cplx* base = data + line;
        for (int j = 0; j < na; ++j) gather[j] = base[j * stride];
        fa.run(gather.data(), buf.data(), sign);
        for (int j = 0; j < na; ++j) base[j * stride] = buf[j];
      }
    }
  }
}

}  // namespace so3net
