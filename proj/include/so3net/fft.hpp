#pragma once

#include <memory>
#include <vector>

#include "so3net/common.hpp"

namespace so3net {

/// Complex DFT of a fixed 5-smooth size n:
///   out[k] = sum_j in[j] * exp(sign * 2*pi*i * j * k / n),  sign in {-1, +1}.
/// Unnormalized in both directions; callers apply 1/n where needed.
/// Plans are immutable after construction and safe to share across threads.
class Fft1d {
 public:
  explicit Fft1d(int n);

  int size() const { return n_; }

  /// out must not alias in; both hold n values. Allocation-free.
  void run(const cplx* in, cplx* out, int sign) const;

 private:
  void recurse(const cplx* in, std::int64_t stride, cplx* out, int n, int sign) const;

  int n_;
  std::vector<cplx> twiddle_;  // e^{-2*pi*i*k/n}, k = 0..n-1
};

/// True if n has no prime factors other than 2, 3, 5.
bool is_5smooth(int n);

/// Smallest even 5-smooth integer >= n.
int next_even_5smooth(int n);

/// In-place transform of a contiguous [na][nb][nc] array (c fastest) along all
/// three axes. OpenMP-parallel over independent lines; bit-deterministic for
/// any thread count.
void fft3_inplace(cplx* data, const Fft1d& fa, const Fft1d& fb, const Fft1d& fc, int sign);

}  // namespace so3net
