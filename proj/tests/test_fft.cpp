#include "so3net/fft.hpp"

#include <gtest/gtest.h>

#include <vector>

#include "so3net/rng.hpp"

using namespace so3net;

namespace {

// O(n^2) reference DFT.
std::vector<cplx> naive_dft(const std::vector<cplx>& x, int sign) {
  const int n = static_cast<int>(x.size());
  std::vector<cplx> out(n);
  for (int k = 0; k < n; ++k) {
    cplx acc = 0.0;
    for (int j = 0; j < n; ++j) {
      const double ph = sign * kTwoPi * j * k / n;
      acc += x[j] * cplx(std::cos(ph), std::sin(ph));
    }
    out[k] = acc;
  }
  return out;
}

double max_abs_diff(const std::vector<cplx>& a, const std::vector<cplx>& b) {
  double worst = 0.0;
  for (size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

}  // namespace

TEST(Fft, Smoothness) {
  EXPECT_TRUE(is_5smooth(1));
  EXPECT_TRUE(is_5smooth(60));
  EXPECT_FALSE(is_5smooth(7));
  EXPECT_FALSE(is_5smooth(34));
  EXPECT_EQ(next_even_5smooth(34), 36);
  EXPECT_EQ(next_even_5smooth(2), 2);
  EXPECT_EQ(next_even_5smooth(49), 50);
}

TEST(Fft, MatchesNaiveDftBothSigns) {
  Rng rng(7);
  for (int n : {1, 2, 3, 4, 5, 6, 8, 9, 10, 12, 15, 16, 18, 20, 24, 27, 30, 36, 40, 54, 72, 100}) {
    std::vector<cplx> x(n);
    for (cplx& c : x) c = rng.normal_complex();
    Fft1d plan(n);
    std::vector<cplx> out(n);
    for (int sign : {-1, +1}) {
      plan.run(x.data(), out.data(), sign);
      EXPECT_LT(max_abs_diff(out, naive_dft(x, sign)), 1e-10 * n) << "n=" << n << " sign=" << sign;
    }
  }
}

TEST(Fft, RoundTrip) {
  Rng rng(3);
  const int n = 90;
  std::vector<cplx> x(n), f(n), back(n);
  for (cplx& c : x) c = rng.normal_complex();
  Fft1d plan(n);
  plan.run(x.data(), f.data(), -1);
  plan.run(f.data(), back.data(), +1);
  for (cplx& c : back) c /= n;
  EXPECT_LT(max_abs_diff(back, x), 1e-12);
}

TEST(Fft, RejectsNonSmoothSizes) { EXPECT_THROW(Fft1d(14), ShapeError); }

TEST(Fft, ThreeDimensionalAgainstNaive) {
  Rng rng(11);
  const int na = 6, nb = 10, nc = 4;
  std::vector<cplx> x(static_cast<size_t>(na) * nb * nc);
  for (cplx& c : x) c = rng.normal_complex();

  std::vector<cplx> got = x;
  Fft1d fa(na), fb(nb), fc(nc);
  fft3_inplace(got.data(), fa, fb, fc, -1);

  for (int ka = 0; ka < na; ++ka)
    for (int kb = 0; kb < nb; ++kb)
      for (int kc = 0; kc < nc; ++kc) {
        cplx acc = 0.0;
        for (int a = 0; a < na; ++a)
          for (int b = 0; b < nb; ++b)
            for (int c = 0; c < nc; ++c) {
              const double ph =
                  -kTwoPi * (static_cast<double>(a) * ka / na + static_cast<double>(b) * kb / nb +
                             static_cast<double>(c) * kc / nc);
              acc += x[(static_cast<size_t>(a) * nb + b) * nc + c] *
                     cplx(std::cos(ph), std::sin(ph));
            }
        const cplx v = got[(static_cast<size_t>(ka) * nb + kb) * nc + kc];
        ASSERT_LT(std::abs(v - acc), 1e-9);
      }
}
