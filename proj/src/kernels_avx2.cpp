// AVX2 variants of the arithmetic kernels. This translation unit is the only
// one compiled with -mavx2/-mfma; callers go through the runtime dispatcher.

#include "boardcal/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

namespace boardcal::kernels {

namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d shuf = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, shuf));
}

inline __m256d band_cost4(__m256d v, __m256d band) {
  const __m256d sign_mask = _mm256_set1_pd(-0.0);
  __m256d a = _mm256_andnot_pd(sign_mask, v);
  __m256d excess = _mm256_sub_pd(a, band);
  return _mm256_max_pd(excess, _mm256_setzero_pd());
}

double box_cost_sum_avx2(const TransformCoeffs& tf, const double* px,
                         const double* py, const double* pz, std::size_t n,
                         double half_side, double alpha) {
  const __m256d r0 = _mm256_set1_pd(tf.r[0]), r1 = _mm256_set1_pd(tf.r[1]),
                r2 = _mm256_set1_pd(tf.r[2]), r3 = _mm256_set1_pd(tf.r[3]),
                r4 = _mm256_set1_pd(tf.r[4]), r5 = _mm256_set1_pd(tf.r[5]),
                r6 = _mm256_set1_pd(tf.r[6]), r7 = _mm256_set1_pd(tf.r[7]),
                r8 = _mm256_set1_pd(tf.r[8]);
  const __m256d t0 = _mm256_set1_pd(tf.t[0]), t1 = _mm256_set1_pd(tf.t[1]),
                t2 = _mm256_set1_pd(tf.t[2]);
  const __m256d side = _mm256_set1_pd(half_side);
  const __m256d band_z = _mm256_set1_pd(alpha);

  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d vx = _mm256_loadu_pd(px + i);
    const __m256d vy = _mm256_loadu_pd(py + i);
    const __m256d vz = _mm256_loadu_pd(pz + i);
    const __m256d x = _mm256_fmadd_pd(r0, vx, _mm256_fmadd_pd(r1, vy, _mm256_fmadd_pd(r2, vz, t0)));
    const __m256d y = _mm256_fmadd_pd(r3, vx, _mm256_fmadd_pd(r4, vy, _mm256_fmadd_pd(r5, vz, t1)));
    const __m256d z = _mm256_fmadd_pd(r6, vx, _mm256_fmadd_pd(r7, vy, _mm256_fmadd_pd(r8, vz, t2)));
    acc = _mm256_add_pd(acc, band_cost4(x, side));
    acc = _mm256_add_pd(acc, band_cost4(y, side));
    acc = _mm256_add_pd(acc, band_cost4(z, band_z));
  }
  double total = hsum(acc);

  const Backend& ref = scalar_backend();
  if (i < n) {
    total += ref.box_cost_sum(tf, px + i, py + i, pz + i, n - i, half_side, alpha);
  }
  return total;
}

CenteredSums centered_sums_avx2(const double* x, const double* y,
                                std::size_t n, double mean_x, double mean_y) {
  const __m256d mx = _mm256_set1_pd(mean_x);
  const __m256d my = _mm256_set1_pd(mean_y);
  __m256d sxx = _mm256_setzero_pd();
  __m256d syy = _mm256_setzero_pd();
  __m256d sxy = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d dx = _mm256_sub_pd(_mm256_loadu_pd(x + i), mx);
    const __m256d dy = _mm256_sub_pd(_mm256_loadu_pd(y + i), my);
    sxx = _mm256_fmadd_pd(dx, dx, sxx);
    syy = _mm256_fmadd_pd(dy, dy, syy);
    sxy = _mm256_fmadd_pd(dx, dy, sxy);
  }
  CenteredSums s{hsum(sxx), hsum(syy), hsum(sxy)};
  for (; i < n; ++i) {
    const double dx = x[i] - mean_x;
    const double dy = y[i] - mean_y;
    s.sxx += dx * dx;
    s.syy += dy * dy;
    s.sxy += dx * dy;
  }
  return s;
}

}  // namespace

const Backend& avx2_backend() {
  static const Backend backend{"avx2", &box_cost_sum_avx2, &centered_sums_avx2};
  return backend;
}

}  // namespace boardcal::kernels

#endif  // x86-64
