// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.
#include <immintrin.h>

#include <algorithm>
#include <cmath>

#include "kernels_internal.hpp"

namespace volatix::kernels::detail {

namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

// exp via Cody-Waite reduction x = n*ln2 + r, |r| <= ln2/2, then a degree-13
// Taylor polynomial in r and an exponent-field add for 2^n.
inline __m256d exp_pd(__m256d x) {
  const __m256d lo = _mm256_set1_pd(kExpLow);
  const __m256d hi = _mm256_set1_pd(kExpHigh);
  const __m256d under = _mm256_cmp_pd(x, lo, _CMP_LT_OQ);
  x = _mm256_min_pd(_mm256_max_pd(x, lo), hi);

  const __m256d log2e = _mm256_set1_pd(1.4426950408889634074);
  const __m256d ln2_hi = _mm256_set1_pd(6.93147180369123816490e-01);
  const __m256d ln2_lo = _mm256_set1_pd(1.90821492927058770002e-10);
  const __m256d n = _mm256_round_pd(_mm256_mul_pd(x, log2e),
                                    _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(n, ln2_hi, x);
  r = _mm256_fnmadd_pd(n, ln2_lo, r);

  static constexpr double c[] = {
      1.0 / 6227020800.0, 1.0 / 479001600.0, 1.0 / 39916800.0, 1.0 / 3628800.0,
      1.0 / 362880.0,     1.0 / 40320.0,     1.0 / 5040.0,     1.0 / 720.0,
      1.0 / 120.0,        1.0 / 24.0,        1.0 / 6.0,        0.5,
      1.0,                1.0};
  __m256d p = _mm256_set1_pd(c[0]);
  for (int i = 1; i < 14; ++i) p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(c[i]));

  // 2^n by building the biased exponent directly; n is within [-1022, 1023].
  const __m128i ni = _mm256_cvtpd_epi32(n);
  __m256i e = _mm256_cvtepi32_epi64(ni);
  e = _mm256_slli_epi64(_mm256_add_epi64(e, _mm256_set1_epi64x(1023)), 52);
  const __m256d result = _mm256_mul_pd(p, _mm256_castsi256_pd(e));
  return _mm256_andnot_pd(under, result);
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void exp_avx2(double* x, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(x + i, exp_pd(_mm256_loadu_pd(x + i)));
  if (i < n) {
    alignas(32) double tail[4] = {0.0, 0.0, 0.0, 0.0};
    std::copy(x + i, x + n, tail);
    _mm256_store_pd(tail, exp_pd(_mm256_load_pd(tail)));
    std::copy(tail, tail + (n - i), x + i);
  }
}

MeanSsd mean_ssd_avx2(const double* x, std::size_t n) {
  if (n == 0) return {};
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
  double s = hsum(acc);
  for (; i < n; ++i) s += x[i];
  const double mean = s / static_cast<double>(n);

  const __m256d vm = _mm256_set1_pd(mean);
  acc = _mm256_setzero_pd();
  i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(x + i), vm);
    acc = _mm256_fmadd_pd(d, d, acc);
  }
  double ssd = hsum(acc);
  for (; i < n; ++i) {
    const double d = x[i] - mean;
    ssd += d * d;
  }
  return {mean, ssd};
}

inline void softmax3_block(__m256d vn, __m256d vc, __m256d& pb, __m256d& pn, __m256d& pc) {
  const __m256d m = _mm256_max_pd(_mm256_setzero_pd(), _mm256_max_pd(vn, vc));
  const __m256d eb = exp_pd(_mm256_sub_pd(_mm256_setzero_pd(), m));
  const __m256d en = exp_pd(_mm256_sub_pd(vn, m));
  const __m256d ec = exp_pd(_mm256_sub_pd(vc, m));
  const __m256d inv = _mm256_div_pd(_mm256_set1_pd(1.0), _mm256_add_pd(_mm256_add_pd(eb, en), ec));
  pb = _mm256_mul_pd(eb, inv);
  pn = _mm256_mul_pd(en, inv);
  pc = _mm256_mul_pd(ec, inv);
}

void softmax3_avx2(const double* vn, const double* vc, double* pb, double* pn, double* pc,
                   std::size_t n) {
  std::size_t i = 0;
  __m256d b, nn, c;
  for (; i + 4 <= n; i += 4) {
    softmax3_block(_mm256_loadu_pd(vn + i), _mm256_loadu_pd(vc + i), b, nn, c);
    _mm256_storeu_pd(pb + i, b);
    _mm256_storeu_pd(pn + i, nn);
    _mm256_storeu_pd(pc + i, c);
  }
  if (i < n) {
    alignas(32) double tn[4] = {0, 0, 0, 0}, tc[4] = {0, 0, 0, 0};
    alignas(32) double ob[4], on[4], oc[4];
    std::copy(vn + i, vn + n, tn);
    std::copy(vc + i, vc + n, tc);
    softmax3_block(_mm256_load_pd(tn), _mm256_load_pd(tc), b, nn, c);
    _mm256_store_pd(ob, b);
    _mm256_store_pd(on, nn);
    _mm256_store_pd(oc, c);
    for (std::size_t k = 0; i + k < n; ++k) {
      pb[i + k] = ob[k];
      pn[i + k] = on[k];
      pc[i + k] = oc[k];
    }
  }
}

}  // namespace

const KernelTable avx2_table{dot_avx2, axpy_avx2, exp_avx2, mean_ssd_avx2, softmax3_avx2};

}  // namespace volatix::kernels::detail
