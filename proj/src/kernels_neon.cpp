// aarch64 variant; Advanced SIMD is baseline there so no runtime check is needed.
#include <arm_neon.h>

#include <algorithm>

#include "kernels_internal.hpp"

namespace volatix::kernels::detail {

namespace {

inline float64x2_t exp_pd(float64x2_t x) {
  const float64x2_t lo = vdupq_n_f64(kExpLow);
  const float64x2_t hi = vdupq_n_f64(kExpHigh);
  const uint64x2_t under = vcltq_f64(x, lo);
  x = vminq_f64(vmaxq_f64(x, lo), hi);

  const float64x2_t n = vrndnq_f64(vmulq_n_f64(x, 1.4426950408889634074));
  float64x2_t r = vfmsq_f64(x, n, vdupq_n_f64(6.93147180369123816490e-01));
  r = vfmsq_f64(r, n, vdupq_n_f64(1.90821492927058770002e-10));

  static constexpr double c[] = {
      1.0 / 6227020800.0, 1.0 / 479001600.0, 1.0 / 39916800.0, 1.0 / 3628800.0,
      1.0 / 362880.0,     1.0 / 40320.0,     1.0 / 5040.0,     1.0 / 720.0,
      1.0 / 120.0,        1.0 / 24.0,        1.0 / 6.0,        0.5,
      1.0,                1.0};
  float64x2_t p = vdupq_n_f64(c[0]);
  for (int i = 1; i < 14; ++i) p = vfmaq_f64(vdupq_n_f64(c[i]), p, r);

  int64x2_t e = vaddq_s64(vcvtq_s64_f64(n), vdupq_n_s64(1023));
  e = vshlq_n_s64(e, 52);
  const float64x2_t result = vmulq_f64(p, vreinterpretq_f64_s64(e));
  return vreinterpretq_f64_u64(vbicq_u64(vreinterpretq_u64_f64(result), under));
}

double dot_neon(const double* a, const double* b, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0), acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
  }
  double s = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_neon(double alpha, const double* x, double* y, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void exp_neon(double* x, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(x + i, exp_pd(vld1q_f64(x + i)));
  if (i < n) {
    double tail[2] = {x[i], 0.0};
    vst1q_f64(tail, exp_pd(vld1q_f64(tail)));
    x[i] = tail[0];
  }
}

MeanSsd mean_ssd_neon(const double* x, std::size_t n) {
  if (n == 0) return {};
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) acc = vaddq_f64(acc, vld1q_f64(x + i));
  double s = vaddvq_f64(acc);
  for (; i < n; ++i) s += x[i];
  const double mean = s / static_cast<double>(n);
  const float64x2_t vm = vdupq_n_f64(mean);
  acc = vdupq_n_f64(0.0);
  i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t d = vsubq_f64(vld1q_f64(x + i), vm);
    acc = vfmaq_f64(acc, d, d);
  }
  double ssd = vaddvq_f64(acc);
  for (; i < n; ++i) {
    const double d = x[i] - mean;
    ssd += d * d;
  }
  return {mean, ssd};
}

void softmax3_neon(const double* vn, const double* vc, double* pb, double* pn, double* pc,
                   std::size_t n) {
  for (std::size_t i = 0; i < n; i += 2) {
    const bool full = i + 2 <= n;
    double tn[2] = {vn[i], full ? vn[i + 1] : 0.0};
    double tc[2] = {vc[i], full ? vc[i + 1] : 0.0};
    const float64x2_t a = vld1q_f64(tn), c = vld1q_f64(tc);
    const float64x2_t m = vmaxq_f64(vdupq_n_f64(0.0), vmaxq_f64(a, c));
    const float64x2_t eb = exp_pd(vnegq_f64(m));
    const float64x2_t en = exp_pd(vsubq_f64(a, m));
    const float64x2_t ec = exp_pd(vsubq_f64(c, m));
    const float64x2_t inv = vdivq_f64(vdupq_n_f64(1.0), vaddq_f64(vaddq_f64(eb, en), ec));
    double ob[2], on[2], oc[2];
    vst1q_f64(ob, vmulq_f64(eb, inv));
    vst1q_f64(on, vmulq_f64(en, inv));
    vst1q_f64(oc, vmulq_f64(ec, inv));
    const std::size_t k_end = full ? 2 : 1;
    for (std::size_t k = 0; k < k_end; ++k) {
      pb[i + k] = ob[k];
      pn[i + k] = on[k];
      pc[i + k] = oc[k];
    }
  }
}

}  // namespace

const KernelTable neon_table{dot_neon, axpy_neon, exp_neon, mean_ssd_neon, softmax3_neon};

}  // namespace volatix::kernels::detail
