#include <algorithm>
#include <cmath>

#include "kernels_internal.hpp"

namespace volatix::kernels::detail {

namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void exp_scalar(double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const double v = x[i];
    x[i] = v < kExpLow ? 0.0 : std::exp(std::min(v, kExpHigh));
  }
}

MeanSsd mean_ssd_scalar(const double* x, std::size_t n) {
  if (n == 0) return {};
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i];
  const double mean = s / static_cast<double>(n);
  double ssd = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = x[i] - mean;
    ssd += d * d;
  }
  return {mean, ssd};
}

void softmax3_scalar(const double* vn, const double* vc, double* pb, double* pn, double* pc,
                     std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const double m = std::max({0.0, vn[i], vc[i]});
    double eb = -m, en = vn[i] - m, ec = vc[i] - m;
    exp_scalar(&eb, 1);
    exp_scalar(&en, 1);
    exp_scalar(&ec, 1);
    const double inv = 1.0 / (eb + en + ec);
    pb[i] = eb * inv;
    pn[i] = en * inv;
    pc[i] = ec * inv;
  }
}

}  // namespace

const KernelTable scalar_table{dot_scalar, axpy_scalar, exp_scalar, mean_ssd_scalar,
                               softmax3_scalar};

}  // namespace volatix::kernels::detail
