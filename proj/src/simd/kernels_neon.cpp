// aarch64 only; NEON is part of the base ISA there so no runtime probe is needed.

#include <arm_neon.h>

#include "kmsq/simd/kernels.hpp"

namespace kmsq::simd::neon {

double dot(const double* a, const double* b, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
  }
  double sum = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) sum += a[i] * b[i];
  return sum;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void trig_synthesis(const double* cos_table, const double* sin_table, const double* a,
                    const double* b, std::size_t rows, std::size_t cols, double* out) {
  std::size_t m = 0;
  for (; m + 2 <= cols; m += 2) {
    float64x2_t acc = vdupq_n_f64(0.0);
    for (std::size_t k = 0; k < rows; ++k) {
      acc = vfmaq_f64(acc, vdupq_n_f64(a[k]), vld1q_f64(cos_table + k * cols + m));
      acc = vfmaq_f64(acc, vdupq_n_f64(b[k]), vld1q_f64(sin_table + k * cols + m));
    }
    vst1q_f64(out + m, acc);
  }
  for (; m < cols; ++m) {
    double acc = 0.0;
    for (std::size_t k = 0; k < rows; ++k) {
      acc += a[k] * cos_table[k * cols + m] + b[k] * sin_table[k * cols + m];
    }
    out[m] = acc;
  }
}

double squared_distance(const double* x, const double* y, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t d = vsubq_f64(vld1q_f64(x + i), vld1q_f64(y + i));
    acc = vfmaq_f64(acc, d, d);
  }
  double sum = vaddvq_f64(acc);
  for (; i < n; ++i) {
    const double d = x[i] - y[i];
    sum += d * d;
  }
  return sum;
}

}  // namespace kmsq::simd::neon
