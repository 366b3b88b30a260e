// Compiled with -mavx2 -mfma. Only reached through the dispatcher after a CPUID
// check, so nothing here may be inlined into generic code.

#include <immintrin.h>

#include "kmsq/simd/kernels.hpp"

namespace kmsq::simd::avx2 {
namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

}  // namespace

double dot(const double* a, const double* b, std::size_t n) {
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
  double sum = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) sum += a[i] * b[i];
  return sum;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void trig_synthesis(const double* cos_table, const double* sin_table, const double* a,
                    const double* b, std::size_t rows, std::size_t cols, double* out) {
  std::size_t m = 0;
  for (; m + 4 <= cols; m += 4) {
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t k = 0; k < rows; ++k) {
      const __m256d ca = _mm256_set1_pd(a[k]);
      const __m256d sb = _mm256_set1_pd(b[k]);
      acc = _mm256_fmadd_pd(ca, _mm256_loadu_pd(cos_table + k * cols + m), acc);
      acc = _mm256_fmadd_pd(sb, _mm256_loadu_pd(sin_table + k * cols + m), acc);
    }
    _mm256_storeu_pd(out + m, acc);
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
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
    acc = _mm256_fmadd_pd(d, d, acc);
  }
  double sum = hsum(acc);
  for (; i < n; ++i) {
    const double d = x[i] - y[i];
    sum += d * d;
  }
  return sum;
}

}  // namespace kmsq::simd::avx2
