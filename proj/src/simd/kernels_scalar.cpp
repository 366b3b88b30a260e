#include "kmsq/simd/kernels.hpp"

namespace kmsq::simd::scalar {

double dot(const double* a, const double* b, std::size_t n) {
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += a[i] * b[i];
  return sum;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void trig_synthesis(const double* cos_table, const double* sin_table, const double* a,
                    const double* b, std::size_t rows, std::size_t cols, double* out) {
  for (std::size_t m = 0; m < cols; ++m) out[m] = 0.0;
  for (std::size_t k = 0; k < rows; ++k) {
    const double* c = cos_table + k * cols;
    const double* s = sin_table + k * cols;
    for (std::size_t m = 0; m < cols; ++m) out[m] += a[k] * c[m] + b[k] * s[m];
  }
}

double squared_distance(const double* x, const double* y, std::size_t n) {
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = x[i] - y[i];
    sum += d * d;
  }
  return sum;
}

}  // namespace kmsq::simd::scalar
