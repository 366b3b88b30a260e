#pragma once

// Data-parallel inner loops used by the spectral and sampling code.
//
// Every kernel has a portable scalar reference in kernels_scalar.cpp and, where
// the target supports it, an intrinsic variant (AVX2+FMA on x86-64, NEON on
// aarch64). The variant is chosen once at first use from the running CPU; the
// environment variable KMSQ_SIMD=scalar forces the reference path.
//
// Variants are allowed to reassociate sums, so results agree with the scalar
// reference to rounding, not bit for bit. Within one process the dispatch is
// fixed, which is what the determinism contracts rely on.

#include <cstddef>
#include <span>
#include <string_view>

namespace kmsq::simd {

enum class Isa { Scalar, Avx2, Neon };

std::string_view to_string(Isa isa);

/// The instruction set the dispatcher selected for this process.
Isa active_isa();

/// Whether the running CPU (and this build) can execute `isa`.
bool isa_available(Isa isa);

struct KernelTable {
  double (*dot)(const double* a, const double* b, std::size_t n);
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // out[m] = sum_k a[k] * cos_table[k*cols + m] + b[k] * sin_table[k*cols + m]
  void (*trig_synthesis)(const double* cos_table, const double* sin_table,
                         const double* a, const double* b, std::size_t rows,
                         std::size_t cols, double* out);
  // sum_i (x[i] - y[i])^2
  double (*squared_distance)(const double* x, const double* y, std::size_t n);
};

/// Kernel table for a specific ISA. Throws std::invalid_argument if the ISA is
/// not compiled into this build.
const KernelTable& kernels_for(Isa isa);

/// Kernel table for the active ISA.
const KernelTable& kernels();

inline double dot(std::span<const double> a, std::span<const double> b) {
  return kernels().dot(a.data(), b.data(), a.size());
}

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  kernels().axpy(alpha, x.data(), y.data(), x.size());
}

inline double squared_distance(std::span<const double> x, std::span<const double> y) {
  return kernels().squared_distance(x.data(), y.data(), x.size());
}

namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void trig_synthesis(const double* cos_table, const double* sin_table, const double* a,
                    const double* b, std::size_t rows, std::size_t cols, double* out);
double squared_distance(const double* x, const double* y, std::size_t n);
}  // namespace scalar

#if defined(KMSQ_HAVE_AVX2)
namespace avx2 {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void trig_synthesis(const double* cos_table, const double* sin_table, const double* a,
                    const double* b, std::size_t rows, std::size_t cols, double* out);
double squared_distance(const double* x, const double* y, std::size_t n);
}  // namespace avx2
#endif

#if defined(KMSQ_HAVE_NEON)
namespace neon {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void trig_synthesis(const double* cos_table, const double* sin_table, const double* a,
                    const double* b, std::size_t rows, std::size_t cols, double* out);
double squared_distance(const double* x, const double* y, std::size_t n);
}  // namespace neon
#endif

}  // namespace kmsq::simd
