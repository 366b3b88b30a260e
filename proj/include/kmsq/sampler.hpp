#pragma once

// Spectral synthesis of the periodic thermal process. For eigenmode k and
// Fourier index n >= 0 the sampler draws independent centred Gaussians
// a_{k,n}, b_{k,n} with
//   Var = (1/2) gamma_n(lambda_k) / (1 - e^{-beta lambda_k}),   gamma_0 = c_0, gamma_n = 2 c_n,
// and sets xi_k(s) = sum_{n <= N} a_{k,n} cos(2 pi n s / beta) + b_{k,n} sin(2 pi n s / beta).
// The random block for (sample, k, n) comes from the counter (sample, k, n)
// under the seed, so ensembles do not depend on the thread count.

#include <cstdint>
#include <vector>

#include "kmsq/process.hpp"

namespace kmsq {

struct SamplerOptions {
  std::size_t grid = 64;
  std::size_t n_samples = 0;
  long n_modes = 512;
  std::uint64_t seed = 0;
  unsigned threads = 0;  // 0: hardware concurrency
};

/// Standard deviation of a_{k,n} (and b_{k,n}) for an atom lambda.
double mode_std(double lambda, double beta, long n);

struct ModeDraw {
  // a[k * (N + 1) + n], b likewise; b_{k,0} is drawn but unused.
  std::vector<double> a;
  std::vector<double> b;
};

/// The Fourier coefficients of one sample, scaled to their variances.
ModeDraw draw_modes(const CovarianceSpec& spec, std::size_t sample, long n_modes, std::uint64_t seed);

PathEnsemble sample_paths(const CovarianceSpec& spec, const std::vector<TestVector>& coords,
                          const SamplerOptions& options);

}  // namespace kmsq
