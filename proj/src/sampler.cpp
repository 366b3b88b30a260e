#include "kmsq/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <thread>

#include <fmt/format.h>

#include "kmsq/error.hpp"
#include "kmsq/rng.hpp"
#include "kmsq/simd/kernels.hpp"

namespace kmsq {

double mode_std(double lambda, double beta, long n) {
  const double gamma = (n == 0 ? 1.0 : 2.0) * fourier_coeff(n, lambda, beta);
  return std::sqrt(0.5 * gamma / -std::expm1(-beta * lambda));
}

namespace {

void validate(const CovarianceSpec& spec, long n_modes) {
  if (spec.model().kind() != ModelKind::Matrix) {
    throw Error(ErrorCode::QuadratureModelUnsupported, "path sampling needs a matrix model");
  }
  if (spec.ctx().is_ground_state()) {
    throw Error(ErrorCode::InvalidArgument, "path sampling on the circle needs finite beta");
  }
  if (n_modes < 0) throw Error(ErrorCode::InvalidArgument, "mode count must be >= 0");
}

Matrix std_table(const CovarianceSpec& spec, long n_modes) {
  const Vector& lambda = spec.model().spectrum();
  Matrix out(lambda.size(), n_modes + 1);
  for (Index k = 0; k < lambda.size(); ++k) {
    for (long n = 0; n <= n_modes; ++n) out(k, n) = mode_std(lambda[k], spec.beta(), n);
  }
  return out;
}

void fill_modes(const Matrix& sd, std::size_t sample, std::uint64_t seed, double* a, double* b) {
  const rng::Key key = rng::key_from_seed(seed);
  const auto cols = static_cast<std::size_t>(sd.cols());
  for (Index k = 0; k < sd.rows(); ++k) {
    for (std::size_t n = 0; n < cols; ++n) {
      const rng::Counter ctr{static_cast<std::uint32_t>(sample), static_cast<std::uint32_t>(sample >> 32),
                             static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(n)};
      const auto [z0, z1] = rng::normal_pair(ctr, key);
      const double s = sd(k, static_cast<Index>(n));
      a[static_cast<std::size_t>(k) * cols + n] = s * z0;
      b[static_cast<std::size_t>(k) * cols + n] = n == 0 ? 0.0 : s * z1;
    }
  }
}

}  // namespace

ModeDraw draw_modes(const CovarianceSpec& spec, std::size_t sample, long n_modes, std::uint64_t seed) {
  validate(spec, n_modes);
  const Matrix sd = std_table(spec, n_modes);
  ModeDraw out;
  out.a.resize(static_cast<std::size_t>(sd.size()));
  out.b.resize(static_cast<std::size_t>(sd.size()));
  fill_modes(sd, sample, seed, out.a.data(), out.b.data());
  return out;
}

PathEnsemble sample_paths(const CovarianceSpec& spec, const std::vector<TestVector>& coords,
                          const SamplerOptions& options) {
  validate(spec, options.n_modes);
  if (options.grid == 0) throw Error(ErrorCode::InvalidArgument, "grid must have at least one point");
  const GeneratorModel& model = spec.model();
  for (const auto& f : coords) {
    model.require_member(f);
    if (!f.is_real()) throw Error(ErrorCode::NonRealVector, "sampled coordinates must be real vectors");
  }

  PathEnsemble ens;
  ens.beta = spec.beta();
  ens.grid = options.grid;
  ens.n_samples = options.n_samples;
  ens.n_modes = options.n_modes;
  ens.seed = options.seed;
  ens.coords = coords;
  const std::size_t m_count = options.grid;
  const std::size_t c_count = coords.size();
  ens.values.assign(options.n_samples * m_count * c_count, 0.0);
  if (options.n_samples == 0 || c_count == 0) return ens;

  const Matrix sd = std_table(spec, options.n_modes);
  const auto k_count = static_cast<std::size_t>(sd.rows());
  const auto n_count = static_cast<std::size_t>(sd.cols());

  // weights(k, j) = <e_k, f_j>
  Matrix weights(static_cast<Index>(k_count), static_cast<Index>(c_count));
  for (std::size_t j = 0; j < c_count; ++j) {
    weights.col(static_cast<Index>(j)) = model.to_spectral(coords[j]).real();
  }

  // Modes n and n + M coincide on the grid, so fold them into M bins first.
  std::vector<double> cos_table(m_count * m_count), sin_table(m_count * m_count);
  for (std::size_t j = 0; j < m_count; ++j) {
    for (std::size_t m = 0; m < m_count; ++m) {
      const double angle = 2.0 * std::numbers::pi * static_cast<double>((j * m) % m_count) /
                           static_cast<double>(m_count);
      cos_table[j * m_count + m] = std::cos(angle);
      sin_table[j * m_count + m] = std::sin(angle);
    }
  }

  const simd::KernelTable& kern = simd::kernels();
  auto run = [&](std::size_t begin, std::size_t end) {
    std::vector<double> a(k_count * n_count), b(k_count * n_count);
    std::vector<double> fa(m_count), fb(m_count), path(m_count);
    for (std::size_t i = begin; i < end; ++i) {
      fill_modes(sd, i, options.seed, a.data(), b.data());
      double* out = ens.values.data() + i * m_count * c_count;
      for (std::size_t k = 0; k < k_count; ++k) {
        std::fill(fa.begin(), fa.end(), 0.0);
        std::fill(fb.begin(), fb.end(), 0.0);
        for (std::size_t n = 0; n < n_count; ++n) {
          fa[n % m_count] += a[k * n_count + n];
          fb[n % m_count] += b[k * n_count + n];
        }
        kern.trig_synthesis(cos_table.data(), sin_table.data(), fa.data(), fb.data(), m_count, m_count,
                            path.data());
        for (std::size_t j = 0; j < c_count; ++j) {
          const double w = weights(static_cast<Index>(k), static_cast<Index>(j));
          if (w == 0.0) continue;
          for (std::size_t m = 0; m < m_count; ++m) out[m * c_count + j] += w * path[m];
        }
      }
    }
  };

  unsigned threads = options.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : options.threads;
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, options.n_samples));
  if (threads <= 1) {
    run(0, options.n_samples);
    return ens;
  }
  std::vector<std::thread> pool;
  const std::size_t chunk = (options.n_samples + threads - 1) / threads;
  for (unsigned t = 0; t < threads; ++t) {
    const std::size_t begin = t * chunk;
    const std::size_t end = std::min(options.n_samples, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back(run, begin, end);
  }
  for (auto& th : pool) th.join();
  return ens;
}

}  // namespace kmsq
