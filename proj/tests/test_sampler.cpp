#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "kmsq/error.hpp"
#include "kmsq/models.hpp"
#include "kmsq/rng.hpp"
#include "kmsq/sampler.hpp"
#include "support/oracles.hpp"

using namespace kmsq;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorCode::InvalidArgument;
}

CovarianceSpec free_crystal(double beta) {
  return CovarianceSpec(build_crystal({.side = 2, .space_dim = 1, .kappa = 0.0}, beta).ctx);
}

TestVector site(Index n, Index j) {
  Vector v = Vector::Zero(n);
  v[j] = 1.0;
  return TestVector::real(v);
}

}  // namespace

// Known-answer vectors published with the Random123 reference implementation.
TEST(Philox, KnownAnswers) {
  EXPECT_EQ(rng::philox4x32_10({0, 0, 0, 0}, {0, 0}),
            (rng::Counter{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u}));
  EXPECT_EQ(rng::philox4x32_10({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu}),
            (rng::Counter{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu}));
  EXPECT_EQ(rng::philox4x32_10({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u}),
            (rng::Counter{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u}));
}

TEST(Philox, KeySplitsSeed) {
  EXPECT_EQ(rng::key_from_seed(0x0123456789abcdefULL), (rng::Key{0x89abcdefu, 0x01234567u}));
}

TEST(Philox, NormalPairMoments) {
  const rng::Key key = rng::key_from_seed(99);
  const int n = 200000;
  double s1 = 0, s2 = 0, cross = 0, s4 = 0;
  for (int i = 0; i < n; ++i) {
    const auto [x, y] = rng::normal_pair({static_cast<std::uint32_t>(i), 0, 0, 0}, key);
    ASSERT_TRUE(std::isfinite(x) && std::isfinite(y));
    s1 += x + y;
    s2 += x * x + y * y;
    s4 += x * x * x * x;
    cross += x * y;
  }
  const double m = 2.0 * n;
  EXPECT_LT(std::abs(s1 / m), 4.0 / std::sqrt(m));
  EXPECT_LT(std::abs(s2 / m - 1.0), 4.0 * std::sqrt(2.0 / m));
  EXPECT_LT(std::abs(cross / n), 4.0 / std::sqrt(n));
  EXPECT_LT(std::abs(s4 / n - 3.0), 4.0 * std::sqrt(96.0 / n));
}

TEST(ModeStd, MatchesCoefficientFormula) {
  const double lambda = 0.7, beta = 1.3;
  const double denom = 1.0 - std::exp(-beta * lambda);
  EXPECT_NEAR(mode_std(lambda, beta, 0), std::sqrt(0.5 * fourier_coeff(0, lambda, beta) / denom), 1e-15);
  EXPECT_NEAR(mode_std(lambda, beta, 5), std::sqrt(fourier_coeff(5, lambda, beta) / denom), 1e-15);
}

TEST(ModeStd, VarianceSumsToTheTruncatedKernel) {
  // Var xi(s) = sd_0^2 + sum_{n >= 1} sd_n^2 should equal the truncated series at d = 0.
  const double lambda = 0.5, beta = 1.0;
  const CovarianceSpec spec(ThermalContext(eigendecompose(Matrix::Constant(1, 1, lambda)), beta));
  const TestVector f = TestVector::real(Vector::Ones(1));
  for (long n_modes : {0L, 8L, 512L}) {
    double var = 0.0;
    for (long n = 0; n <= n_modes; ++n) var += std::pow(mode_std(lambda, beta, n), 2);
    EXPECT_NEAR(var, truncated_cov_pair(spec, f, f, 0.0, n_modes), 1e-14);
  }
}

TEST(Sampler, DrawsDependOnlyOnCounter) {
  const CovarianceSpec spec = free_crystal(1.0);
  const ModeDraw a = draw_modes(spec, 17, 16, 5);
  const ModeDraw b = draw_modes(spec, 17, 16, 5);
  EXPECT_EQ(a.a, b.a);
  EXPECT_EQ(a.b, b.b);
  const ModeDraw c = draw_modes(spec, 18, 16, 5);
  EXPECT_NE(a.a, c.a);
  const ModeDraw d = draw_modes(spec, 17, 16, 6);
  EXPECT_NE(a.a, d.a);
  EXPECT_EQ(a.b[0], 0.0);
}

TEST(Sampler, DeterministicAcrossThreadCounts) {
  const CovarianceSpec spec = free_crystal(1.0);
  const std::vector<TestVector> coords{site(2, 0), site(2, 1)};
  SamplerOptions opt{.grid = 16, .n_samples = 37, .n_modes = 64, .seed = 123, .threads = 1};
  const PathEnsemble one = sample_paths(spec, coords, opt);
  opt.threads = 4;
  const PathEnsemble four = sample_paths(spec, coords, opt);
  EXPECT_EQ(one.values, four.values);
  opt.seed = 124;
  EXPECT_NE(sample_paths(spec, coords, opt).values, one.values);
}

TEST(Sampler, PathsAreSynthesisOfTheDrawnModes) {
  const std::mt19937_64::result_type seed = 9;
  std::mt19937_64 gen(seed);
  const Matrix h = random_generator(3, 0.4, 1.5, gen);
  const CovarianceSpec spec(ThermalContext(eigendecompose(h), 1.2));
  const TestVector f = TestVector::real(oracle::random_rvector(3, gen));
  const long n_modes = 20;
  const std::size_t grid = 8;
  const PathEnsemble ens = sample_paths(spec, {f}, {.grid = grid, .n_samples = 3, .n_modes = n_modes, .seed = 4});
  const Vector w = spec.model().to_spectral(f).real();
  for (std::size_t i = 0; i < 3; ++i) {
    const ModeDraw d = draw_modes(spec, i, n_modes, 4);
    for (std::size_t m = 0; m < grid; ++m) {
      const double s = ens.time(m);
      double want = 0.0;
      for (Index k = 0; k < 3; ++k) {
        for (long n = 0; n <= n_modes; ++n) {
          const double angle = 2.0 * std::numbers::pi * static_cast<double>(n) * s / 1.2;
          const std::size_t idx = static_cast<std::size_t>(k) * (n_modes + 1) + static_cast<std::size_t>(n);
          want += w[k] * (d.a[idx] * std::cos(angle) + d.b[idx] * std::sin(angle));
        }
      }
      EXPECT_NEAR(ens.at(i, m, 0), want, 1e-12);
    }
  }
}

TEST(Sampler, FreeCrystalVarianceAndLags) {
  const double beta = 1.0;
  const CovarianceSpec spec = free_crystal(beta);
  const std::vector<TestVector> coords{site(2, 0), site(2, 1)};
  const long n_modes = 512;
  const PathEnsemble ens = sample_paths(spec, coords, {.grid = 32, .n_samples = 20000, .n_modes = n_modes, .seed = 77});
  const Estimate var = empirical_covariance(ens, 0, 0, 0);
  const double exact = 0.5 / std::tanh(beta / 4.0);
  EXPECT_LT(std::abs(var.value - exact), 4.0 * var.standard_error) << var.value << " vs " << exact;
  for (std::size_t lag = 0; lag < 8; ++lag) {
    const double d = beta * static_cast<double>(lag) / 32.0;
    for (std::size_t j = 0; j < 2; ++j) {
      for (std::size_t k = 0; k < 2; ++k) {
        const Estimate e = empirical_covariance(ens, j, k, lag);
        const double want = truncated_cov_pair(spec, coords[j], coords[k], d, n_modes);
        EXPECT_LT(std::abs(e.value - want), 4.0 * e.standard_error) << j << k << " lag " << lag;
      }
    }
  }
  const Estimate mean = empirical_mean(ens, 1);
  EXPECT_LT(std::abs(mean.value), 4.0 * mean.standard_error);
}

TEST(Sampler, IncrementMomentTracksKernel) {
  std::mt19937_64 gen(3);
  const Matrix h = random_generator(3, 0.5, 3.0, gen);
  const CovarianceSpec spec(ThermalContext(eigendecompose(h), 2.0));
  const TestVector f = TestVector::real(oracle::random_rvector(3, gen));
  const long n_modes = 256;
  const PathEnsemble ens = sample_paths(spec, {f}, {.grid = 16, .n_samples = 5000, .n_modes = n_modes, .seed = 1});
  for (std::size_t lag : {1u, 4u}) {
    const double d = ens.time(lag);
    const double want = 2.0 * (truncated_cov_pair(spec, f, f, 0.0, n_modes) - truncated_cov_pair(spec, f, f, d, n_modes));
    const Estimate e = empirical_increment_moment(ens, 0, lag);
    EXPECT_LT(std::abs(e.value - want), 4.0 * e.standard_error) << lag;
  }
}

TEST(Sampler, Rejections) {
  const BuiltModel mink = build_minkowski({}, 1.0);
  const CovarianceSpec q(mink.ctx);
  EXPECT_EQ(code_of([&] { sample_paths(q, {}, {.n_samples = 1}); }), ErrorCode::QuadratureModelUnsupported);
  const CovarianceSpec ground(ThermalContext(eigendecompose(Matrix::Identity(2, 2)), kGroundState));
  EXPECT_EQ(code_of([&] { sample_paths(ground, {}, {.n_samples = 1}); }), ErrorCode::InvalidArgument);
  const CovarianceSpec spec = free_crystal(1.0);
  EXPECT_EQ(code_of([&] { sample_paths(spec, {TestVector(CVector::Constant(2, Complex(0, 1)))}, {.n_samples = 1}); }),
            ErrorCode::NonRealVector);
  EXPECT_EQ(code_of([&] { sample_paths(spec, {site(3, 0)}, {.n_samples = 1}); }), ErrorCode::DimensionMismatch);
}
