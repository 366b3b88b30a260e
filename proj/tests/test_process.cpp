#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "kmsq/error.hpp"
#include "kmsq/models.hpp"
#include "kmsq/process.hpp"
#include "support/oracles.hpp"

using namespace kmsq;
using std::numbers::pi;

namespace {

GeneratorModel scalar_model(double lambda) { return eigendecompose(Matrix::Constant(1, 1, lambda)); }

TestVector unit() { return TestVector::real(Vector::Ones(1)); }

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorCode::InvalidArgument;
}

Matrix random_h(int dim, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  return random_generator(dim, 0.3, 2.0, gen);
}

/// Covariance of the site vectors xi_a, xi_b from dense exponentials.
Matrix oracle_block(const Matrix& h, double beta, double a, double b) {
  const double d = std::isfinite(beta) ? circle_distance(a, b, beta) : std::abs(b - a);
  if (!std::isfinite(beta)) return 0.5 * oracle::expm(-d * h);
  return 0.5 * oracle::r_beta(h, beta, d);
}

/// Cov(<xi_u,f>, <xi_v,f> | xi_r, xi_s) by a dense Schur complement over all
/// site coordinates at r and s.
double oracle_conditional(const Matrix& h, double beta, const Vector& f, double r, double s, double u, double v) {
  const Index n = h.rows();
  const double times[2] = {r, s};
  Matrix css(2 * n, 2 * n);
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) css.block(i * n, j * n, n, n) = oracle_block(h, beta, times[i], times[j]);
  }
  Matrix cps(2, 2 * n);
  const double probes[2] = {u, v};
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) cps.block(i, j * n, 1, n) = f.transpose() * oracle_block(h, beta, probes[i], times[j]);
  }
  const double cuv = f.dot(oracle_block(h, beta, u, v) * f);
  const Matrix correction = cps * css.ldlt().solve(cps.transpose());
  return cuv - correction(0, 1);
}

}  // namespace

TEST(CircleDistance, Examples) {
  EXPECT_DOUBLE_EQ(circle_distance(0.2, 0.7, 1.0), 0.5);
  EXPECT_NEAR(circle_distance(0.7, 0.2, 1.0), 0.5, 1e-15);
  EXPECT_NEAR(circle_distance(0.9, 0.1, 1.0), 0.2, 1e-15);
  EXPECT_DOUBLE_EQ(circle_distance(0.3, -1.2, kGroundState), 1.5);
  EXPECT_EQ(circle_distance(0.5, 1.5, 1.0), 0.0);
}

TEST(Covariance, ScalarClosedForms) {
  const double lambda = 0.8, beta = 1.5;
  const CovarianceSpec spec(ThermalContext(scalar_model(lambda), beta));
  for (double d : {0.0, 0.3, 0.75, 1.2}) {
    const double want = (std::exp(-d * lambda) + std::exp(-(beta - d) * lambda)) / (1.0 - std::exp(-beta * lambda));
    EXPECT_NEAR(kernel_R(spec.ctx(), lambda, d), want, 1e-15);
    EXPECT_NEAR(cov_pair(spec, unit(), unit(), 0.1, 0.1 + d), 0.5 * want, 1e-15);
  }
  // beta = 1, h = 1/2: variance (1/2) coth(beta / 4)
  const CovarianceSpec half(ThermalContext(scalar_model(0.5), 1.0));
  EXPECT_NEAR(cov_pair(half, unit(), unit(), 0.3, 0.3), 0.5 / std::tanh(0.25), 1e-15);
  const CovarianceSpec line(ThermalContext(scalar_model(lambda), kGroundState));
  EXPECT_NEAR(cov_pair(line, unit(), unit(), -1.0, 2.0), 0.5 * std::exp(-3.0 * lambda), 1e-16);
}

TEST(Covariance, MatrixMatchesOracle) {
  const Matrix h = random_h(4, 41);
  const double beta = 1.3;
  const CovarianceSpec spec(ThermalContext(eigendecompose(h), beta));
  for (double d : {0.0, 0.2, 0.65, 1.0}) {
    const Matrix want = oracle::r_beta(h, beta, d);
    EXPECT_LT((covariance(spec, d) - want).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Covariance, StationaryPeriodicAndReflectionInvariant) {
  const Matrix h = random_h(3, 42);
  const double beta = 2.0;
  const CovarianceSpec spec(ThermalContext(eigendecompose(h), beta));
  std::mt19937_64 gen(1);
  const TestVector f = TestVector::real(oracle::random_rvector(3, gen));
  const TestVector g = TestVector::real(oracle::random_rvector(3, gen));
  const double base = cov_pair(spec, f, g, 0.3, 1.1);
  EXPECT_NEAR(cov_pair(spec, f, g, 0.3 + 0.45, 1.1 + 0.45), base, 1e-14);
  EXPECT_NEAR(cov_pair(spec, f, g, 0.3 + beta, 1.1), base, 1e-14);
  EXPECT_NEAR(cov_pair(spec, f, g, -0.3, -1.1), base, 1e-14);
  EXPECT_NEAR(cov_pair(spec, f, g, 0.3, 1.1), cov_pair(spec, g, f, 1.1, 0.3), 1e-14);
}

TEST(Covariance, ComplexVectorsRejected) {
  const CovarianceSpec spec(ThermalContext(scalar_model(1.0), 1.0));
  const TestVector c(CVector::Constant(1, Complex(0.0, 1.0)));
  EXPECT_EQ(code_of([&] { cov_pair(spec, c, c, 0.0, 0.1); }), ErrorCode::NonRealVector);
}

TEST(Covariance, CondensateShiftsByAConstant) {
  const BoseParams p{.dispersion = BoseDispersion::Standard, .space_dim = 3, .mu = 0.5, .condensate = 0.0};
  BoseParams pc = p;
  pc.condensate = 0.7;
  const BuiltModel a = build_bose_gas(p, 2.0), b = build_bose_gas(pc, 2.0);
  const CovarianceSpec sa(a.ctx), sb(b.ctx);
  const TestVector f = gaussian_profile(a.ctx.model(), 1.0, 0.8);
  const double shift = 0.5 * 0.7 * std::norm(a.ctx.model().zero_mode(f));
  for (double d : {0.0, 0.4, 1.3}) {
    EXPECT_NEAR(cov_pair(sb, f, f, 0.0, d) - cov_pair(sa, f, f, 0.0, d), shift, 1e-14);
  }
  EXPECT_NEAR(cov_pair(sb, f, f, 0.0, 0.4) - cov_pair(sb, f, f, 0.0, 1.3),
              cov_pair(sa, f, f, 0.0, 0.4) - cov_pair(sa, f, f, 0.0, 1.3), 1e-14);
}

TEST(CharFunctional, MatchesDenseGaussianFormula) {
  const Matrix h = random_h(3, 43);
  const double beta = 1.1;
  const CovarianceSpec spec(ThermalContext(eigendecompose(h), beta));
  std::mt19937_64 gen(2);
  std::uniform_real_distribution<double> u(0.0, beta);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> t{u(gen), u(gen), u(gen), u(gen)};
    std::sort(t.begin(), t.end());
    EuclideanWord w;
    std::vector<Vector> fs;
    for (double s : t) {
      fs.push_back(oracle::random_rvector(3, gen));
      w.push_back({TestVector::real(fs.back()), s});
    }
    double quad = 0.0;
    for (std::size_t j = 0; j < w.size(); ++j) {
      for (std::size_t k = 0; k < w.size(); ++k) quad += fs[j].dot(oracle_block(h, beta, t[j], t[k]) * fs[k]);
    }
    EXPECT_NEAR(char_functional(spec, w), std::exp(-0.5 * quad), 1e-13);
    EXPECT_NEAR(char_functional(spec, w), multi_green_euclid(spec.ctx(), w).real(), 1e-13);
  }
}

TEST(CharFunctional, WordCovarianceIsPositive) {
  const Matrix h = random_h(4, 44);
  const CovarianceSpec spec(ThermalContext(eigendecompose(h), 0.9));
  std::mt19937_64 gen(3);
  EuclideanWord w;
  for (double s : {0.0, 0.1, 0.5, 0.85}) w.push_back({TestVector::real(oracle::random_rvector(4, gen)), s});
  const Matrix c = word_covariance(spec, w);
  EXPECT_LT((c - c.transpose()).cwiseAbs().maxCoeff(), 1e-15);
  Eigen::SelfAdjointEigenSolver<Matrix> es(c);
  EXPECT_GT(es.eigenvalues().minCoeff(), 0.0);
}

TEST(ImageSum, ScalarAgainstDirectSummation) {
  const double lambda = 0.3, beta = 1.0;
  const CovarianceSpec spec(ThermalContext(scalar_model(lambda), beta));
  for (double d : {0.0, 0.25, 0.5, 0.9}) {
    long double direct = 0.0L;
    for (int n = -20; n <= 20; ++n) direct += std::exp(-std::abs(d + n * beta) * lambda);
    const double exact = kernel_R(spec.ctx(), lambda, d);
    const ImageSumResult r = image_sum_check(spec, d, 20);
    const double tail = 2.0 * std::cosh(d * lambda) * std::exp(-21.0 * beta * lambda) / (1.0 - std::exp(-beta * lambda));
    EXPECT_NEAR(static_cast<double>(exact - direct), tail, 1e-13);
    EXPECT_NEAR(r.exact_tail, tail, 1e-15);
    EXPECT_LE(r.residual, r.exact_tail + 1e-12);
    EXPECT_NEAR(r.stated_bound, image_sum_stated_bound(lambda, beta, 20), 1e-16);
  }
}

TEST(ImageSum, StatedBoundIsTheEndpointValueOfTheExactTail) {
  const double lambda = 0.3, beta = 1.0;
  const CovarianceSpec spec(ThermalContext(scalar_model(lambda), beta));
  const ImageSumResult at0 = image_sum_check(spec, 0.0, 20);
  EXPECT_NEAR(at0.exact_tail, at0.stated_bound, 1e-16);
  const ImageSumResult mid = image_sum_check(spec, 0.5, 20);
  EXPECT_GT(mid.exact_tail, mid.stated_bound);
}

TEST(Markov, PerAtomConditioningMatchesDenseSchur) {
  const Matrix h = random_h(3, 45);
  const double beta = 1.6;
  const CovarianceSpec spec(ThermalContext(eigendecompose(h), beta));
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> u(0.0, beta);
  for (int trial = 0; trial < 10; ++trial) {
    const Vector f = oracle::random_rvector(3, gen);
    const double r = u(gen), s = u(gen), a = u(gen), b = u(gen);
    if (std::abs(r - s) < 0.05) continue;
    const double want = oracle_conditional(h, beta, f, r, s, a, b);
    EXPECT_NEAR(conditional_covariance(spec, TestVector::real(f), r, s, a, b), want, 1e-10);
  }
}

TEST(Markov, SeparatedArcsDecouple) {
  const Matrix h = random_h(4, 46);
  const double beta = 2.0;
  const CovarianceSpec spec(ThermalContext(eigendecompose(h), beta));
  std::mt19937_64 gen(5);
  const TestVector f = TestVector::real(oracle::random_rvector(4, gen));
  const double r = 0.3, s = 1.1;
  std::vector<ProbePair> probes{{0.5, 1.5}, {1.0, 0.1}, {0.31, 1.9}, {0.7, 1.12}};
  EXPECT_LE(markov_check(spec, f, r, s, probes), 1e-8);
  // Wrapping arc: from 1.7 through beta back to 0.4.
  std::vector<ProbePair> wrapped{{1.9, 1.0}, {0.2, 0.5}};
  EXPECT_LE(markov_check(spec, f, 1.7, 0.4, wrapped), 1e-8);
  // Same arc: generically correlated.
  EXPECT_GT(std::abs(conditional_covariance(spec, f, r, s, 0.5, 0.9)), 1e-6);
}

TEST(Markov, OrnsteinUhlenbeckLine) {
  // Stationary OU on the line with Cov(x_a, x_b) = e^{-|a-b|}/2.
  const CovarianceSpec spec(ThermalContext(scalar_model(1.0), kGroundState));
  EXPECT_LE(markov_check(spec, unit(), 0.0, 1.0, {{0.5, 2.0}, {0.2, -1.0}}), 1e-15);
  // Inside the bridge the conditional covariance has a closed form.
  auto c = [](double a, double b) { return 0.5 * std::exp(-std::abs(a - b)); };
  const double r = 0.0, s = 1.0, u = 0.3, v = 0.6;
  Eigen::Matrix2d css;
  css << c(r, r), c(r, s), c(s, r), c(s, s);
  Eigen::RowVector2d cu(c(u, r), c(u, s)), cv(c(v, r), c(v, s));
  const double want = c(u, v) - (cu * css.inverse() * cv.transpose())(0, 0);
  EXPECT_NEAR(conditional_covariance(spec, unit(), r, s, u, v), want, 1e-15);
  EXPECT_GT(want, 0.0);
}

TEST(Markov, InvalidProbesRejected) {
  const CovarianceSpec spec(ThermalContext(scalar_model(1.0), 1.0));
  EXPECT_EQ(code_of([&] { markov_check(spec, unit(), 0.2, 0.6, {{0.3, 0.4}}); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([&] { conditional_covariance(spec, unit(), 0.2, 0.2, 0.3, 0.8); }),
            ErrorCode::DegenerateConditioning);
}

TEST(ImageSum, ExcessIsRelativeToTheKernel) {
  // R(d) ~ 2 / (beta lambda) = 1e7 here; the excess over the tail is rounding of that size.
  const CovarianceSpec spec(ThermalContext(scalar_model(1e-7), 2.0));
  const ImageSumResult r = image_sum_check(spec, 0.7, 20);
  EXPECT_GT(r.residual, 1e6);
  EXPECT_LT(std::abs(r.excess), 1e-14);
}

TEST(Markov, NearlyMasslessAtomStaysAccurate) {
  // Atom covariance 1/(beta lambda) + O(lambda): conditioning must cancel the
  // constant without losing the O(lambda) part.
  const double beta = 2.0;
  for (double lambda : {1e-3, 1e-7}) {
    const CovarianceSpec spec(ThermalContext(scalar_model(lambda), beta));
    EXPECT_LT(markov_check(spec, unit(), 0.3, 1.1, {{0.7, 1.6}, {0.4, 0.1}}), 1e-8 * lambda) << lambda;
  }
  // Same-arc probes: the conditional covariance is linear in lambda as lambda -> 0.
  auto same_arc = [&](double lambda) {
    return conditional_covariance(CovarianceSpec(ThermalContext(scalar_model(lambda), beta)), unit(), 0.3, 1.1, 0.5, 0.9);
  };
  const double a = same_arc(1e-7), b = same_arc(2e-7);
  EXPECT_GT(a, 0.0);
  EXPECT_NEAR(b / a, 2.0, 1e-5);
}

TEST(Markov, ScalarCoordinateVariantAgreesOnOneAtom) {
  const CovarianceSpec spec(ThermalContext(scalar_model(0.7), 1.5));
  for (double u : {0.4, 0.9}) {
    EXPECT_NEAR(scalar_conditional_covariance(spec, unit(), 0.2, 1.0, u, 1.3),
                conditional_covariance(spec, unit(), 0.2, 1.0, u, 1.3), 1e-14);
  }
}

TEST(Holder, ConstantAndSlack) {
  const double lambda = 0.9, beta = 1.2;
  const CovarianceSpec spec(ThermalContext(scalar_model(lambda), beta));
  EXPECT_NEAR(holder_constant(spec, unit()), lambda / (1.0 - std::exp(-beta * lambda)), 1e-15);
  const Matrix h = random_h(4, 47);
  const CovarianceSpec spec4(ThermalContext(eigendecompose(h), 2.0));
  std::mt19937_64 gen(6);
  std::vector<double> hs;
  for (int i = 0; i <= 20; ++i) hs.push_back(1e-3 * std::pow(0.8 / 1e-3, i / 20.0));
  for (int trial = 0; trial < 5; ++trial) {
    const HolderResult r = holder_check(spec4, TestVector::real(oracle::random_rvector(4, gen)), hs);
    EXPECT_GE(r.min_slack(), 0.0);
    ASSERT_EQ(r.rows.size(), hs.size());
    EXPECT_NEAR(r.rows.front().bound, 2.0 * r.m * hs.front(), 1e-15);
  }
}

TEST(Truncation, SeriesConvergesAtTheStatedRate) {
  const Matrix h = random_h(3, 48);
  const double beta = 1.0;
  const CovarianceSpec spec(ThermalContext(eigendecompose(h), beta));
  std::mt19937_64 gen(7);
  const TestVector f = TestVector::real(oracle::random_rvector(3, gen));
  const TestVector g = TestVector::real(oracle::random_rvector(3, gen));
  for (long n : {64L, 512L}) {
    const double bound = truncation_bound(spec, f, g, n);
    for (double d : {0.0, 0.1, 0.5}) {
      EXPECT_LE(std::abs(truncated_cov_pair(spec, f, g, d, n) - cov_pair(spec, f, g, 0.0, d)), bound) << n << " " << d;
    }
  }
  EXPECT_NEAR(truncation_bound(spec, f, g, 256) / truncation_bound(spec, f, g, 512), 2.0, 1e-14);
}

TEST(Ensemble, EstimatorsOnAHandBuiltEnsemble) {
  PathEnsemble ens;
  ens.beta = 1.0;
  ens.grid = 2;
  ens.n_samples = 2;
  ens.coords = {unit()};
  // sample 0: (1, 3), sample 1: (-1, 1)
  ens.values = {1.0, 3.0, -1.0, 1.0};
  const Estimate mean = empirical_mean(ens, 0);
  EXPECT_DOUBLE_EQ(mean.value, 1.0);
  EXPECT_EQ(mean.count, 2u);
  // per-sample grid means 2 and 0: sd sqrt(2), se 1
  EXPECT_DOUBLE_EQ(mean.standard_error, 1.0);
  const Estimate lag0 = empirical_covariance(ens, 0, 0, 0);
  EXPECT_DOUBLE_EQ(lag0.value, 3.0);  // (5 + 1) / 2
  const Estimate lag1 = empirical_covariance(ens, 0, 0, 1);
  EXPECT_DOUBLE_EQ(lag1.value, 1.0);  // (3 + -1) / 2
  const Estimate inc = empirical_increment_moment(ens, 0, 1);
  EXPECT_DOUBLE_EQ(inc.value, 4.0);
  EXPECT_EQ(code_of([&] { empirical_mean(ens, 1); }), ErrorCode::DimensionMismatch);
  PathEnsemble empty;
  empty.coords = {unit()};
  EXPECT_EQ(code_of([&] { empirical_mean(empty, 0); }), ErrorCode::EmptyEnsemble);
}

TEST(Ensemble, CsvLayout) {
  PathEnsemble ens;
  ens.beta = 2.0;
  ens.grid = 2;
  ens.n_samples = 1;
  ens.coords = {unit(), unit()};
  ens.values = {0.5, -0.25, 1.0 / 3.0, 2.0};
  std::ostringstream out;
  write_paths_csv(out, ens);
  EXPECT_EQ(out.str(),
            "sample,s,coord,value\n"
            "0,0,0,0.5\n"
            "0,0,1,-0.25\n"
            "0,1,0,0.33333333333333331\n"
            "0,1,1,2\n");
}
