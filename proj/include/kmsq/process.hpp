#pragma once

// The periodic Gaussian process attached to a quasi-free state: exact
// covariances on the circle of length beta (the line when beta = inf),
// characteristic functionals, Markov and Hoelder checks, and the ensemble
// container filled by the sampler.
//
//   R_beta(d) = (e^{-d h} + e^{-(beta-d) h}) / (1 - e^{-beta h}),   R_inf(d) = e^{-d h}
//   E <xi_{s1}, f> <xi_{s2}, g> = (1/2) <f, R(d) g>,   d = (s2 - s1) mod beta

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "kmsq/quasifree.hpp"

namespace kmsq {

class CovarianceSpec {
 public:
  explicit CovarianceSpec(ThermalContext ctx) : ctx_(std::move(ctx)) {}

  const ThermalContext& ctx() const { return ctx_; }
  const GeneratorModel& model() const { return ctx_.model(); }
  double beta() const { return ctx_.beta(); }

 private:
  ThermalContext ctx_;
};

/// (s2 - s1) reduced to [0, beta); |s2 - s1| on the line.
double circle_distance(double s1, double s2, double beta);

/// R(d) on a single spectral atom.
double kernel_R(const ThermalContext& ctx, double lambda, double d);

/// R(d) as a matrix (Matrix kind).
Matrix covariance(const CovarianceSpec& spec, double d);

/// (1/2) <f, R(d) g> plus the condensate mode, for real f, g.
double cov_pair(const CovarianceSpec& spec, const TestVector& f, const TestVector& g, double s1,
                double s2);

/// Covariance matrix of the Gaussian vector (<xi_{s_k}, f_k>)_k.
Matrix word_covariance(const CovarianceSpec& spec, const EuclideanWord& word);

/// E exp(i sum_k <xi_{s_k}, f_k>) in closed form.
double char_functional(const CovarianceSpec& spec, const EuclideanWord& word);

struct ImageSumResult {
  double residual = 0.0;      // max over atoms of |sum_{|n|<=N} e^{-|d+n beta| lambda} - R(d)|
  double exact_tail = 0.0;    // max over atoms of 2 cosh(d lambda) e^{-(N+1) beta lambda} / (1 - e^{-beta lambda})
  double stated_bound = 0.0;  // 2 e^{-(N+1) beta lambda_min} / (1 - e^{-beta lambda_min})
  // max over atoms of (residual - exact tail) / max(1, R(d)): what is left
  // after the tail, on the scale at which R(d) itself is rounded.
  double excess = -std::numeric_limits<double>::infinity();
};

ImageSumResult image_sum_check(const CovarianceSpec& spec, double d, int n_images);

/// 2 e^{-(N+1) beta lambda} / (1 - e^{-beta lambda})
double image_sum_stated_bound(double lambda_min, double beta, int n_images);

/// Cov(<xi_u,f>, <xi_v,f> | xi_r, xi_s), conditioning on every spectral
/// coordinate of the process at r and s. No arc requirement on u, v.
double conditional_covariance(const CovarianceSpec& spec, const TestVector& f, double r, double s,
                              double u, double v);

/// The same with conditioning only on the scalar coordinates <xi_r,f>, <xi_s,f>.
double scalar_conditional_covariance(const CovarianceSpec& spec, const TestVector& f, double r,
                                     double s, double u, double v);

struct ProbePair {
  double u = 0.0;
  double v = 0.0;
};

/// Largest |conditional covariance| over probe pairs, each with u inside the
/// arc from r to s and v inside the complementary arc (or outside [r, s] on
/// the line when beta = inf).
double markov_check(const CovarianceSpec& spec, const TestVector& f, double r, double s,
                    const std::vector<ProbePair>& probes);

/// m(f) = sum lambda |f_k|^2 / (1 - e^{-beta lambda})
double holder_constant(const CovarianceSpec& spec, const TestVector& f);

struct HolderRow {
  double h = 0.0;
  double increment = 0.0;  // |S(f,f;h) - S(f,f;0)|
  double bound = 0.0;      // 2 m(f) |h|
  double slack() const { return bound - increment; }
};

struct HolderResult {
  double m = 0.0;
  std::vector<HolderRow> rows;
  double min_slack() const;
};

HolderResult holder_check(const CovarianceSpec& spec, const TestVector& f, const std::vector<double>& h_grid);

/// Sampled paths of the process on M equally spaced circle points.
struct PathEnsemble {
  double beta = 0.0;
  std::size_t grid = 0;
  std::size_t n_samples = 0;
  long n_modes = 0;
  std::uint64_t seed = 0;
  std::vector<TestVector> coords;
  // values[(sample * grid + m) * coords.size() + j]
  std::vector<double> values;

  double at(std::size_t sample, std::size_t m, std::size_t j) const {
    return values[(sample * grid + m) * coords.size() + j];
  }
  double time(std::size_t m) const { return beta * static_cast<double>(m) / static_cast<double>(grid); }
};

struct Estimate {
  double value = 0.0;
  double standard_error = 0.0;
  std::size_t count = 0;
};

/// Mean of <xi_s, f_j> <xi_{s+lag}, f_k> over samples and grid points. The
/// per-sample grid average is the unit of resampling; its jackknife standard
/// error has the closed form sd / sqrt(n).
Estimate empirical_covariance(const PathEnsemble& ens, std::size_t j, std::size_t k, std::size_t lag);

/// E (<xi_{s+lag}, f_j> - <xi_s, f_j>)^2, estimated the same way.
Estimate empirical_increment_moment(const PathEnsemble& ens, std::size_t j, std::size_t lag);

/// Mean of <xi_s, f_j> over samples and grid points.
Estimate empirical_mean(const PathEnsemble& ens, std::size_t j);

/// Covariance the sampler targets with N modes: the Fourier series of the
/// exact kernel truncated at |n| <= N.
double truncated_cov_pair(const CovarianceSpec& spec, const TestVector& f, const TestVector& g, double d,
                          long n_modes);

/// Upper bound on |cov_pair - truncated_cov_pair| at any lag:
/// (1/2) sum mu |f_k| |g_k| beta lambda_k / (pi^2 N).
double truncation_bound(const CovarianceSpec& spec, const TestVector& f, const TestVector& g, long n_modes);

/// Header `sample,s,coord,value`, one row per value, LF line ends.
void write_paths_csv(std::ostream& out, const PathEnsemble& ens);

}  // namespace kmsq
