#include "kmsq/process.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <fmt/format.h>

#include "kmsq/error.hpp"

namespace kmsq {
namespace {

void require_real(const TestVector& f, const char* what) {
  if (!f.is_real()) throw Error(ErrorCode::NonRealVector, fmt::format("{} needs real test vectors", what));
}

// Covariance of one spectral atom at two times, i.e. (1/2) R(d) for lambda.
double atom_cov(const ThermalContext& ctx, double lambda, double a, double b) {
  return 0.5 * kernel_R(ctx, lambda, circle_distance(a, b, ctx.beta()));
}

using Wide = boost::multiprecision::cpp_bin_float_50;

// atom_cov in 50-digit arithmetic, following ThermalContext::plus_part and
// minus_part. For beta * lambda -> 0 the atom is a constant of size
// 1/(beta lambda) plus a fluctuation of size beta lambda, and conditioning
// cancels the constant; doubles lose the fluctuation entirely.
Wide wide_atom_cov(const ThermalContext& ctx, double lambda, double a, double b) {
  const Wide l = lambda;
  Wide d = abs(Wide(b) - Wide(a));
  if (ctx.is_ground_state()) return Wide(0.5) * exp(-d * l);
  const Wide beta = ctx.beta();
  d = fmod(Wide(b) - Wide(a), beta);
  if (d < 0) d += beta;
  const Wide decay = exp(-(beta - d) * l);
  if (ctx.b_operator() == BOperator::CorruptedNegativeControl) {
    return Wide(0.5) * ((1 + exp(-beta * l) / 2) * exp(-d * l) + decay / 2);
  }
  return Wide(0.5) * (exp(-d * l) + decay) / (1 - exp(-beta * l));
}

// Conditional covariance of (x_u, x_v) given (x_r, x_s) for a stationary
// scalar Gaussian with covariance c(a, b). Throws when det C <= floor * crr * css.
template <class T, class Cov>
T schur_2x2(const Cov& c, double r, double s, double u, double v, double floor) {
  const T crr = c(r, r), css = c(s, s), crs = c(r, s);
  const T det = crr * css - crs * crs;
  if (!(det > floor * crr * css)) {
    throw Error(ErrorCode::DegenerateConditioning,
                fmt::format("conditioning covariance at r = {}, s = {} is singular", r, s));
  }
  const T ur = c(u, r), us = c(u, s), vr = c(v, r), vs = c(v, s);
  // [ur us] C^{-1} [vr vs]^T with C^{-1} = [[css, -crs], [-crs, crr]] / det
  const T correction = (ur * (css * vr - crs * vs) + us * (crr * vs - crs * vr)) / det;
  return c(u, v) - correction;
}

// Below this relative determinant the double Schur complement is redone in
// 50 digits; rounding is amplified by about its inverse.
constexpr double kWideConditioning = 1e-4;
constexpr double kDoubleFloor = 1e-14;
constexpr double kWideFloor = 1e-40;

double atom_conditional(const ThermalContext& ctx, double lambda, double r, double s, double u, double v) {
  auto c = [&](double a, double b) { return atom_cov(ctx, lambda, a, b); };
  const double crr = c(r, r), crs = c(r, s), css = c(s, s);
  if (crr * css - crs * crs > kWideConditioning * crr * css) return schur_2x2<double>(c, r, s, u, v, kDoubleFloor);
  auto w = [&](double a, double b) { return wide_atom_cov(ctx, lambda, a, b); };
  return static_cast<double>(schur_2x2<Wide>(w, r, s, u, v, kWideFloor));
}

bool strictly_inside_arc(double from, double to, double x, double beta) {
  const double len = circle_distance(from, to, beta);
  const double pos = circle_distance(from, x, beta);
  return pos > 0.0 && pos < len;
}

}  // namespace

double circle_distance(double s1, double s2, double beta) {
  const double diff = s2 - s1;
  if (!std::isfinite(beta)) return std::abs(diff);
  double d = std::fmod(diff, beta);
  if (d < 0.0) d += beta;
  if (d >= beta) d = 0.0;
  return d;
}

double kernel_R(const ThermalContext& ctx, double lambda, double d) {
  if (ctx.is_ground_state()) return std::exp(-std::abs(d) * lambda);
  return ctx.plus_part(lambda) * std::exp(-d * lambda) + ctx.minus_part(lambda, d);
}

Matrix covariance(const CovarianceSpec& spec, double d) {
  const GeneratorModel& model = spec.model();
  if (model.kind() != ModelKind::Matrix) {
    throw Error(ErrorCode::QuadratureModelUnsupported, "covariance as a matrix needs a matrix model");
  }
  const Vector& lambda = model.spectrum();
  Vector r(lambda.size());
  for (Index k = 0; k < lambda.size(); ++k) r[k] = kernel_R(spec.ctx(), lambda[k], d);
  return model.eigenvectors() * r.asDiagonal() * model.eigenvectors().transpose();
}

double cov_pair(const CovarianceSpec& spec, const TestVector& f, const TestVector& g, double s1,
                double s2) {
  require_real(f, "cov_pair");
  require_real(g, "cov_pair");
  const ThermalContext& ctx = spec.ctx();
  const double d = circle_distance(s1, s2, ctx.beta());
  const SpectralPair pair(ctx.model(), f, g);
  const Vector& lambda = ctx.model().spectrum();
  std::vector<double> r(static_cast<std::size_t>(lambda.size()));
  for (Index k = 0; k < lambda.size(); ++k) r[static_cast<std::size_t>(k)] = kernel_R(ctx, lambda[k], d);
  return 0.5 * (pair.sum(r).real() + ctx.condensate() * pair.zero_mode_product().real());
}

Matrix word_covariance(const CovarianceSpec& spec, const EuclideanWord& word) {
  const auto n = static_cast<Index>(word.size());
  Matrix c(n, n);
  for (Index k = 0; k < n; ++k) {
    for (Index l = k; l < n; ++l) {
      const auto& a = word[static_cast<std::size_t>(k)];
      const auto& b = word[static_cast<std::size_t>(l)];
      c(k, l) = c(l, k) = cov_pair(spec, a.f, b.f, a.s, b.s);
    }
  }
  return c;
}

double char_functional(const CovarianceSpec& spec, const EuclideanWord& word) {
  for (const auto& e : word) require_real(e.f, "char_functional");
  return std::exp(-0.5 * word_covariance(spec, word).sum());
}

double image_sum_stated_bound(double lambda_min, double beta, int n_images) {
  const double x = beta * lambda_min;
  return 2.0 * std::exp(-(n_images + 1) * x) / -std::expm1(-x);
}

ImageSumResult image_sum_check(const CovarianceSpec& spec, double d, int n_images) {
  const ThermalContext& ctx = spec.ctx();
  if (ctx.is_ground_state()) throw Error(ErrorCode::InvalidArgument, "the image sum needs finite beta");
  if (n_images < 0) throw Error(ErrorCode::InvalidArgument, "image count must be >= 0");
  const double beta = ctx.beta();
  const Vector& lambda = spec.model().spectrum();
  ImageSumResult out;
  for (Index k = 0; k < lambda.size(); ++k) {
    const double l = lambda[k];
    double partial = 0.0;
    for (int n = -n_images; n <= n_images; ++n) partial += std::exp(-std::abs(d + n * beta) * l);
    const double exact = kernel_R(ctx, l, d);
    const double residual = std::abs(partial - exact);
    const double x = beta * l;
    const double tail = 2.0 * std::cosh(d * l) * std::exp(-(n_images + 1) * x) / -std::expm1(-x);
    out.residual = std::max(out.residual, residual);
    out.exact_tail = std::max(out.exact_tail, tail);
    out.excess = std::max(out.excess, (residual - tail) / std::max(1.0, exact));
  }
  out.stated_bound = image_sum_stated_bound(spec.model().min_eigenvalue(), beta, n_images);
  return out;
}

double conditional_covariance(const CovarianceSpec& spec, const TestVector& f, double r, double s,
                              double u, double v) {
  require_real(f, "conditional_covariance");
  const ThermalContext& ctx = spec.ctx();
  const GeneratorModel& model = ctx.model();
  const CVector coeffs = model.to_spectral(f);
  const Vector& lambda = model.spectrum();
  const Vector& mu = model.measure();
  // Spectral coordinates are independent, so the joint Schur complement is the
  // weighted sum of per-atom complements. The condensate mode is constant in
  // time and is fixed exactly by its value at r.
  double total = 0.0;
  for (Index k = 0; k < lambda.size(); ++k) {
    const double weight = mu[k] * std::norm(coeffs[k]);
    if (weight == 0.0) continue;
    const double l = lambda[k];
    total += weight * atom_conditional(ctx, l, r, s, u, v);
  }
  return total;
}

double scalar_conditional_covariance(const CovarianceSpec& spec, const TestVector& f, double r,
                                     double s, double u, double v) {
  auto c = [&](double a, double b) { return cov_pair(spec, f, f, a, b); };
  return schur_2x2<double>(c, r, s, u, v, kDoubleFloor);
}

double markov_check(const CovarianceSpec& spec, const TestVector& f, double r, double s,
                    const std::vector<ProbePair>& probes) {
  const double beta = spec.beta();
  double worst = 0.0;
  for (const auto& p : probes) {
    bool valid = false;
    if (std::isfinite(beta)) {
      valid = strictly_inside_arc(r, s, p.u, beta) && strictly_inside_arc(s, r, p.v, beta);
    } else {
      const double lo = std::min(r, s), hi = std::max(r, s);
      valid = p.u > lo && p.u < hi && (p.v < lo || p.v > hi);
    }
    if (!valid) {
      throw Error(ErrorCode::InvalidArgument,
                  fmt::format("probe (u = {}, v = {}) does not separate the arcs of r = {}, s = {}", p.u,
                              p.v, r, s));
    }
    worst = std::max(worst, std::abs(conditional_covariance(spec, f, r, s, p.u, p.v)));
  }
  return worst;
}

double holder_constant(const CovarianceSpec& spec, const TestVector& f) {
  require_real(f, "holder_constant");
  const ThermalContext& ctx = spec.ctx();
  const SpectralPair pair(ctx.model(), f, f);
  const Vector& lambda = ctx.model().spectrum();
  std::vector<double> w(static_cast<std::size_t>(lambda.size()));
  for (Index k = 0; k < lambda.size(); ++k) {
    const double l = lambda[k];
    w[static_cast<std::size_t>(k)] = ctx.is_ground_state() ? l : l / -std::expm1(-ctx.beta() * l);
  }
  return pair.sum(w).real();
}

double HolderResult::min_slack() const {
  double out = std::numeric_limits<double>::infinity();
  for (const auto& r : rows) out = std::min(out, r.slack());
  return out;
}

HolderResult holder_check(const CovarianceSpec& spec, const TestVector& f, const std::vector<double>& h_grid) {
  HolderResult out;
  out.m = holder_constant(spec, f);
  const TwoPointKernel kernel(spec.ctx(), f, f);
  const double s0 = kernel.S(0.0).real();
  for (double h : h_grid) {
    HolderRow row;
    row.h = h;
    row.increment = std::abs(kernel.S(std::abs(h)).real() - s0);
    row.bound = 2.0 * out.m * std::abs(h);
    out.rows.push_back(row);
  }
  return out;
}

namespace {

template <class PerSample>
Estimate sample_average(const PathEnsemble& ens, const PerSample& per_sample) {
  if (ens.n_samples == 0 || ens.grid == 0) {
    throw Error(ErrorCode::EmptyEnsemble, "the ensemble has no samples");
  }
  const std::size_t n = ens.n_samples;
  double mean = 0.0;
  double m2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double y = per_sample(i);
    const double delta = y - mean;
    mean += delta / static_cast<double>(i + 1);
    m2 += delta * (y - mean);
  }
  Estimate e;
  e.value = mean;
  e.count = n;
  e.standard_error = n > 1 ? std::sqrt(m2 / static_cast<double>(n - 1) / static_cast<double>(n)) : 0.0;
  return e;
}

void require_coord(const PathEnsemble& ens, std::size_t j) {
  if (j >= ens.coords.size()) {
    throw Error(ErrorCode::DimensionMismatch,
                fmt::format("coordinate {} out of range ({} coordinates)", j, ens.coords.size()));
  }
}

}  // namespace

Estimate empirical_covariance(const PathEnsemble& ens, std::size_t j, std::size_t k, std::size_t lag) {
  require_coord(ens, j);
  require_coord(ens, k);
  const std::size_t m_count = ens.grid;
  return sample_average(ens, [&](std::size_t i) {
    double acc = 0.0;
    for (std::size_t m = 0; m < m_count; ++m) acc += ens.at(i, m, j) * ens.at(i, (m + lag) % m_count, k);
    return acc / static_cast<double>(m_count);
  });
}

Estimate empirical_increment_moment(const PathEnsemble& ens, std::size_t j, std::size_t lag) {
  require_coord(ens, j);
  const std::size_t m_count = ens.grid;
  return sample_average(ens, [&](std::size_t i) {
    double acc = 0.0;
    for (std::size_t m = 0; m < m_count; ++m) {
      const double d = ens.at(i, (m + lag) % m_count, j) - ens.at(i, m, j);
      acc += d * d;
    }
    return acc / static_cast<double>(m_count);
  });
}

Estimate empirical_mean(const PathEnsemble& ens, std::size_t j) {
  require_coord(ens, j);
  return sample_average(ens, [&](std::size_t i) {
    double acc = 0.0;
    for (std::size_t m = 0; m < ens.grid; ++m) acc += ens.at(i, m, j);
    return acc / static_cast<double>(ens.grid);
  });
}

double truncated_cov_pair(const CovarianceSpec& spec, const TestVector& f, const TestVector& g, double d,
                          long n_modes) {
  require_real(f, "truncated_cov_pair");
  require_real(g, "truncated_cov_pair");
  const ThermalContext& ctx = spec.ctx();
  if (ctx.is_ground_state()) throw Error(ErrorCode::InvalidArgument, "mode truncation needs finite beta");
  const double beta = ctx.beta();
  const SpectralPair pair(ctx.model(), f, g);
  const Vector& lambda = ctx.model().spectrum();
  std::vector<double> w(static_cast<std::size_t>(lambda.size()));
  for (Index k = 0; k < lambda.size(); ++k) {
    const double l = lambda[k];
    w[static_cast<std::size_t>(k)] = fourier_series_kernel(l, d, beta, n_modes) / -std::expm1(-beta * l);
  }
  return 0.5 * pair.sum(w).real();
}

double truncation_bound(const CovarianceSpec& spec, const TestVector& f, const TestVector& g, long n_modes) {
  if (n_modes <= 0) return std::numeric_limits<double>::infinity();
  const GeneratorModel& model = spec.model();
  const CVector fs = model.to_spectral(f);
  const CVector gs = model.to_spectral(g);
  const Vector& lambda = model.spectrum();
  const Vector& mu = model.measure();
  double sum = 0.0;
  for (Index k = 0; k < lambda.size(); ++k) sum += mu[k] * std::abs(fs[k]) * std::abs(gs[k]) * lambda[k];
  const double pi2 = std::numbers::pi * std::numbers::pi;
  return 0.5 * sum * spec.beta() / (pi2 * static_cast<double>(n_modes));
}

void write_paths_csv(std::ostream& out, const PathEnsemble& ens) {
  out << "sample,s,coord,value\n";
  for (std::size_t i = 0; i < ens.n_samples; ++i) {
    for (std::size_t m = 0; m < ens.grid; ++m) {
      const double s = ens.time(m);
      for (std::size_t j = 0; j < ens.coords.size(); ++j) {
        out << fmt::format("{},{:.17g},{},{:.17g}\n", i, s, j, ens.at(i, m, j));
      }
    }
  }
}

}  // namespace kmsq
