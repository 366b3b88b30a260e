#include "kmsq/quasifree.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/quadrature/gauss.hpp>
#include <fmt/format.h>

#include "kmsq/error.hpp"
#include "kmsq/simd/kernels.hpp"

namespace kmsq {
namespace {

using std::numbers::pi;

double time_slack(double beta) { return 1e-12 * std::max(1.0, std::isfinite(beta) ? beta : 1.0); }

// 1 - e^{-x} without cancellation.
double one_minus_exp(double x) { return -std::expm1(-x); }

std::span<const double> as_span(const std::vector<double>& v) { return {v.data(), v.size()}; }

}  // namespace

ThermalContext::ThermalContext(GeneratorModel model, double beta, double condensate,
                               BOperator b_operator)
    : model_(std::make_shared<const GeneratorModel>(std::move(model))),
      beta_(beta),
      condensate_(condensate),
      b_operator_(b_operator) {
  if (!(beta > 0.0)) throw Error(ErrorCode::InvalidArgument, "beta must be positive or inf");
  if (!(condensate >= 0.0) || !std::isfinite(condensate)) {
    throw Error(ErrorCode::InvalidArgument, "condensate constant must be finite and >= 0");
  }
  const Vector& lambda = model_->spectrum();
  b_values_.resize(lambda.size());
  for (Index k = 0; k < lambda.size(); ++k) b_values_[k] = b_value(lambda[k]);
}

double ThermalContext::b_value(double lambda) const {
  if (is_ground_state()) return 1.0;
  const double x = beta_ * lambda;
  if (b_operator_ == BOperator::CorruptedNegativeControl) return 1.0 + std::exp(-x);
  return (1.0 + std::exp(-x)) / one_minus_exp(x);
}

double ThermalContext::plus_part(double lambda) const {
  if (is_ground_state()) return 1.0;
  const double x = beta_ * lambda;
  if (b_operator_ == BOperator::CorruptedNegativeControl) return 1.0 + 0.5 * std::exp(-x);
  return 1.0 / one_minus_exp(x);
}

double ThermalContext::minus_part(double lambda, double s) const {
  if (is_ground_state()) return 0.0;
  const double decay = std::exp(-(beta_ - s) * lambda);
  if (b_operator_ == BOperator::CorruptedNegativeControl) return 0.5 * decay;
  return decay / one_minus_exp(beta_ * lambda);
}

Complex b_form(const ThermalContext& ctx, const TestVector& f, const TestVector& g) {
  const SpectralPair pair(ctx.model(), f, g);
  const Vector& b = ctx.b_values();
  return pair.sum({b.data(), static_cast<std::size_t>(b.size())}) +
         ctx.condensate() * pair.zero_mode_product();
}

double state_eval(const ThermalContext& ctx, const TestVector& f) {
  return std::exp(-0.25 * b_form(ctx, f, f).real());
}

TwoPointKernel::TwoPointKernel(const ThermalContext& ctx, const TestVector& f, const TestVector& g)
    : ctx_(&ctx), fg_(ctx.model(), f, g), gf_(ctx.model(), g, f), real_(f.is_real() && g.is_real()) {}

Complex TwoPointKernel::F(double t) const {
  const Vector& lambda = ctx_->model().spectrum();
  const Vector& b = ctx_->b_values();
  const auto n = static_cast<std::size_t>(lambda.size());
  std::vector<double> c(n), s(n), bc(n), bs(n);
  for (std::size_t k = 0; k < n; ++k) {
    c[k] = std::cos(t * lambda[static_cast<Index>(k)]);
    s[k] = std::sin(t * lambda[static_cast<Index>(k)]);
    bc[k] = b[static_cast<Index>(k)] * c[k];
    bs[k] = b[static_cast<Index>(k)] * s[k];
  }
  const double re = fg_.sum(as_span(bc), as_span(bs)).real();
  const double im = fg_.sum(as_span(c), as_span(s)).imag();
  return {re + ctx_->condensate() * fg_.zero_mode_product().real(), im};
}

Complex TwoPointKernel::S(double s) const {
  const double beta = ctx_->beta();
  const double slack = time_slack(beta);
  if (ctx_->is_ground_state()) {
    if (s < -slack) throw Error(ErrorCode::TimeOutOfRange, fmt::format("ground-state S needs s >= 0, got {}", s));
    s = std::max(s, 0.0);
  } else if (s < -slack || s > beta + slack) {
    if (!real_) {
      throw Error(ErrorCode::TimeOutOfRange,
                  fmt::format("S(f,g;s) for non-real vectors needs s in [0, {}], got {}", beta, s));
    }
    s -= beta * std::floor(s / beta);
  }
  if (!ctx_->is_ground_state()) s = std::clamp(s, 0.0, beta);

  const Vector& lambda = ctx_->model().spectrum();
  const auto n = static_cast<std::size_t>(lambda.size());
  std::vector<double> forward(n), backward(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double l = lambda[static_cast<Index>(k)];
    forward[k] = ctx_->plus_part(l) * std::exp(-s * l);
    backward[k] = ctx_->minus_part(l, s);
  }
  Complex value = fg_.sum(as_span(forward));
  if (!ctx_->is_ground_state()) value += gf_.sum(as_span(backward));
  return value + ctx_->condensate() * fg_.zero_mode_product().real();
}

Complex F_kernel(const ThermalContext& ctx, const TestVector& f, const TestVector& g, double t) {
  return TwoPointKernel(ctx, f, g).F(t);
}

Complex green2_real(const ThermalContext& ctx, const TestVector& f, const TestVector& g, double t) {
  const double bff = b_form(ctx, f, f).real();
  const double bgg = b_form(ctx, g, g).real();
  return std::exp(Complex(-0.25 * (bff + bgg)) - 0.5 * F_kernel(ctx, f, g, t));
}

Complex S_kernel(const ThermalContext& ctx, const TestVector& f, const TestVector& g, double s) {
  return TwoPointKernel(ctx, f, g).S(s);
}

Complex green2_euclid(const ThermalContext& ctx, const TestVector& f, const TestVector& g, double s) {
  const double bff = b_form(ctx, f, f).real();
  const double bgg = b_form(ctx, g, g).real();
  return std::exp(Complex(-0.25 * (bff + bgg)) - 0.5 * S_kernel(ctx, f, g, s));
}

void require_euclidean_region(const ThermalContext& ctx, const EuclideanWord& word) {
  for (std::size_t i = 1; i < word.size(); ++i) {
    if (word[i].s < word[i - 1].s) {
      throw Error(ErrorCode::UnorderedWord,
                  fmt::format("word times must be non-decreasing (entry {} at {} after {})", i,
                              word[i].s, word[i - 1].s));
    }
  }
  if (!word.empty() && !ctx.is_ground_state()) {
    const double span = word.back().s - word.front().s;
    if (span > ctx.beta() + time_slack(ctx.beta())) {
      throw Error(ErrorCode::TimeOutOfRange,
                  fmt::format("word spans {} > beta = {}", span, ctx.beta()));
    }
  }
}

Complex euclid_product_form(const ThermalContext& ctx, const EuclideanWord& word) {
  require_euclidean_region(ctx, word);
  Complex log_value = 0.0;
  for (const auto& e : word) log_value -= 0.25 * b_form(ctx, e.f, e.f).real();
  for (std::size_t j = 0; j < word.size(); ++j) {
    for (std::size_t l = j + 1; l < word.size(); ++l) {
      const double gap = std::min(word[l].s - word[j].s, ctx.beta());
      log_value -= 0.5 * S_kernel(ctx, word[j].f, word[l].f, gap);
    }
  }
  return std::exp(log_value);
}

Complex multi_green_euclid(const ThermalContext& ctx, const EuclideanWord& word) {
  require_euclidean_region(ctx, word);
  if (word.empty()) return 1.0;
  EuclideanWord merged;
  merged.reserve(word.size());
  Complex phase = 1.0;
  for (const auto& e : word) {
    if (!merged.empty() && merged.back().s == e.s) {
      const double sigma = symplectic(ctx.model(), merged.back().f, e.f);
      phase *= std::exp(Complex(0.0, -0.5 * sigma));
      merged.back().f = merged.back().f + e.f;
    } else {
      merged.push_back(e);
    }
  }
  return phase * euclid_product_form(ctx, merged);
}

double fourier_coeff(long n, double p, double beta) {
  const double pb = p * beta;
  const double w = 2.0 * pi * static_cast<double>(n);
  return 2.0 * pb * one_minus_exp(pb) / (pb * pb + w * w);
}

namespace {

// cos(2 pi m s / beta) for m = 1..N
std::vector<double> cosine_table(double s, double beta, long n_modes) {
  if (n_modes < 0) throw Error(ErrorCode::InvalidArgument, "mode count must be >= 0");
  std::vector<double> cosines(static_cast<std::size_t>(n_modes));
  for (std::size_t i = 0; i < cosines.size(); ++i) {
    cosines[i] = std::cos(2.0 * pi * static_cast<double>(i + 1) * s / beta);
  }
  return cosines;
}

// sum_{|n| <= N} c_n(p) e^{2 pi i n s / beta} / (1 - e^{-beta p})
double reduced_series(double p, double beta, const std::vector<double>& cosines, std::vector<double>& scratch) {
  const double pb = p * beta;
  scratch.resize(cosines.size());
  for (std::size_t i = 0; i < cosines.size(); ++i) {
    const double w = 2.0 * pi * static_cast<double>(i + 1);
    scratch[i] = 2.0 * pb / (pb * pb + w * w);
  }
  return 2.0 / pb + 2.0 * simd::dot(as_span(scratch), as_span(cosines));
}

}  // namespace

double fourier_series_kernel(double p, double s, double beta, long n_modes) {
  const std::vector<double> cosines = cosine_table(s, beta, n_modes);
  std::vector<double> scratch;
  return one_minus_exp(p * beta) * reduced_series(p, beta, cosines, scratch);
}

double fourier_series_S(const ThermalContext& ctx, const TestVector& f, double s, long n_modes) {
  if (ctx.is_ground_state()) {
    throw Error(ErrorCode::InvalidArgument, "the Fourier representation needs finite beta");
  }
  if (!f.is_real()) throw Error(ErrorCode::NonRealVector, "Fourier series of S needs a real vector");
  const SpectralPair pair(ctx.model(), f, f);
  const Vector& lambda = ctx.model().spectrum();
  const double beta = ctx.beta();
  const std::vector<double> cosines = cosine_table(s, beta, n_modes);
  std::vector<double> per_atom(static_cast<std::size_t>(lambda.size())), scratch;
  for (std::size_t k = 0; k < per_atom.size(); ++k) {
    per_atom[k] = reduced_series(lambda[static_cast<Index>(k)], beta, cosines, scratch);
  }
  return pair.sum(as_span(per_atom)).real() + ctx.condensate() * pair.zero_mode_product().real();
}

double kernel_P(double rho, double s, double beta) {
  const double a = pi * s / beta;
  const double x = pi * std::abs(rho) / beta;
  if (x > 700.0) return 0.0;
  return std::sin(a) / (2.0 * beta * (std::cosh(x) - std::cos(a)));
}

Complex quadrature_S(const ThermalContext& ctx, const TestVector& f, const TestVector& g, double s) {
  if (ctx.is_ground_state()) {
    throw Error(ErrorCode::InvalidArgument, "the strip-kernel representation needs finite beta");
  }
  const double beta = ctx.beta();
  if (!(s > 0.0 && s < beta)) {
    throw Error(ErrorCode::EndpointSingularity,
                fmt::format("strip-kernel quadrature needs 0 < s < beta, got s = {}", s));
  }
  const TwoPointKernel fg(ctx, f, g);
  const TwoPointKernel gf(ctx, g, f);
  const double sr = beta - s;
  auto integrand = [&](double rho) {
    return kernel_P(rho, s, beta) * fg.F(rho) + kernel_P(rho, sr, beta) * gf.F(-rho);
  };

  // Truncate where the kernel has fallen below 1e-14 of its peak.
  const double peak = std::max(kernel_P(0.0, s, beta), kernel_P(0.0, sr, beta));
  double radius = beta;
  while (std::max(kernel_P(radius, s, beta), kernel_P(radius, sr, beta)) > 1e-14 * peak) radius *= 1.25;

  // Panels at most one period of the fastest oscillation e^{i rho lambda_max}
  // and narrower than the kernel peak; a 20-point Gauss rule is then exact to
  // rounding on each panel.
  const double lambda_max = ctx.model().spectrum().maxCoeff();
  const double width0 = std::min({beta / 8.0, 0.5 * std::min(s, sr), 2.0 * pi / lambda_max});
  const auto panels = static_cast<long>(std::ceil(2.0 * radius / width0));
  const double width = 2.0 * radius / static_cast<double>(panels);

  using Rule = boost::math::quadrature::gauss<double, 20>;
  const auto& x = Rule::abscissa();
  const auto& w = Rule::weights();
  Complex total = 0.0;
  for (long i = 0; i < panels; ++i) {
    const double a = -radius + static_cast<double>(i) * width;
    const double half = 0.5 * width;
    const double mid = a + half;
    Complex sum = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
      sum += w[j] * (integrand(mid + half * x[j]) + integrand(mid - half * x[j]));
    }
    total += half * sum;
  }
  return total;
}

Matrix thermal_B(const GeneratorModel& model, double beta) {
  if (model.kind() != ModelKind::Matrix) {
    throw Error(ErrorCode::QuadratureModelUnsupported, "thermal_B needs a matrix model");
  }
  const ThermalContext ctx(model, beta);
  const Matrix& q = model.eigenvectors();
  return q * ctx.b_values().asDiagonal() * q.transpose();
}

GeneratorModel recover_generator(const Matrix& b, double beta) {
  if (!(beta > 0.0) || !std::isfinite(beta)) {
    throw Error(ErrorCode::InvalidArgument, "recovering h needs a finite positive beta");
  }
  if (b.rows() == 0 || b.rows() != b.cols()) {
    throw Error(ErrorCode::NonSymmetric, "B must be a non-empty square matrix");
  }
  const double scale = std::max(1.0, b.cwiseAbs().maxCoeff());
  if ((b - b.transpose()).cwiseAbs().maxCoeff() > kSymmetryTolerance * scale) {
    throw Error(ErrorCode::NonSymmetric, "B is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> solver(0.5 * (b + b.transpose()));
  const Vector& evals = solver.eigenvalues();
  if (evals.minCoeff() <= 1.0) {
    throw Error(ErrorCode::SpectrumNotAboveOne,
                fmt::format("B must satisfy B > 1 strictly; smallest eigenvalue is {:.17g}", evals.minCoeff()));
  }
  Vector lambda(evals.size());
  for (Index k = 0; k < evals.size(); ++k) {
    // (B-1)/(B+1) = 1 - 2/(B+1)
    lambda[k] = -std::log1p(-2.0 / (evals[k] + 1.0)) / beta;
  }
  const Matrix& q = solver.eigenvectors();
  return eigendecompose(q * lambda.asDiagonal() * q.transpose());
}

}  // namespace kmsq
