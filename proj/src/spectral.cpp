#include "kmsq/spectral.hpp"

#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>

#include <boost/math/special_functions/legendre.hpp>
#include <fmt/format.h>

#include "kmsq/error.hpp"
#include "kmsq/simd/kernels.hpp"

namespace kmsq {

QuadratureRule gauss_legendre(std::size_t n, double lo, double hi) {
  if (n == 0 || !(hi > lo)) {
    throw Error(ErrorCode::InvalidArgument, "Gauss-Legendre rule needs n >= 1 and hi > lo");
  }
  // Boost returns the non-negative zeros only; the rule is symmetric.
  const auto zeros = boost::math::legendre_p_zeros<double>(static_cast<int>(n));
  std::vector<std::pair<double, double>> xw;
  xw.reserve(n);
  for (double x : zeros) {
    const double dp = boost::math::legendre_p_prime<double>(static_cast<int>(n), x);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    xw.emplace_back(x, w);
    if (x != 0.0) xw.emplace_back(-x, w);
  }
  std::sort(xw.begin(), xw.end());
  QuadratureRule rule{Vector(static_cast<Index>(n)), Vector(static_cast<Index>(n))};
  const double half = 0.5 * (hi - lo);
  const double mid = 0.5 * (hi + lo);
  for (std::size_t i = 0; i < n; ++i) {
    rule.nodes[static_cast<Index>(i)] = mid + half * xw[i].first;
    rule.weights[static_cast<Index>(i)] = half * xw[i].second;
  }
  return rule;
}

bool TestVector::is_real() const {
  return c_.size() == 0 || c_.imag().cwiseAbs().maxCoeff() <= kRealTolerance;
}

GeneratorModel eigendecompose(const Matrix& h) {
  if (h.rows() == 0 || h.rows() != h.cols()) {
    throw Error(ErrorCode::NonSymmetric, "generator must be a non-empty square matrix");
  }
  const double scale = std::max(1.0, h.cwiseAbs().maxCoeff());
  const double asym = (h - h.transpose()).cwiseAbs().maxCoeff();
  if (asym > kSymmetryTolerance * scale) {
    throw Error(ErrorCode::NonSymmetric,
                fmt::format("generator is not symmetric (max |h - h^T| = {:.3e})", asym));
  }
  const Matrix sym = 0.5 * (h + h.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> solver(sym);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorCode::NonPositiveSpectrum, "eigendecomposition did not converge");
  }
  const Vector& evals = solver.eigenvalues();
  if (evals.minCoeff() <= kSpectralFloor) {
    throw Error(ErrorCode::NonPositiveSpectrum,
                fmt::format("generator needs a spectral gap: smallest eigenvalue {:.3e} <= {:.0e}",
                            evals.minCoeff(), kSpectralFloor));
  }
  GeneratorModel model;
  model.kind_ = ModelKind::Matrix;
  model.spectrum_ = evals;
  model.measure_ = Vector::Ones(evals.size());
  model.eigenvectors_ = solver.eigenvectors();
  model.h_matrix_ = sym;

  const Matrix& q = model.eigenvectors_;
  const Index n = q.rows();
  const double orth = (q.transpose() * q - Matrix::Identity(n, n)).cwiseAbs().maxCoeff();
  const double recon = (q * evals.asDiagonal() * q.transpose() - sym).norm() / sym.norm();
  if (orth > 1e-12 || recon > 1e-10) {
    throw Error(ErrorCode::NonSymmetric,
                fmt::format("eigenbasis check failed (orthogonality {:.2e}, reconstruction {:.2e})",
                            orth, recon));
  }
  return model;
}

GeneratorModel GeneratorModel::from_dispersion(int space_dim,
                                               const std::function<double(double)>& dispersion,
                                               QuadratureRule radial_rule) {
  if (space_dim < 1) throw Error(ErrorCode::InvalidArgument, "space dimension must be >= 1");
  const Index n = radial_rule.nodes.size();
  if (n == 0 || radial_rule.weights.size() != n) {
    throw Error(ErrorCode::InvalidArgument, "radial rule must have matching non-empty nodes/weights");
  }
  for (Index k = 0; k < n; ++k) {
    if (radial_rule.weights[k] <= 0.0) {
      throw Error(ErrorCode::InvalidArgument, "radial quadrature weights must be positive");
    }
    if (k > 0 && !(radial_rule.nodes[k] > radial_rule.nodes[k - 1])) {
      throw Error(ErrorCode::InvalidArgument, "radial quadrature nodes must be strictly increasing");
    }
  }
  if (radial_rule.nodes[0] < 0.0) {
    throw Error(ErrorCode::InvalidArgument, "radial quadrature nodes must be non-negative");
  }
  const double d = space_dim;
  const double sphere = 2.0 * std::pow(std::numbers::pi, 0.5 * d) / std::tgamma(0.5 * d);

  GeneratorModel model;
  model.kind_ = ModelKind::Quadrature;
  model.space_dim_ = space_dim;
  model.nodes_ = radial_rule.nodes;
  model.spectrum_.resize(n);
  model.measure_.resize(n);
  for (Index k = 0; k < n; ++k) {
    const double p = radial_rule.nodes[k];
    const double e = dispersion(p);
    if (!std::isfinite(e) || e < 0.0) {
      throw Error(ErrorCode::NonPositiveSpectrum,
                  fmt::format("dispersion must be finite and >= 0, got {} at p = {}", e, p));
    }
    if (e <= kSpectralFloor) {
      throw Error(ErrorCode::NonPositiveSpectrum,
                  fmt::format("dispersion {:.3e} at node p = {:.3e} is below the spectral floor", e, p));
    }
    model.spectrum_[k] = e;
    model.measure_[k] = radial_rule.weights[k] * sphere * std::pow(p, d - 1.0);
  }
  return model;
}

void GeneratorModel::require_member(const TestVector& f) const {
  if (f.size() != dim()) {
    throw Error(ErrorCode::DimensionMismatch,
                fmt::format("test vector has {} components, model expects {}", f.size(), dim()));
  }
}

CVector GeneratorModel::to_spectral(const TestVector& f) const {
  require_member(f);
  if (kind_ == ModelKind::Matrix) return eigenvectors_.transpose().cast<Complex>() * f.components();
  return f.components().head(spectrum_.size());
}

TestVector GeneratorModel::from_spectral(const CVector& coeffs, Complex zero_slot) const {
  if (coeffs.size() != spectrum_.size()) {
    throw Error(ErrorCode::DimensionMismatch, "spectral coefficient vector has the wrong length");
  }
  if (kind_ == ModelKind::Matrix) return TestVector(eigenvectors_.cast<Complex>() * coeffs);
  CVector c(dim());
  c.head(spectrum_.size()) = coeffs;
  c[spectrum_.size()] = zero_slot;
  return TestVector(std::move(c));
}

Complex GeneratorModel::zero_mode(const TestVector& f) const {
  require_member(f);
  return kind_ == ModelKind::Quadrature ? f.components()[spectrum_.size()] : Complex{};
}

TestVector GeneratorModel::basis_vector(Index k) const {
  if (k < 0 || k >= spectrum_.size()) {
    throw Error(ErrorCode::DimensionMismatch, "spectral index out of range");
  }
  if (kind_ == ModelKind::Matrix) return TestVector::real(eigenvectors_.col(k));
  CVector c = CVector::Zero(dim());
  c[k] = 1.0 / std::sqrt(measure_[k]);
  return TestVector(std::move(c));
}

TestVector GeneratorModel::zero_slot_vector() const {
  if (kind_ != ModelKind::Quadrature) {
    throw Error(ErrorCode::InvalidArgument, "only quadrature models carry a zero slot");
  }
  CVector c = CVector::Zero(dim());
  c[spectrum_.size()] = 1.0;
  return TestVector(std::move(c));
}

TestVector apply_function(const GeneratorModel& model, const std::function<Complex(double)>& phi,
                          const TestVector& f) {
  CVector coeffs = model.to_spectral(f);
  const Vector& lambda = model.spectrum();
  for (Index k = 0; k < coeffs.size(); ++k) {
    const Complex v = phi(lambda[k]);
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
      throw Error(ErrorCode::FunctionSingularAtSpectrum,
                  fmt::format("function is not finite at spectrum point {:.17g}", lambda[k]));
    }
    coeffs[k] *= v;
  }
  Complex zero{};
  if (model.kind() == ModelKind::Quadrature) {
    // The zero slot is outside the support of the radial measure; functions
    // singular at 0 simply drop it.
    const Complex at_zero = phi(0.0);
    if (std::isfinite(at_zero.real()) && std::isfinite(at_zero.imag())) {
      zero = at_zero * model.zero_mode(f);
    }
  }
  return model.from_spectral(coeffs, zero);
}

Complex inner(const GeneratorModel& model, const TestVector& f, const TestVector& g) {
  model.require_member(f);
  model.require_member(g);
  if (model.kind() == ModelKind::Matrix) return f.components().dot(g.components());
  const Index n = model.spectral_size();
  const auto& mu = model.measure();
  return (f.components().head(n).conjugate().cwiseProduct(g.components().head(n)).array() *
          mu.array().cast<Complex>())
      .sum();
}

double symplectic(const GeneratorModel& model, const TestVector& f, const TestVector& g) {
  return inner(model, f, g).imag();
}

TestVector conjugate(const TestVector& f) { return TestVector(f.components().conjugate()); }

SpectralPair::SpectralPair(const GeneratorModel& model, const TestVector& f, const TestVector& g) {
  const CVector fs = model.to_spectral(f);
  const CVector gs = model.to_spectral(g);
  const CVector p = (fs.conjugate().cwiseProduct(gs).array() * model.measure().array().cast<Complex>()).matrix();
  re_ = p.real();
  im_ = p.imag();
  zero_ = std::conj(model.zero_mode(f)) * model.zero_mode(g);
}

Complex SpectralPair::sum(std::span<const double> phi) const {
  const std::span<const double> re(re_.data(), static_cast<std::size_t>(re_.size()));
  const std::span<const double> im(im_.data(), static_cast<std::size_t>(im_.size()));
  return {simd::dot(re, phi), simd::dot(im, phi)};
}

Complex SpectralPair::sum(std::span<const double> phi_re, std::span<const double> phi_im) const {
  const std::span<const double> re(re_.data(), static_cast<std::size_t>(re_.size()));
  const std::span<const double> im(im_.data(), static_cast<std::size_t>(im_.size()));
  return {simd::dot(re, phi_re) - simd::dot(im, phi_im), simd::dot(re, phi_im) + simd::dot(im, phi_re)};
}

Matrix read_matrix(std::istream& in) {
  long long dim = 0;
  if (!(in >> dim)) throw Error(ErrorCode::MatrixParse, "first token must be the dimension");
  if (dim <= 0) throw Error(ErrorCode::MatrixParse, "dimension must be a positive integer");
  Matrix m(dim, dim);
  std::string line;
  std::getline(in, line);  // rest of the dimension line
  for (Index r = 0; r < dim; ++r) {
    if (!std::getline(in, line)) {
      throw Error(ErrorCode::MatrixParse, fmt::format("expected {} rows, found {}", dim, r));
    }
    std::istringstream row(line);
    Index c = 0;
    double v = 0.0;
    while (row >> v) {
      if (c >= dim) throw Error(ErrorCode::MatrixParse, fmt::format("row {} has more than {} entries", r + 1, dim));
      m(r, c++) = v;
    }
    if (!row.eof()) throw Error(ErrorCode::MatrixParse, fmt::format("row {} has a non-numeric entry", r + 1));
    if (c != dim) throw Error(ErrorCode::MatrixParse, fmt::format("row {} has {} entries, expected {}", r + 1, c, dim));
  }
  return m;
}

void write_matrix(std::ostream& out, const Matrix& m) {
  out << m.rows() << '\n';
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) out << (c ? " " : "") << fmt::format("{:.17g}", m(r, c));
    out << '\n';
  }
}

}  // namespace kmsq
