#pragma once

// One-particle structures: a positive generator h with the standard complex
// conjugation, in one of two concrete forms.
//
//  * Matrix: h is a dense real symmetric positive-definite matrix. Test vectors
//    are complex vectors in the standard basis and C is entrywise conjugation,
//    which commutes with h because h is real.
//  * Quadrature: h is multiplication by a radial dispersion E(|p|) on L^2(R^d)
//    in momentum space. Test vectors are radial profiles sampled at the nodes of
//    a radial Gauss-Legendre rule, plus one extra "zero slot" carrying the
//    amplitude at p = 0 (only read by condensate terms; it carries no L^2 mass).
//
// Both forms reduce every quadratic functional to a finite spectral sum
//   <f, phi(h) g> = sum_k mu_k conj(f_k) g_k phi(lambda_k),
// where f_k are spectral coordinates (eigenbasis or node values) and mu_k the
// spectral measure (1 for matrices, radial quadrature weights otherwise).

#include <complex>
#include <cstddef>
#include <functional>
#include <iosfwd>
#include <span>

#include <Eigen/Dense>

namespace kmsq {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using CVector = Eigen::VectorXcd;
using Index = Eigen::Index;

/// Eigenvalues at or below this are rejected: a gap is required for bounded B.
inline constexpr double kSpectralFloor = 1e-12;
inline constexpr double kSymmetryTolerance = 1e-12;
/// A vector is C-real when every imaginary part is at most this.
inline constexpr double kRealTolerance = 1e-14;

enum class ModelKind { Matrix, Quadrature };

struct QuadratureRule {
  Vector nodes;
  Vector weights;
};

/// n-point Gauss-Legendre rule on [lo, hi], nodes ascending.
QuadratureRule gauss_legendre(std::size_t n, double lo, double hi);

class TestVector {
 public:
  TestVector() = default;
  explicit TestVector(CVector components) : c_(std::move(components)) {}

  static TestVector real(const Vector& v) { return TestVector(v.cast<Complex>()); }
  static TestVector zeros(Index n) { return TestVector(CVector::Zero(n)); }

  const CVector& components() const { return c_; }
  Index size() const { return c_.size(); }

  /// Membership in the fixed-point space of C.
  bool is_real() const;
  Vector real_part() const { return c_.real(); }

  TestVector operator+(const TestVector& o) const { return TestVector(c_ + o.c_); }
  TestVector operator-(const TestVector& o) const { return TestVector(c_ - o.c_); }
  TestVector operator-() const { return TestVector(-c_); }
  friend TestVector operator*(Complex a, const TestVector& v) { return TestVector(a * v.c_); }

 private:
  CVector c_;
};

class GeneratorModel {
 public:
  /// Radial momentum-space model: h = E(|p|) on L^2(R^d).
  static GeneratorModel from_dispersion(int space_dim, const std::function<double(double)>& dispersion,
                                        QuadratureRule radial_rule);

  ModelKind kind() const { return kind_; }

  /// Length of TestVector components for this model.
  Index dim() const { return kind_ == ModelKind::Matrix ? spectrum_.size() : spectrum_.size() + 1; }
  Index spectral_size() const { return spectrum_.size(); }

  /// Eigenvalues (ascending) or node energies E(p_k).
  const Vector& spectrum() const { return spectrum_; }
  const Vector& measure() const { return measure_; }
  double min_eigenvalue() const { return spectrum_.minCoeff(); }

  // Matrix kind only.
  const Matrix& eigenvectors() const { return eigenvectors_; }
  const Matrix& h_matrix() const { return h_matrix_; }

  // Quadrature kind only.
  int space_dim() const { return space_dim_; }
  const Vector& nodes() const { return nodes_; }

  CVector to_spectral(const TestVector& f) const;
  TestVector from_spectral(const CVector& coeffs, Complex zero_slot = {}) const;

  /// Amplitude at p = 0 (Quadrature kind); zero for matrix models.
  Complex zero_mode(const TestVector& f) const;

  /// Unit vector supported on spectral atom k.
  TestVector basis_vector(Index k) const;
  /// Vector that only carries a unit amplitude in the zero slot (Quadrature kind).
  TestVector zero_slot_vector() const;

  void require_member(const TestVector& f) const;

 private:
  friend GeneratorModel eigendecompose(const Matrix& h);

  ModelKind kind_ = ModelKind::Matrix;
  Vector spectrum_;
  Vector measure_;
  Matrix eigenvectors_;
  Matrix h_matrix_;
  int space_dim_ = 0;
  Vector nodes_;
};

/// Validates symmetry and positivity and diagonalizes h.
GeneratorModel eigendecompose(const Matrix& h);

/// phi(h) f through the spectral resolution.
TestVector apply_function(const GeneratorModel& model, const std::function<Complex(double)>& phi,
                          const TestVector& f);

/// Hermitian product, conjugate-linear in the first slot.
Complex inner(const GeneratorModel& model, const TestVector& f, const TestVector& g);

/// sigma(f, g) = Im <f, g>.
double symplectic(const GeneratorModel& model, const TestVector& f, const TestVector& g);

/// Entrywise complex conjugation.
TestVector conjugate(const TestVector& f);

/// Precomputed products mu_k conj(f_k) g_k for repeated kernel evaluation.
class SpectralPair {
 public:
  SpectralPair(const GeneratorModel& model, const TestVector& f, const TestVector& g);

  /// sum_k mu_k conj(f_k) g_k phi_k
  Complex sum(std::span<const double> phi) const;
  Complex sum(std::span<const double> phi_re, std::span<const double> phi_im) const;

  /// conj(f(0)) g(0) from the zero slot (zero for matrix models).
  Complex zero_mode_product() const { return zero_; }

  Index size() const { return re_.size(); }

 private:
  Vector re_;
  Vector im_;
  Complex zero_;
};

/// Reads `dim` followed by dim rows of dim reals. Shape problems throw MatrixParse.
Matrix read_matrix(std::istream& in);
void write_matrix(std::ostream& out, const Matrix& m);

}  // namespace kmsq
