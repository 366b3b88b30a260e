#pragma once

// Quasi-free states on the Weyl algebra over a one-particle structure, their
// real-time and Euclidean Green functions, and the identities they satisfy.
//
// Conventions used throughout:
//   omega(W_f)   = exp(-B(f,f)/4),      B(f,g) = <f, B g>
//   B            = (1 + e^{-beta h}) / (1 - e^{-beta h})   (identity when beta = inf)
//   F(f,g;t)     = Re B(f, e^{ith} g) + i Im <f, e^{ith} g>
//   S(f,g;s)     = <f, e^{-sh}(1-e^{-beta h})^{-1} g> + <g, e^{-(beta-s)h}(1-e^{-beta h})^{-1} f>
//   S_0(f,g;s)   = <f, e^{-sh} g>                           (ground state)
// The second term of S is the analytic continuation of (1/2)<g,(B-1)e^{-ith}f>,
// evaluated in the form above so nothing overflows for large beta*lambda.

#include <limits>
#include <memory>
#include <span>
#include <vector>

#include "kmsq/spectral.hpp"

namespace kmsq {

inline constexpr double kGroundState = std::numeric_limits<double>::infinity();

/// Which operator plays the role of B. The corrupted variant replaces
/// B(lambda) by 1 + e^{-beta lambda}; it exists as a negative control for the
/// verification suite and never describes a KMS state.
enum class BOperator { Kms, CorruptedNegativeControl };

class ThermalContext {
 public:
  ThermalContext(GeneratorModel model, double beta, double condensate = 0.0,
                 BOperator b_operator = BOperator::Kms);

  const GeneratorModel& model() const { return *model_; }
  double beta() const { return beta_; }
  bool is_ground_state() const { return beta_ == kGroundState; }
  double condensate() const { return condensate_; }
  BOperator b_operator() const { return b_operator_; }

  /// B(lambda) >= 1.
  double b_value(double lambda) const;
  /// (B(lambda) + 1) / 2
  double plus_part(double lambda) const;
  /// (B(lambda) - 1) e^{s lambda} / 2, for 0 <= s <= beta.
  double minus_part(double lambda, double s) const;

  /// B(lambda_k) for every spectral atom.
  const Vector& b_values() const { return b_values_; }

 private:
  std::shared_ptr<const GeneratorModel> model_;
  double beta_;
  double condensate_;
  BOperator b_operator_;
  Vector b_values_;
};

struct WordEntry {
  TestVector f;
  double s = 0.0;
};

/// Ordered (test vector, Euclidean time) pairs with non-decreasing times.
using EuclideanWord = std::vector<WordEntry>;

/// The quadratic form B(f,g), including the condensate contribution.
Complex b_form(const ThermalContext& ctx, const TestVector& f, const TestVector& g);

double state_eval(const ThermalContext& ctx, const TestVector& f);

Complex F_kernel(const ThermalContext& ctx, const TestVector& f, const TestVector& g, double t);

Complex green2_real(const ThermalContext& ctx, const TestVector& f, const TestVector& g, double t);

/// Euclidean two-point kernel. For real f, g and finite beta, s is reduced
/// modulo beta; otherwise s must lie in [0, beta] (or [0, inf) in the ground state).
Complex S_kernel(const ThermalContext& ctx, const TestVector& f, const TestVector& g, double s);

Complex green2_euclid(const ThermalContext& ctx, const TestVector& f, const TestVector& g, double s);

/// Precomputed spectral data for repeated evaluation of F and S on one pair.
class TwoPointKernel {
 public:
  TwoPointKernel(const ThermalContext& ctx, const TestVector& f, const TestVector& g);

  Complex S(double s) const;
  Complex F(double t) const;

 private:
  const ThermalContext* ctx_;
  SpectralPair fg_;
  SpectralPair gf_;
  bool real_;
};

/// Multi-time Euclidean Green function. Letters sharing a time are first
/// merged, W_f W_g = e^{-i sigma(f,g)/2} W_{f+g}; the product formula is then
/// applied over strictly ordered pairs.
Complex multi_green_euclid(const ThermalContext& ctx, const EuclideanWord& word);

/// The product formula applied to the word as given, without merging ties.
Complex euclid_product_form(const ThermalContext& ctx, const EuclideanWord& word);

/// Validates ordering and the time window of a word.
void require_euclidean_region(const ThermalContext& ctx, const EuclideanWord& word);

/// Fourier coefficients of e^{-sp} + e^{-(beta-s)p} on the circle of length beta.
double fourier_coeff(long n, double p, double beta);

/// sum_{|n| <= N} c_n(p) e^{2 pi i n s / beta}
double fourier_series_kernel(double p, double s, double beta, long n_modes);

/// Truncated Fourier series of S(f,f;s) for real f.
double fourier_series_S(const ThermalContext& ctx, const TestVector& f, double s, long n_modes);

/// Strip kernel (1/2beta) sin(pi s/beta) / (cosh(pi rho/beta) - cos(pi s/beta)).
double kernel_P(double rho, double s, double beta);

/// S(f,g;s) from real-time data: integral of P(rho,s)F(f,g;rho) + P(rho,beta-s)F(g,f;-rho).
/// Requires 0 < s < beta.
Complex quadrature_S(const ThermalContext& ctx, const TestVector& f, const TestVector& g, double s);

/// B as a matrix, for matrix models.
Matrix thermal_B(const GeneratorModel& model, double beta);

/// Inverts B = coth(beta h / 2): h = -(1/beta) log((B-1)(B+1)^{-1}).
GeneratorModel recover_generator(const Matrix& b, double beta);

// ---------------------------------------------------------------------------
// Structural checks. Each returns a measured residual or margin; pass/fail is
// decided by the caller against its tolerance.

struct ReflectionResult {
  double reflection = 0.0;  // max |S(f,g;s) - S(g,f;beta-s)|
  double symmetry = 0.0;    // max |S(f,g;s) - S(g,f;s)|, real pairs only (else 0)
};

ReflectionResult kms_reflection_check(const ThermalContext& ctx, const TestVector& f,
                                      const TestVector& g, std::span<const double> s_grid);

struct GramResult {
  double min_eigenvalue = 0.0;
  double norm = 0.0;         // spectral norm of the Hermitian part
  double hermiticity = 0.0;  // max |M - M^H|
  Index size = 0;
};

/// Smallest eigenvalue of a Hermitian matrix, with norm and asymmetry.
GramResult gram_spectrum(const Eigen::MatrixXcd& m);

/// M_kl = S(f_k, f_l; s_k + s_l) with every s_k in [0, beta/2].
GramResult os_gram_check(const ThermalContext& ctx, const EuclideanWord& family);

/// M_kl = S(f_k, f_l; |s_k - s_l|) for real f_k.
GramResult stationary_gram_check(const ThermalContext& ctx, const EuclideanWord& family);

/// Reflection of a word: letters reversed, f -> -f (W_f^* = W_{-f}), s -> -s.
EuclideanWord reflect(const EuclideanWord& word);

/// M_kl = G^E(reflect(word_k) ++ word_l) for words with times in [0, beta/2].
GramResult weyl_os_check(const ThermalContext& ctx, const std::vector<EuclideanWord>& words);

/// |G^E(word + shift) - G^E(word)|
double eg1_shift_residual(const ThermalContext& ctx, const EuclideanWord& word, double shift);

/// For a word with at least one tie: |product form as given - merged evaluation|.
double eg1_merge_residual(const ThermalContext& ctx, const EuclideanWord& word);

/// Cyclic KMS identity for letters W_0..W_n and times 0 <= s_1 <= ... <= s_n <= beta.
double eg4_cyclic_check(const ThermalContext& ctx, const std::vector<TestVector>& letters,
                        std::span<const double> times);

}  // namespace kmsq
