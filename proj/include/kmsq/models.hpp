#pragma once

// Example systems compiled into thermal contexts: free fields in flat space,
// Bose matter with optional condensate, lattice harmonic crystals and the
// Rindler wedge boost generator.

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "kmsq/quasifree.hpp"

namespace kmsq {

/// Index map applied to test functions before they reach the state:
/// Field f -> h^{-1/2} f, Momentum f -> h^{1/2} f.
enum class IndexWeight { None, Field, Momentum };

std::string_view to_string(IndexWeight w);
IndexWeight parse_index_weight(std::string_view s);

TestVector apply_index_weight(const GeneratorModel& model, IndexWeight weight, const TestVector& f);

using ParameterList = std::vector<std::pair<std::string, std::string>>;

struct BuiltModel {
  std::string name;
  std::string variant;
  ThermalContext ctx;
  ParameterList parameters;  // canonical, in emission order
  IndexWeight weight = IndexWeight::None;
  // Width range of the Gaussian probe profiles (quadrature models).
  double width_min = 0.5;
  double width_max = 2.0;
  std::string hash;
};

/// SHA-256 over the canonical parameter list, beta and the B operator.
std::string model_hash(const std::string& variant, const ParameterList& parameters, double beta,
                       BOperator b_operator);

// ---------------------------------------------------------------------------
// Momentum-space models

/// Radial transform of amplitude * exp(-a |x|^2) in d dimensions:
/// amplitude (2a)^{-d/2} exp(-p^2 / 4a), unitary convention. The zero slot
/// carries the value at p = 0.
TestVector gaussian_profile(const GeneratorModel& model, double amplitude, double a);

/// Cutoff where a Gaussian profile of width up to a_max has squared
/// transform below e^{-40} of its peak.
double gaussian_cutoff(double a_max);

struct MinkowskiParams {
  int space_dim = 3;
  double mass = 1.0;
  std::size_t nodes = 256;
  double width_max = 2.0;
  IndexWeight weight = IndexWeight::Field;
};

BuiltModel build_minkowski(const MinkowskiParams& p, double beta);

enum class BoseDispersion { Standard, Semirelativistic };

struct BoseParams {
  BoseDispersion dispersion = BoseDispersion::Standard;
  int space_dim = 3;
  double mu = 0.5;    // standard: E = p^2 + mu
  double mass = 1.0;  // semirelativistic: E = sqrt(p^2 + m^2)
  double condensate = 0.0;
  // Allows a gapless dispersion (mu = 0 or m = 0) when the thermal factor
  // stays integrable at p = 0.
  bool critical = false;
  std::size_t nodes = 256;
  double width_max = 2.0;
};

BuiltModel build_bose_gas(const BoseParams& p, double beta);

// ---------------------------------------------------------------------------
// Matrix models

/// kappa times the negative discrete Laplacian on the periodic L^d torus,
/// sites in lexicographic order.
Matrix torus_laplacian(int side, int space_dim, double kappa);

/// Eigenvalues 1/2 + kappa sum_i 2(1 - cos(2 pi k_i / L)) from the Fourier modes
/// of the torus.
Vector crystal_spectrum_dft(int side, int space_dim, double kappa);

struct CrystalParams {
  int side = 2;
  int space_dim = 1;
  double kappa = 0.0;
  std::optional<Matrix> coupling;  // overrides kappa when set
};

BuiltModel build_crystal(const CrystalParams& p, double beta);

double rindler_potential(double x, double mass);

struct RindlerParams {
  double mass = 1.0;
  double half_width = 6.0;
  int grid = 48;
  IndexWeight weight = IndexWeight::Field;
};

/// Finite-difference A = -d^2/dx^2 + e^{2x} m^2 on [-L, L], Dirichlet ends.
Matrix rindler_operator(const RindlerParams& p);

/// Boost generator h = A^{1/2}; beta defaults to 2 pi.
BuiltModel build_rindler(const RindlerParams& p, std::optional<double> beta = std::nullopt);

BuiltModel build_matrix_model(const Matrix& h, double beta, const std::string& source);

// ---------------------------------------------------------------------------

/// The models every invariant suite runs on.
std::vector<BuiltModel> catalog();

/// Random C-real probe vector for a model (Gaussian profiles for
/// quadrature models), with the model's index weight applied.
TestVector random_real_probe(const BuiltModel& m, std::mt19937_64& gen);

/// Random probe with independent real and imaginary parts.
TestVector random_complex_probe(const BuiltModel& m, std::mt19937_64& gen);

/// Random real symmetric generator Q diag(lambda) Q^T with Haar-random
/// orthogonal Q and eigenvalues uniform in [lo, hi].
Matrix random_generator(int dim, double lo, double hi, std::mt19937_64& gen);

// ---------------------------------------------------------------------------
// Finite-volume reweighting of decoupled periodic Ornstein-Uhlenbeck paths by
// exp(-int sum_{jk} A_jk x_j x_k d tau).

struct GibbsReweightResult {
  Matrix empirical;        // weighted E x_j(0) x_k(lag)
  Matrix standard_error;   // delta-method errors of the ratio estimator
  Matrix exact_truncated;  // same Gaussian reweighting, Fourier modes |n| <= N
  Matrix exact_limit;      // (1/2)(2 Omega)^{-1} R_Omega(lag),  Omega = (I/4 + A)^{1/2}
  Matrix coupled_kernel;   // (1/2) R_{h_A}(lag),  h_A = I/2 + A
  double effective_samples = 0.0;
};

GibbsReweightResult gibbs_reweight_check(const Matrix& coupling, double beta, double lag, std::size_t n_samples,
                                         long n_modes, std::uint64_t seed);

}  // namespace kmsq
