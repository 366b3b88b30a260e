#include "kmsq/models.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "kmsq/digest.hpp"
#include "kmsq/error.hpp"
#include "kmsq/process.hpp"
#include "kmsq/sampler.hpp"

namespace kmsq {
namespace {

std::string num(double x) { return fmt::format("{:.17g}", x); }

void require_positive(double x, const char* what) {
  if (!(x > 0.0) || !std::isfinite(x)) {
    throw Error(ErrorCode::InvalidArgument, fmt::format("{} must be finite and > 0, got {}", what, x));
  }
}

BuiltModel finish(std::string name, std::string variant, ThermalContext ctx, ParameterList params,
                  IndexWeight weight) {
  std::string hash = model_hash(variant, params, ctx.beta(), ctx.b_operator());
  return BuiltModel{std::move(name), std::move(variant), std::move(ctx), std::move(params), weight, 0.5, 2.0,
                    std::move(hash)};
}

}  // namespace

std::string_view to_string(IndexWeight w) {
  switch (w) {
    case IndexWeight::None: return "none";
    case IndexWeight::Field: return "field";
    case IndexWeight::Momentum: return "momentum";
  }
  return "none";
}

IndexWeight parse_index_weight(std::string_view s) {
  if (s == "none" || s == "raw") return IndexWeight::None;
  if (s == "field" || s == "weighted") return IndexWeight::Field;
  if (s == "momentum") return IndexWeight::Momentum;
  throw Error(ErrorCode::InvalidArgument, fmt::format("unknown index weight '{}'", s));
}

TestVector apply_index_weight(const GeneratorModel& model, IndexWeight weight, const TestVector& f) {
  switch (weight) {
    case IndexWeight::None: return f;
    case IndexWeight::Field:
      return apply_function(model, [](double l) { return Complex(1.0 / std::sqrt(l)); }, f);
    case IndexWeight::Momentum:
      return apply_function(model, [](double l) { return Complex(std::sqrt(l)); }, f);
  }
  return f;
}

std::string model_hash(const std::string& variant, const ParameterList& parameters, double beta,
                       BOperator b_operator) {
  std::string canonical = "kmsq-model\nvariant=" + variant + "\n";
  for (const auto& [k, v] : parameters) canonical += k + "=" + v + "\n";
  canonical += "beta=" + (std::isfinite(beta) ? num(beta) : std::string("inf")) + "\n";
  canonical += std::string("b_operator=") + (b_operator == BOperator::Kms ? "kms" : "corrupted") + "\n";
  return sha256_hex(canonical);
}

TestVector gaussian_profile(const GeneratorModel& model, double amplitude, double a) {
  if (model.kind() != ModelKind::Quadrature) {
    throw Error(ErrorCode::InvalidArgument, "Gaussian profiles live on quadrature models");
  }
  require_positive(a, "Gaussian width parameter");
  const double d = model.space_dim();
  const double prefactor = amplitude * std::pow(2.0 * a, -0.5 * d);
  const Vector& p = model.nodes();
  CVector c(model.dim());
  for (Index k = 0; k < p.size(); ++k) c[k] = prefactor * std::exp(-p[k] * p[k] / (4.0 * a));
  c[p.size()] = prefactor;
  return TestVector(std::move(c));
}

double gaussian_cutoff(double a_max) {
  require_positive(a_max, "width bound");
  return std::sqrt(2.0 * a_max * 40.0);
}

BuiltModel build_minkowski(const MinkowskiParams& p, double beta) {
  require_positive(p.mass, "mass");
  if (p.space_dim < 1) throw Error(ErrorCode::InvalidArgument, "space dimension must be >= 1");
  if (p.nodes < 2) throw Error(ErrorCode::InvalidArgument, "need at least two quadrature nodes");
  const double m = p.mass;
  auto model = GeneratorModel::from_dispersion(
      p.space_dim, [m](double k) { return std::sqrt(k * k + m * m); },
      gauss_legendre(p.nodes, 0.0, gaussian_cutoff(p.width_max)));
  ParameterList params{{"space_dim", std::to_string(p.space_dim)},
                       {"mass", num(p.mass)},
                       {"nodes", std::to_string(p.nodes)},
                       {"width_max", num(p.width_max)},
                       {"weight", std::string(to_string(p.weight))}};
  auto out = finish("minkowski", "minkowski", ThermalContext(std::move(model), beta), std::move(params), p.weight);
  out.width_max = p.width_max;
  out.width_min = std::min(out.width_min, p.width_max);
  return out;
}

BuiltModel build_bose_gas(const BoseParams& p, double beta) {
  if (p.space_dim < 1) throw Error(ErrorCode::InvalidArgument, "space dimension must be >= 1");
  if (!(p.condensate >= 0.0)) throw Error(ErrorCode::InvalidArgument, "condensate constant must be >= 0");
  if (p.nodes < 2) throw Error(ErrorCode::InvalidArgument, "need at least two quadrature nodes");
  const bool standard = p.dispersion == BoseDispersion::Standard;
  const double gap = standard ? p.mu : p.mass;
  // Near p = 0 the thermal factor behaves like p^{-nu} with nu = 2 (standard)
  // or 1 (semirelativistic); against p^{d-1} dp it is integrable iff d > nu.
  const int nu = standard ? 2 : 1;
  if (gap < 0.0 || !std::isfinite(gap)) {
    throw Error(ErrorCode::GaplessDispersion, fmt::format("dispersion gap must be >= 0, got {}", gap));
  }
  if (gap == 0.0) {
    if (!p.critical) {
      throw Error(ErrorCode::GaplessDispersion,
                  "zero gap needs the critical (condensate) variant; set critical = true");
    }
    if (p.space_dim <= nu) {
      throw Error(ErrorCode::GaplessDispersion,
                  fmt::format("gapless dispersion is not integrable in d = {} (needs d > {})", p.space_dim, nu));
    }
  } else if (p.critical) {
    throw Error(ErrorCode::InvalidArgument, "the critical variant requires a zero gap");
  }
  std::function<double(double)> disp;
  if (standard) {
    disp = [mu = p.mu](double k) { return k * k + mu; };
  } else {
    disp = [m = p.mass](double k) { return std::sqrt(k * k + m * m); };
  }
  auto model = GeneratorModel::from_dispersion(p.space_dim, disp, gauss_legendre(p.nodes, 0.0, gaussian_cutoff(p.width_max)));
  ParameterList params{{"dispersion", standard ? "standard" : "semirelativistic"},
                       {"space_dim", std::to_string(p.space_dim)},
                       {standard ? "mu" : "mass", num(gap)},
                       {"condensate", num(p.condensate)},
                       {"critical", p.critical ? "true" : "false"},
                       {"nodes", std::to_string(p.nodes)},
                       {"width_max", num(p.width_max)}};
  auto out = finish(p.critical ? "bose-critical" : "bose", "bose",
                    ThermalContext(std::move(model), beta, p.condensate), std::move(params), IndexWeight::None);
  out.width_max = p.width_max;
  out.width_min = std::min(out.width_min, p.width_max);
  return out;
}

Matrix torus_laplacian(int side, int space_dim, double kappa) {
  if (side < 1 || space_dim < 1) throw Error(ErrorCode::InvalidArgument, "lattice side and dimension must be >= 1");
  Index sites = 1;
  for (int i = 0; i < space_dim; ++i) sites *= side;
  Matrix a = Matrix::Zero(sites, sites);
  std::vector<int> idx(static_cast<std::size_t>(space_dim));
  for (Index j = 0; j < sites; ++j) {
    Index rest = j;
    for (int i = space_dim - 1; i >= 0; --i) {
      idx[static_cast<std::size_t>(i)] = static_cast<int>(rest % side);
      rest /= side;
    }
    for (int axis = 0; axis < space_dim; ++axis) {
      for (int step : {-1, 1}) {
        auto n = idx;
        n[static_cast<std::size_t>(axis)] = (n[static_cast<std::size_t>(axis)] + step + side) % side;
        Index k = 0;
        for (int i = 0; i < space_dim; ++i) k = k * side + n[static_cast<std::size_t>(i)];
        a(j, j) += kappa;
        a(j, k) -= kappa;
      }
    }
  }
  return a;
}

Vector crystal_spectrum_dft(int side, int space_dim, double kappa) {
  Index sites = 1;
  for (int i = 0; i < space_dim; ++i) sites *= side;
  Vector out(sites);
  for (Index j = 0; j < sites; ++j) {
    Index rest = j;
    double e = 0.5;
    for (int i = 0; i < space_dim; ++i) {
      const double k = static_cast<double>(rest % side);
      rest /= side;
      e += kappa * 2.0 * (1.0 - std::cos(2.0 * std::numbers::pi * k / side));
    }
    out[j] = e;
  }
  std::sort(out.begin(), out.end());
  return out;
}

BuiltModel build_crystal(const CrystalParams& p, double beta) {
  Matrix a;
  ParameterList params{{"side", std::to_string(p.side)}, {"space_dim", std::to_string(p.space_dim)}};
  if (p.coupling) {
    a = *p.coupling;
    Index sites = 1;
    for (int i = 0; i < p.space_dim; ++i) sites *= p.side;
    if (a.rows() != sites || a.cols() != sites) {
      throw Error(ErrorCode::DimensionMismatch,
                  fmt::format("coupling must be {0}x{0} for a side-{1} lattice in d = {2}", sites, p.side, p.space_dim));
    }
    std::string flat;
    for (Index i = 0; i < a.rows(); ++i) {
      for (Index j = 0; j < a.cols(); ++j) flat += (flat.empty() ? "" : " ") + num(a(i, j));
    }
    params.emplace_back("coupling", flat);
  } else {
    a = torus_laplacian(p.side, p.space_dim, p.kappa);
    params.emplace_back("kappa", num(p.kappa));
  }
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  if ((a - a.transpose()).cwiseAbs().maxCoeff() > kSymmetryTolerance * scale) {
    throw Error(ErrorCode::NonPSDCoupling, "coupling matrix is not symmetric");
  }
  if (a.size() > 0) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(a, Eigen::EigenvaluesOnly);
    const double lo = solver.eigenvalues().minCoeff();
    if (lo < -1e-12 * scale) {
      throw Error(ErrorCode::NonPSDCoupling,
                  fmt::format("coupling must be positive semi-definite; smallest eigenvalue is {:.6g}", lo));
    }
  }
  Matrix h = 0.5 * Matrix::Identity(a.rows(), a.cols()) + 0.5 * (a + a.transpose());
  const bool free = a.cwiseAbs().maxCoeff() == 0.0;
  return finish(free ? "crystal-free" : "crystal-coupled", "crystal", ThermalContext(eigendecompose(h), beta),
                std::move(params), IndexWeight::None);
}

double rindler_potential(double x, double mass) { return std::exp(2.0 * x) * mass * mass; }

Matrix rindler_operator(const RindlerParams& p) {
  require_positive(p.mass, "mass");
  require_positive(p.half_width, "interval half-width");
  if (p.grid < 3) throw Error(ErrorCode::InvalidArgument, "Rindler grid needs at least 3 points");
  const int n = p.grid;
  const double dx = 2.0 * p.half_width / (n + 1);
  const double off = -1.0 / (dx * dx);
  Matrix a = Matrix::Zero(n, n);
  for (int j = 0; j < n; ++j) {
    const double x = -p.half_width + (j + 1) * dx;
    a(j, j) = 2.0 / (dx * dx) + rindler_potential(x, p.mass);
    if (j + 1 < n) a(j, j + 1) = a(j + 1, j) = off;
  }
  return a;
}

BuiltModel build_rindler(const RindlerParams& p, std::optional<double> beta) {
  const Matrix a = rindler_operator(p);
  Eigen::SelfAdjointEigenSolver<Matrix> solver(a);
  if (solver.eigenvalues().minCoeff() <= 0.0) {
    throw Error(ErrorCode::NonPositiveSpectrum, "discretised Rindler operator is not positive");
  }
  const Matrix& q = solver.eigenvectors();
  const Matrix h = q * solver.eigenvalues().cwiseSqrt().asDiagonal() * q.transpose();
  ParameterList params{{"mass", num(p.mass)},
                       {"half_width", num(p.half_width)},
                       {"grid", std::to_string(p.grid)},
                       {"weight", std::string(to_string(p.weight))}};
  return finish("rindler", "rindler", ThermalContext(eigendecompose(0.5 * (h + h.transpose())), beta.value_or(2.0 * std::numbers::pi)),
                std::move(params), p.weight);
}

BuiltModel build_matrix_model(const Matrix& h, double beta, const std::string& source) {
  std::string flat;
  for (Index i = 0; i < h.rows(); ++i) {
    for (Index j = 0; j < h.cols(); ++j) flat += (flat.empty() ? "" : " ") + num(h(i, j));
  }
  ParameterList params{{"dim", std::to_string(h.rows())}, {"h", flat}};
  (void)source;
  return finish("matrix", "matrix", ThermalContext(eigendecompose(h), beta), std::move(params), IndexWeight::None);
}

std::vector<BuiltModel> catalog() {
  std::vector<BuiltModel> out;
  out.push_back(build_crystal({2, 1, 0.0, std::nullopt}, 1.0));
  out.push_back(build_crystal({4, 2, 0.25, std::nullopt}, 2.0));
  out.push_back(build_rindler({}));
  out.push_back(build_minkowski({}, 1.0));
  out.push_back(build_bose_gas({}, 2.0));
  BoseParams critical;
  critical.mu = 0.0;
  critical.critical = true;
  critical.condensate = 0.5;
  out.push_back(build_bose_gas(critical, 2.0));
  return out;
}

TestVector random_real_probe(const BuiltModel& m, std::mt19937_64& gen) {
  const GeneratorModel& model = m.ctx.model();
  std::normal_distribution<double> normal;
  if (model.kind() == ModelKind::Matrix) {
    Vector v(model.dim());
    for (Index i = 0; i < v.size(); ++i) v[i] = normal(gen);
    v /= std::sqrt(static_cast<double>(v.size()));
    return apply_index_weight(model, m.weight, TestVector::real(v));
  }
  std::uniform_real_distribution<double> amp(-1.0, 1.0);
  std::uniform_real_distribution<double> width(m.width_min, m.width_max);
  TestVector f = gaussian_profile(model, amp(gen), width(gen));
  f = f + gaussian_profile(model, amp(gen), width(gen));
  return apply_index_weight(model, m.weight, f);
}

TestVector random_complex_probe(const BuiltModel& m, std::mt19937_64& gen) {
  const TestVector re = random_real_probe(m, gen);
  const TestVector im = random_real_probe(m, gen);
  return re + Complex(0.0, 1.0) * im;
}

Matrix random_generator(int dim, double lo, double hi, std::mt19937_64& gen) {
  std::normal_distribution<double> normal;
  Matrix g(dim, dim);
  for (Index i = 0; i < g.size(); ++i) g.data()[i] = normal(gen);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  // Fix column signs by the diagonal of R so Q is Haar distributed.
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < dim; ++j) {
    if (r(j, j) < 0.0) q.col(j) *= -1.0;
  }
  std::uniform_real_distribution<double> u(lo, hi);
  Vector lambda(dim);
  for (int j = 0; j < dim; ++j) lambda[j] = u(gen);
  Matrix h = q * lambda.asDiagonal() * q.transpose();
  return 0.5 * (h + h.transpose());
}

GibbsReweightResult gibbs_reweight_check(const Matrix& coupling, double beta, double lag, std::size_t n_samples,
                                         long n_modes, std::uint64_t seed) {
  const Index sites = coupling.rows();
  if (sites == 0 || coupling.cols() != sites) {
    throw Error(ErrorCode::DimensionMismatch, "coupling must be a non-empty square matrix");
  }
  if (n_samples == 0) throw Error(ErrorCode::EmptyEnsemble, "reweighting needs samples");
  const CovarianceSpec decoupled(ThermalContext(eigendecompose(0.5 * Matrix::Identity(sites, sites)), beta));
  const auto n_count = static_cast<std::size_t>(n_modes + 1);
  const double omega = 2.0 * std::numbers::pi / beta;

  std::vector<double> cosines(n_count);
  for (std::size_t n = 0; n < n_count; ++n) cosines[n] = std::cos(omega * static_cast<double>(n) * lag);

  // Weighted sums for the ratio estimator of E[w y] / E[w].
  const Index pairs = sites * sites;
  std::vector<double> log_w(n_samples);
  std::vector<Vector> y(n_samples, Vector(pairs));
  for (std::size_t i = 0; i < n_samples; ++i) {
    const ModeDraw draw = draw_modes(decoupled, i, n_modes, seed);
    // Eigenvectors of I/2 are the identity up to order and sign; map back to sites.
    const Matrix& q = decoupled.model().eigenvectors();
    Matrix a(sites, static_cast<Index>(n_count)), b(sites, static_cast<Index>(n_count));
    for (Index k = 0; k < sites; ++k) {
      for (std::size_t n = 0; n < n_count; ++n) {
        a(k, static_cast<Index>(n)) = draw.a[static_cast<std::size_t>(k) * n_count + n];
        b(k, static_cast<Index>(n)) = draw.b[static_cast<std::size_t>(k) * n_count + n];
      }
    }
    a = q * a;
    b = q * b;
    // int_0^beta x_j x_k d tau by Parseval.
    Matrix gram = beta * a.col(0) * a.col(0).transpose();
    for (std::size_t n = 1; n < n_count; ++n) {
      const auto c = static_cast<Index>(n);
      gram += 0.5 * beta * (a.col(c) * a.col(c).transpose() + b.col(c) * b.col(c).transpose());
    }
    log_w[i] = -(coupling.cwiseProduct(gram)).sum();
    const Vector x0 = a.rowwise().sum();
    Vector xt = Vector::Zero(sites);
    for (std::size_t n = 0; n < n_count; ++n) {
      const auto c = static_cast<Index>(n);
      xt += cosines[n] * a.col(c) + std::sin(omega * static_cast<double>(n) * lag) * b.col(c);
    }
    for (Index j = 0; j < sites; ++j) {
      for (Index k = 0; k < sites; ++k) y[i][j * sites + k] = x0[j] * xt[k];
    }
  }
  const double shift = *std::max_element(log_w.begin(), log_w.end());
  std::vector<double> w(n_samples);
  double w_sum = 0.0, w2_sum = 0.0;
  for (std::size_t i = 0; i < n_samples; ++i) {
    w[i] = std::exp(log_w[i] - shift);
    w_sum += w[i];
    w2_sum += w[i] * w[i];
  }
  GibbsReweightResult out;
  out.effective_samples = w_sum * w_sum / w2_sum;
  out.empirical = Matrix::Zero(sites, sites);
  out.standard_error = Matrix::Zero(sites, sites);
  for (Index p = 0; p < pairs; ++p) {
    double est = 0.0;
    for (std::size_t i = 0; i < n_samples; ++i) est += w[i] * y[i][p];
    est /= w_sum;
    double var = 0.0;
    for (std::size_t i = 0; i < n_samples; ++i) {
      const double d = w[i] * (y[i][p] - est);
      var += d * d;
    }
    out.empirical(p / sites, p % sites) = est;
    out.standard_error(p / sites, p % sites) = std::sqrt(var) / w_sum;
  }

  // Mode n carries precision v_n^{-1} I + 2 kappa_n beta A, kappa_0 = 1, kappa_n = 1/2.
  const Matrix sym = 0.5 * (coupling + coupling.transpose());
  out.exact_truncated = Matrix::Zero(sites, sites);
  for (std::size_t n = 0; n < n_count; ++n) {
    const double sd = mode_std(0.5, beta, static_cast<long>(n));
    const double kappa = n == 0 ? 1.0 : 0.5;
    const Matrix precision = Matrix::Identity(sites, sites) / (sd * sd) + 2.0 * kappa * beta * sym;
    out.exact_truncated += cosines[n] * precision.inverse();
  }

  Eigen::SelfAdjointEigenSolver<Matrix> solver(0.25 * Matrix::Identity(sites, sites) + sym);
  const Vector om = solver.eigenvalues().cwiseSqrt();
  const double d = circle_distance(0.0, lag, beta);
  Vector limit(sites);
  for (Index k = 0; k < sites; ++k) {
    const double l = om[k];
    limit[k] = 0.5 / (2.0 * l) * (std::exp(-d * l) + std::exp(-(beta - d) * l)) / -std::expm1(-beta * l);
  }
  out.exact_limit = solver.eigenvectors() * limit.asDiagonal() * solver.eigenvectors().transpose();
  out.coupled_kernel = covariance(CovarianceSpec(ThermalContext(eigendecompose(0.5 * Matrix::Identity(sites, sites) + sym), beta)), d) * 0.5;
  return out;
}

}  // namespace kmsq
