#include "kmsq/suite.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

#include <fmt/format.h>

#include "kmsq/error.hpp"
#include "kmsq/process.hpp"

namespace kmsq {

Tolerances::Tolerances()
    : values_{{"kms_reflection", 1e-10}, {"kms_symmetry", 1e-10}, {"os_gram", 1e-10},
              {"stationary_gram", 1e-10}, {"weyl_os", 1e-10},     {"central_identity", 1e-10},
              {"eg1_shift", 1e-12},      {"eg1_merge", 1e-12},    {"eg4_cyclic", 1e-10},
              {"markov", 1e-8},          {"image_sum", 1e-12},    {"roundtrip", 1e-10},
              {"quadrature_S", 1e-6},    {"fourier", 1e-4},       {"boundedness", 1e-12},
              {"holder", 0.0}} {}

double Tolerances::get(const std::string& name) const {
  const auto it = values_.find(name);
  if (it == values_.end()) throw Error(ErrorCode::InvalidArgument, fmt::format("unknown tolerance '{}'", name));
  return it->second;
}

void Tolerances::set(const std::string& name, double value) {
  const auto it = values_.find(name);
  if (it == values_.end()) throw Error(ErrorCode::InvalidArgument, fmt::format("unknown tolerance '{}'", name));
  if (!(value >= 0.0) || !std::isfinite(value)) {
    throw Error(ErrorCode::InvalidArgument, fmt::format("tolerance '{}' must be finite and >= 0", name));
  }
  it->second = value;
}

namespace {

// Above this, B - 1 is lost to rounding relative to B.
constexpr double kRoundtripMaxBetaLambda = 16.0;

struct Runner {
  const BuiltModel& model;
  const SuiteOptions& opt;
  VerificationReport report;
  std::mt19937_64 gen;

  const ThermalContext& ctx() const { return model.ctx; }
  bool thermal() const { return !ctx().is_ground_state(); }
  // Time horizon for random words: the circle, or a window on the line.
  double horizon() const { return thermal() ? ctx().beta() : 4.0; }

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(gen); }
  int uniform_int(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(gen); }

  CheckRecord& add(const std::string& name, const std::string& identity) {
    CheckRecord r;
    r.check_name = name;
    r.identity = identity;
    r.model_id = model.name;
    r.beta = ctx().beta();
    r.tolerance = opt.tolerances.get(name);
    report.checks.push_back(std::move(r));
    return report.checks.back();
  }

  void skip(const std::string& name, const std::string& identity, const std::string& why) {
    CheckRecord& r = add(name, identity);
    r.skipped = true;
    r.pass = true;
    r.note = why;
  }

  void run(const std::string& name, const std::string& identity, const std::function<double(CheckRecord&)>& body) {
    CheckRecord& r = add(name, identity);
    const std::size_t index = report.checks.size() - 1;
    try {
      const double residual = body(r);
      CheckRecord& rr = report.checks[index];
      rr.residual = residual;
      rr.pass = residual <= rr.tolerance;
    } catch (const Error& e) {
      CheckRecord& rr = report.checks[index];
      rr.pass = false;
      rr.residual = std::numeric_limits<double>::infinity();
      rr.note = e.what();
    }
  }

  EuclideanWord random_word(int letters, bool complex_letters, double span) {
    EuclideanWord w;
    std::vector<double> times;
    for (int i = 0; i < letters; ++i) times.push_back(uniform(0.0, span));
    std::sort(times.begin(), times.end());
    for (double t : times) w.push_back({complex_letters ? random_complex_probe(model, gen) : random_real_probe(model, gen), t});
    return w;
  }

  std::vector<double> s_grid(int n) const {
    std::vector<double> g(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) g[static_cast<std::size_t>(i)] = ctx().beta() * i / (n - 1);
    return g;
  }

  void reflection() {
    const std::string id = "S(f,g;s) = S(g,f;beta-s)";
    const std::string sym_id = "S(f,g;s) = S(g,f;s) for real f, g";
    if (!thermal()) {
      skip("kms_reflection", id, "ground state");
      skip("kms_symmetry", sym_id, "ground state");
      return;
    }
    const auto grid = s_grid(opt.grid);
    double sym = 0.0;
    run("kms_reflection", id, [&](CheckRecord& r) {
      double worst = 0.0;
      for (int i = 0; i < opt.pairs; ++i) {
        const TestVector f = random_real_probe(model, gen);
        const TestVector g = random_real_probe(model, gen);
        const auto res = kms_reflection_check(ctx(), f, g, grid);
        worst = std::max(worst, res.reflection);
        sym = std::max(sym, res.symmetry);
      }
      // Complex pairs test the non-symmetric branch of S.
      for (int i = 0; i < opt.pairs; ++i) {
        const auto res = kms_reflection_check(ctx(), random_complex_probe(model, gen), random_complex_probe(model, gen), grid);
        worst = std::max(worst, res.reflection);
      }
      r.measured["pairs"] = 2 * opt.pairs;
      r.measured["grid"] = opt.grid;
      return worst;
    });
    run("kms_symmetry", sym_id, [&](CheckRecord&) { return sym; });
  }

  void positivity() {
    const double half = thermal() ? 0.5 * ctx().beta() : 2.0;
    run("os_gram", "sum conj(c_k) c_l S(f_k,f_l;s_k+s_l) >= 0", [&](CheckRecord& r) {
      double worst = -std::numeric_limits<double>::infinity();
      for (int t = 0; t < opt.gram_trials; ++t) {
        EuclideanWord fam;
        const int n = uniform_int(1, 8);
        for (int k = 0; k < n; ++k) fam.push_back({random_complex_probe(model, gen), uniform(0.0, half)});
        const auto g = os_gram_check(ctx(), fam);
        worst = std::max(worst, -g.min_eigenvalue / std::max(g.norm, 1e-300));
      }
      r.measured["relative_negativity"] = worst;
      return worst;
    });
    run("stationary_gram", "S(f_k,f_l;|s_k-s_l|) positive semi-definite", [&](CheckRecord&) {
      double worst = -std::numeric_limits<double>::infinity();
      for (int t = 0; t < opt.gram_trials; ++t) {
        EuclideanWord fam;
        const int n = uniform_int(1, 8);
        for (int k = 0; k < n; ++k) fam.push_back({random_real_probe(model, gen), uniform(0.0, horizon())});
        const auto g = stationary_gram_check(ctx(), fam);
        worst = std::max(worst, -g.min_eigenvalue / std::max(g.norm, 1e-300));
      }
      return worst;
    });
    run("weyl_os", "G^E(reflect(w_k) w_l) positive semi-definite", [&](CheckRecord&) {
      double worst = -std::numeric_limits<double>::infinity();
      for (int t = 0; t < opt.gram_trials; ++t) {
        std::vector<EuclideanWord> words;
        const int n = uniform_int(1, 8);
        for (int k = 0; k < n; ++k) {
          words.push_back(k == 0 && t % 2 == 0 ? EuclideanWord{} : random_word(uniform_int(1, 2), true, half));
        }
        const auto g = weyl_os_check(ctx(), words);
        worst = std::max(worst, -g.min_eigenvalue / std::max(g.norm, 1e-300));
      }
      return worst;
    });
  }

  void central() {
    const CovarianceSpec spec(ctx());
    double bound = 0.0;
    run("central_identity", "E exp(i sum <xi_{s_k},f_k>) = G^E(f_1..f_n; s_1..s_n)", [&](CheckRecord&) {
      double worst = 0.0;
      for (int i = 0; i < opt.words; ++i) {
        const EuclideanWord w = random_word(uniform_int(1, 5), false, horizon());
        const Complex g = multi_green_euclid(ctx(), w);
        worst = std::max(worst, std::abs(char_functional(spec, w) - g));
        bound = std::max(bound, std::abs(g) - 1.0);
      }
      return worst;
    });
    run("boundedness", "|G^E| <= 1 on real words", [&](CheckRecord&) { return bound; });
  }

  void axioms() {
    run("eg1_shift", "G^E invariant under a global time shift", [&](CheckRecord&) {
      double worst = 0.0;
      for (int i = 0; i < opt.words; ++i) {
        const EuclideanWord w = random_word(uniform_int(1, 4), true, horizon());
        worst = std::max(worst, eg1_shift_residual(ctx(), w, uniform(-horizon(), horizon())));
      }
      return worst;
    });
    run("eg1_merge", "W_f W_g = exp(-i sigma(f,g)/2) W_{f+g} at equal times", [&](CheckRecord&) {
      double worst = 0.0;
      for (int i = 0; i < opt.words; ++i) {
        EuclideanWord w = random_word(uniform_int(2, 4), true, horizon());
        const auto at = static_cast<std::size_t>(uniform_int(1, static_cast<int>(w.size()) - 1));
        w[at].s = w[at - 1].s;
        worst = std::max(worst, eg1_merge_residual(ctx(), w));
      }
      return worst;
    });
    const std::string cyc = "G^E(W_0..W_n; 0,s_1..s_n) = G^E(W_n,W_0..W_{n-1}; 0,beta-s_n,beta-s_n+s_1,..)";
    if (!thermal()) {
      skip("eg4_cyclic", cyc, "ground state");
      return;
    }
    run("eg4_cyclic", cyc, [&](CheckRecord&) {
      double worst = 0.0;
      for (int i = 0; i < opt.words; ++i) {
        const int n = uniform_int(1, 4);
        std::vector<TestVector> letters;
        for (int k = 0; k <= n; ++k) letters.push_back(random_complex_probe(model, gen));
        std::vector<double> times;
        for (int k = 0; k < n; ++k) times.push_back(uniform(0.0, ctx().beta()));
        std::sort(times.begin(), times.end());
        worst = std::max(worst, eg4_cyclic_check(ctx(), letters, times));
      }
      return worst;
    });
  }

  void markov() {
    const CovarianceSpec spec(ctx());
    run("markov", "Cov(xi_u, xi_v | xi_r, xi_s) = 0 across separated arcs", [&](CheckRecord&) {
      double worst = 0.0;
      const double h = horizon();
      for (int i = 0; i < opt.markov_configs; ++i) {
        const TestVector f = random_real_probe(model, gen);
        double r = 0.0, s = 0.0;
        do {
          r = uniform(0.0, h);
          s = uniform(0.0, h);
        } while (std::abs(r - s) < 1e-3 * h || (thermal() && std::abs(std::abs(r - s) - h) < 1e-3 * h));
        ProbePair p;
        if (thermal()) {
          const double arc = circle_distance(r, s, h);
          p.u = r + uniform(0.05, 0.95) * arc;
          p.v = s + uniform(0.05, 0.95) * (h - arc);
          p.u = std::fmod(p.u, h);
          p.v = std::fmod(p.v, h);
        } else {
          const double lo = std::min(r, s), hi = std::max(r, s);
          p.u = lo + uniform(0.05, 0.95) * (hi - lo);
          p.v = uniform(0.0, 1.0) < 0.5 ? lo - uniform(0.01, h) : hi + uniform(0.01, h);
        }
        worst = std::max(worst, markov_check(spec, f, r, s, {p}));
      }
      return worst;
    });
  }

  void image_sum() {
    const std::string id = "R_beta(d) = sum_n R_inf(d + n beta)";
    if (!thermal()) {
      skip("image_sum", id, "ground state");
      return;
    }
    const CovarianceSpec spec(ctx());
    run("image_sum", id, [&](CheckRecord& r) {
      double excess = -std::numeric_limits<double>::infinity();
      double worst_residual = 0.0;
      double stated_excess = -std::numeric_limits<double>::infinity();
      for (int i = 0; i < opt.grid; ++i) {
        const double d = ctx().beta() * i / opt.grid;
        const auto res = image_sum_check(spec, d, opt.image_terms);
        excess = std::max(excess, res.excess);
        worst_residual = std::max(worst_residual, res.residual);
        stated_excess = std::max(stated_excess, res.residual - res.stated_bound);
      }
      r.note = "residual: per-atom error minus the exact tail 2 cosh(d lambda) e^{-(N+1) beta lambda} / (1 - e^{-beta lambda}), relative to max(1, R(d))";
      r.measured["max_residual"] = worst_residual;
      r.measured["excess_over_d0_bound"] = stated_excess;
      r.measured["images"] = opt.image_terms;
      return excess;
    });
  }

  void holder() {
    const CovarianceSpec spec(ctx());
    run("holder", "|S(f,f;h) - S(f,f;0)| <= 2 m(f) |h|", [&](CheckRecord& r) {
      std::vector<double> hs;
      const double top = 0.4 * horizon();
      for (int i = 0; i <= 20; ++i) hs.push_back(1e-3 * std::pow(top / 1e-3, i / 20.0));
      double worst = -std::numeric_limits<double>::infinity();
      for (int i = 0; i < opt.pairs; ++i) {
        const auto res = holder_check(spec, random_real_probe(model, gen), hs);
        worst = std::max(worst, -res.min_slack());
      }
      r.measured["min_slack"] = -worst;
      return worst;
    });
  }

  void roundtrip() {
    const std::string id = "h -> B -> h";
    if (!thermal() || ctx().model().kind() != ModelKind::Matrix) {
      skip("roundtrip", id, thermal() ? "quadrature model" : "ground state");
      return;
    }
    const double top = ctx().beta() * ctx().model().spectrum().maxCoeff();
    if (top > kRoundtripMaxBetaLambda) {
      // B - 1 = 2e^{-beta lambda} / (1 - e^{-beta lambda}) sits below double
      // resolution relative to B, so log((B-1)/(B+1)) cannot recover lambda.
      skip("roundtrip", id, fmt::format("beta * lambda_max = {:.6g} exceeds {}", top, kRoundtripMaxBetaLambda));
      return;
    }
    run("roundtrip", id, [&](CheckRecord& r) {
      const GeneratorModel& m = ctx().model();
      const GeneratorModel back = recover_generator(thermal_B(m, ctx().beta()), ctx().beta());
      const double scale = std::max(1.0, m.h_matrix().cwiseAbs().maxCoeff());
      r.measured["max_beta_lambda"] = ctx().beta() * m.spectrum().maxCoeff();
      return (back.h_matrix() - m.h_matrix()).cwiseAbs().maxCoeff() / scale;
    });
  }

  void quadrature() {
    const std::string id = "int P(rho,s) F(f,g;rho) + P(rho,beta-s) F(g,f;-rho) d rho = S(f,g;s)";
    if (!thermal()) {
      skip("quadrature_S", id, "ground state");
      return;
    }
    run("quadrature_S", id, [&](CheckRecord&) {
      double worst = 0.0;
      const double beta = ctx().beta();
      for (int i = 0; i < opt.quadrature_points; ++i) {
        const double s = beta * (0.1 + 0.8 * (opt.quadrature_points == 1 ? 0.5 : double(i) / (opt.quadrature_points - 1)));
        const TestVector f = random_real_probe(model, gen);
        const TestVector g = random_complex_probe(model, gen);
        worst = std::max(worst, std::abs(quadrature_S(ctx(), f, g, s) - S_kernel(ctx(), f, g, s)));
      }
      return worst;
    });
  }

  void fourier() {
    const std::string id = "sum_{|n|<=N} c_n e^{2 pi i n s/beta} -> S(f,f;s)";
    if (!thermal()) {
      skip("fourier", id, "ground state");
      return;
    }
    run("fourier", id, [&](CheckRecord& r) {
      // The kernel has a kink at s = 0 where the series converges like
      // beta lambda / (pi^2 N); that point is recorded against its bound and
      // the tolerance applies on the interior grid.
      double worst = 0.0, endpoint = 0.0, endpoint_bound = 0.0;
      const CovarianceSpec spec(ctx());
      for (int i = 0; i < opt.pairs; ++i) {
        const TestVector f = random_real_probe(model, gen);
        const double s0 = S_kernel(ctx(), f, f, 0.0).real();
        for (int k = 0; k < 8; ++k) {
          const double s = ctx().beta() * k / 8.0;
          const double series = fourier_series_S(ctx(), f, s, opt.fourier_modes);
          const double rel = std::abs(series - S_kernel(ctx(), f, f, s).real()) / s0;
          if (k == 0) {
            endpoint = std::max(endpoint, rel);
            endpoint_bound = std::max(endpoint_bound, 2.0 * truncation_bound(spec, f, f, opt.fourier_modes) / s0);
          } else {
            worst = std::max(worst, rel);
          }
        }
      }
      r.measured["modes"] = opt.fourier_modes;
      r.measured["endpoint_residual"] = endpoint;
      r.measured["endpoint_bound"] = endpoint_bound;
      return worst;
    });
  }
};

}  // namespace

VerificationReport run_suite(const BuiltModel& model, const SuiteOptions& options) {
  Runner r{model, options, {}, std::mt19937_64(options.seed)};
  r.report.model_id = model.name;
  r.report.variant = model.variant;
  r.report.model_hash = model.hash;
  r.report.beta = model.ctx.beta();
  r.reflection();
  r.positivity();
  r.central();
  r.axioms();
  r.markov();
  r.image_sum();
  r.holder();
  r.roundtrip();
  r.quadrature();
  r.fourier();
  return std::move(r.report);
}

}  // namespace kmsq
