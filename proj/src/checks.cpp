#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "kmsq/error.hpp"
#include "kmsq/quasifree.hpp"

namespace kmsq {

ReflectionResult kms_reflection_check(const ThermalContext& ctx, const TestVector& f,
                                      const TestVector& g, std::span<const double> s_grid) {
  if (ctx.is_ground_state()) {
    throw Error(ErrorCode::InvalidArgument, "KMS reflection needs finite beta");
  }
  const double beta = ctx.beta();
  const TwoPointKernel fg(ctx, f, g);
  const TwoPointKernel gf(ctx, g, f);
  const bool real = f.is_real() && g.is_real();
  ReflectionResult out;
  for (double s : s_grid) {
    const Complex a = fg.S(s);
    out.reflection = std::max(out.reflection, std::abs(a - gf.S(beta - s)));
    if (real) out.symmetry = std::max(out.symmetry, std::abs(a - gf.S(s)));
  }
  return out;
}

GramResult gram_spectrum(const Eigen::MatrixXcd& m) {
  GramResult out;
  out.size = m.rows();
  if (m.rows() == 0) return out;
  out.hermiticity = (m - m.adjoint()).cwiseAbs().maxCoeff();
  const Eigen::MatrixXcd herm = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(herm, Eigen::EigenvaluesOnly);
  const Vector& ev = solver.eigenvalues();
  out.min_eigenvalue = ev.minCoeff();
  out.norm = ev.cwiseAbs().maxCoeff();
  return out;
}

namespace {

void require_half_window(const ThermalContext& ctx, double s) {
  const double half = ctx.is_ground_state() ? kGroundState : 0.5 * ctx.beta();
  if (s < 0.0 || s > half * (1.0 + 1e-14)) {
    throw Error(ErrorCode::TimeOutOfRange,
                fmt::format("positivity families need times in [0, beta/2], got {}", s));
  }
}

}  // namespace

GramResult os_gram_check(const ThermalContext& ctx, const EuclideanWord& family) {
  for (const auto& e : family) require_half_window(ctx, e.s);
  const auto n = static_cast<Index>(family.size());
  Eigen::MatrixXcd m(n, n);
  for (Index k = 0; k < n; ++k) {
    for (Index l = 0; l < n; ++l) {
      const auto& a = family[static_cast<std::size_t>(k)];
      const auto& b = family[static_cast<std::size_t>(l)];
      double s = a.s + b.s;
      if (!ctx.is_ground_state()) s = std::min(s, ctx.beta());
      m(k, l) = S_kernel(ctx, a.f, b.f, s);
    }
  }
  return gram_spectrum(m);
}

GramResult stationary_gram_check(const ThermalContext& ctx, const EuclideanWord& family) {
  for (const auto& e : family) {
    if (!e.f.is_real()) throw Error(ErrorCode::NonRealVector, "stationary Gram needs real vectors");
  }
  const auto n = static_cast<Index>(family.size());
  Eigen::MatrixXcd m(n, n);
  for (Index k = 0; k < n; ++k) {
    for (Index l = 0; l < n; ++l) {
      const auto& a = family[static_cast<std::size_t>(k)];
      const auto& b = family[static_cast<std::size_t>(l)];
      m(k, l) = S_kernel(ctx, a.f, b.f, std::abs(a.s - b.s));
    }
  }
  return gram_spectrum(m);
}

EuclideanWord reflect(const EuclideanWord& word) {
  EuclideanWord out;
  out.reserve(word.size());
  for (auto it = word.rbegin(); it != word.rend(); ++it) out.push_back({-it->f, -it->s});
  return out;
}

GramResult weyl_os_check(const ThermalContext& ctx, const std::vector<EuclideanWord>& words) {
  double top = 0.0;
  for (const auto& w : words) {
    for (const auto& e : w) {
      require_half_window(ctx, e.s);
      top = std::max(top, e.s);
    }
  }
  // Reflected letters sit at negative times; shift everything into the window.
  const double shift = ctx.is_ground_state() ? top : 0.5 * ctx.beta();
  const auto n = static_cast<Index>(words.size());
  Eigen::MatrixXcd m(n, n);
  for (Index k = 0; k < n; ++k) {
    const EuclideanWord left = reflect(words[static_cast<std::size_t>(k)]);
    for (Index l = 0; l < n; ++l) {
      EuclideanWord joined = left;
      const auto& right = words[static_cast<std::size_t>(l)];
      joined.insert(joined.end(), right.begin(), right.end());
      for (auto& e : joined) e.s += shift;
      m(k, l) = multi_green_euclid(ctx, joined);
    }
  }
  return gram_spectrum(m);
}

double eg1_shift_residual(const ThermalContext& ctx, const EuclideanWord& word, double shift) {
  EuclideanWord moved = word;
  for (auto& e : moved) e.s += shift;
  return std::abs(multi_green_euclid(ctx, moved) - multi_green_euclid(ctx, word));
}

double eg1_merge_residual(const ThermalContext& ctx, const EuclideanWord& word) {
  bool tie = false;
  for (std::size_t i = 1; i < word.size(); ++i) tie = tie || word[i].s == word[i - 1].s;
  if (!tie) throw Error(ErrorCode::InvalidArgument, "merge residual needs a word with a repeated time");
  return std::abs(euclid_product_form(ctx, word) - multi_green_euclid(ctx, word));
}

double eg4_cyclic_check(const ThermalContext& ctx, const std::vector<TestVector>& letters,
                        std::span<const double> times) {
  if (ctx.is_ground_state()) throw Error(ErrorCode::InvalidArgument, "the cyclic identity needs finite beta");
  if (letters.empty() || times.size() + 1 != letters.size()) {
    throw Error(ErrorCode::DimensionMismatch,
                fmt::format("need n+1 letters for n times, got {} letters and {} times", letters.size(),
                            times.size()));
  }
  const double beta = ctx.beta();
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double lo = i == 0 ? 0.0 : times[i - 1];
    if (times[i] < lo || times[i] > beta) {
      throw Error(ErrorCode::TimeOutOfRange,
                  fmt::format("cyclic identity needs 0 <= s_1 <= ... <= s_n <= beta (entry {} = {})", i, times[i]));
    }
  }
  const std::size_t n = times.size();
  EuclideanWord lhs{{letters[0], 0.0}};
  for (std::size_t i = 0; i < n; ++i) lhs.push_back({letters[i + 1], times[i]});

  const double last = n == 0 ? 0.0 : times[n - 1];
  EuclideanWord rhs{{letters[n], 0.0}, {letters[0], beta - last}};
  for (std::size_t i = 0; i + 1 < n; ++i) rhs.push_back({letters[i + 1], beta - last + times[i]});
  if (n == 0) rhs.resize(1);
  return std::abs(multi_green_euclid(ctx, lhs) - multi_green_euclid(ctx, rhs));
}

}  // namespace kmsq
