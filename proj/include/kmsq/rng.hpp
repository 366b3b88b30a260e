#pragma once

// Philox4x32-10 counter-based generator (Salmon et al., SC'11). Every random
// block is a pure function of (counter, key), so parallel consumers agree on
// the stream no matter how the work is scheduled.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <utility>

namespace kmsq::rng {

using Counter = std::array<std::uint32_t, 4>;
using Key = std::array<std::uint32_t, 2>;

inline Counter philox4x32_10(Counter ctr, Key key) {
  constexpr std::uint32_t kM0 = 0xD2511F53u;
  constexpr std::uint32_t kM1 = 0xCD9E8D57u;
  constexpr std::uint32_t kW0 = 0x9E3779B9u;
  constexpr std::uint32_t kW1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * ctr[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kW0;
    key[1] += kW1;
  }
  return ctr;
}

inline Key key_from_seed(std::uint64_t seed) {
  return {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
}

/// Two independent standard normals from one Philox block (Box-Muller on
/// 53-bit uniforms; the first uniform is shifted into (0, 1]).
inline std::pair<double, double> normal_pair(const Counter& ctr, const Key& key) {
  const Counter r = philox4x32_10(ctr, key);
  const std::uint64_t x = (static_cast<std::uint64_t>(r[0]) << 32) | r[1];
  const std::uint64_t y = (static_cast<std::uint64_t>(r[2]) << 32) | r[3];
  constexpr double kScale = 0x1.0p-53;
  const double u1 = static_cast<double>((x >> 11) + 1) * kScale;
  const double u2 = static_cast<double>(y >> 11) * kScale;
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  return {radius * std::cos(angle), radius * std::sin(angle)};
}

}  // namespace kmsq::rng
