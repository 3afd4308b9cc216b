#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <string_view>
#include <vector>

namespace skinbench {

using Rng = std::mt19937_64;

/// Uniform integer in [0, bound) by multiply-shift, identical on every platform.
inline std::uint64_t bounded(Rng& rng, std::uint64_t bound) {
  return static_cast<std::uint64_t>((static_cast<unsigned __int128>(rng()) * bound) >> 64);
}

/// Fisher-Yates permutation of 0..n-1.
inline std::vector<std::size_t> seeded_permutation(std::size_t n, Rng& rng) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[bounded(rng, i)]);
  return order;
}

/// Uniform float in [0, 1) from the top 24 bits.
inline float uniform01(Rng& rng) { return static_cast<float>(rng() >> 40) * (1.0f / 16777216.0f); }

/// Box-Muller normal; avoids std::normal_distribution so weights match across standard libraries.
inline float normal(Rng& rng) {
  constexpr double kTwoPi = 6.283185307179586;
  double u1 = (static_cast<double>(rng() >> 11) + 1.0) * (1.0 / 9007199254740993.0);
  double u2 = static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0);
  return static_cast<float>(std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2));
}

/// 64-bit FNV-1a, used to derive per-backbone seeds from ids.
inline std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace skinbench
