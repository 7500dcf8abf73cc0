#pragma once

#include "msk/tensor.hpp"

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <vector>

namespace msk {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Child seed for a labelled sub-stream; stable across platforms.
inline std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> labels) {
  std::uint64_t s = splitmix64(base);
  for (auto l : labels)
    s = splitmix64(s ^ splitmix64(l + 0x632be59bd9b4e019ULL));
  return s;
}

inline double uniform(ad::Rng& rng, double lo, double hi) { return lo + (hi - lo) * ad::uniform01(rng); }

/// Standard normal via Box-Muller (the stdlib distribution is not portable).
inline double standard_normal(ad::Rng& rng) {
  constexpr double two_pi = 6.283185307179586476925286766559;
  double u1 = ad::uniform01(rng);
  while (u1 <= 0.0)
    u1 = ad::uniform01(rng);
  const double u2 = ad::uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
}

/// Fisher-Yates permutation of 0..n-1 (std::shuffle is not portable).
inline std::vector<std::size_t> shuffled_indices(std::size_t n, ad::Rng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = n; i > 1; --i) {
    const auto j = static_cast<std::size_t>(ad::uniform01(rng) * static_cast<double>(i));
    std::swap(idx[i - 1], idx[j < i ? j : i - 1]);
  }
  return idx;
}

} // namespace msk
