#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace geg::rng {

// All sampling goes through these helpers instead of std distributions,
// whose output is implementation-defined. mt19937_64 itself is pinned by
// the standard, so seeded runs reproduce bit-for-bit.

inline double uniform(std::mt19937_64& gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

/// Unbiased integer in [0, bound) via rejection sampling.
inline std::uint64_t below(std::mt19937_64& gen, std::uint64_t bound) {
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t x;
  do {
    x = gen();
  } while (x >= limit);
  return x % bound;
}

/// Standard normal via the polar method (no trig, fewer rounding surprises).
inline double normal(std::mt19937_64& gen) {
  while (true) {
    const double u = 2.0 * uniform(gen) - 1.0;
    const double v = 2.0 * uniform(gen) - 1.0;
    const double s = u * u + v * v;
    if (s > 0.0 && s < 1.0) {
      return u * std::sqrt(-2.0 * std::log(s) / s);
    }
  }
}

/// Fisher-Yates permutation of {0..n-1}.
inline std::vector<int> permutation(int n, std::mt19937_64& gen) {
  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = i;
  for (int i = n - 1; i > 0; --i) {
    const int j = static_cast<int>(below(gen, static_cast<std::uint64_t>(i) + 1));
    std::swap(idx[i], idx[j]);
  }
  return idx;
}

}  // namespace geg::rng
