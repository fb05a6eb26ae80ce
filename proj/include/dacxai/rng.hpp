#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace dacxai {

// Portable draws on top of mt19937_64. The distribution adapters in <random>
// are implementation-defined, which would make "same seed, same corpus"
// depend on the standard library; these are pinned bit-for-bit.

inline double rand_unit(std::mt19937_64& rng) {
  // 53-bit mantissa uniform in [0, 1).
  return static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0);
}

inline std::size_t rand_index(std::mt19937_64& rng, std::size_t n) {
  // Rejection sampling; unbiased for any n > 0.
  if (n == 0) throw std::invalid_argument("rand_index: empty range");
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x = rng();
  while (x >= limit) x = rng();
  return static_cast<std::size_t>(x % n);
}

// Closed range [lo, hi].
inline int rand_between(std::mt19937_64& rng, int lo, int hi) {
  return lo + static_cast<int>(rand_index(rng, static_cast<std::size_t>(hi - lo + 1)));
}

template <typename T>
void shuffle_inplace(std::vector<T>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::size_t j = rand_index(rng, i);
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace dacxai
