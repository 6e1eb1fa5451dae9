#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace netids {

// Deterministic RNG. mt19937_64 output is pinned by the standard; the
// distributions here are hand-rolled because std:: distributions are
// implementation-defined and would break cross-toolchain reproducibility.
struct Rng {
  std::mt19937_64 eng;

  explicit Rng(uint64_t seed) : eng(seed) {}

  double uniform01() { return double(eng() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Unbiased integer in [0, n).
  uint64_t below(uint64_t n) {
    if (n <= 1) return 0;
    uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t x;
    do {
      x = eng();
    } while (x >= limit);
    return x % n;
  }

  uint32_t range_u32(uint32_t lo, uint32_t hi) {  // inclusive bounds
    return lo + uint32_t(below(uint64_t(hi) - lo + 1));
  }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = size_t(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }
};

}  // namespace netids
