#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace pirnsi {

/// Deterministic RNG with explicitly implemented distributions, so a
/// given seed yields the same stream on every platform/stdlib.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  /// Uniform in [0, bound), unbiased (rejection sampling).
  std::uint64_t below(std::uint64_t bound) {
    if (bound == 0) return 0;
    const std::uint64_t lim = ~std::uint64_t(0) - (~std::uint64_t(0) % bound + 1) % bound;
    std::uint64_t v;
    do {
      v = eng_();
    } while (v > lim);
    return v % bound;
  }

  /// Uniform in [0,1) with 53-bit resolution.
  double uniform() { return double(eng_() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return uniform() < p; }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i)
      std::swap(v[i - 1], v[below(i)]);
  }

  /// Uniform permutation of [0, n).
  std::vector<std::uint32_t> permutation(std::size_t n) {
    std::vector<std::uint32_t> p(n);
    for (std::size_t i = 0; i < n; ++i) p[i] = std::uint32_t(i);
    shuffle(p);
    return p;
  }

  /// Independent child stream; distinct tags give distinct streams.
  Rng fork(std::uint64_t tag) {
    std::uint64_t x = eng_() ^ (tag * 0x9E3779B97F4A7C15ULL);
    x ^= x >> 30; x *= 0xBF58476D1CE4E5B9ULL;
    x ^= x >> 27; x *= 0x94D049BB133111EBULL;
    x ^= x >> 31;
    return Rng(x);
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace pirnsi
