#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace stsim {

// Seeded RNG wrapper. All draws go through explicit mappings instead of
// std::uniform_*_distribution, so identical seeds give identical streams
// on every platform and standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next() { return gen_(); }

  /// Uniform double in [0,1).
  double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  /// Uniform double in [lo,hi).
  double uniform(double lo, double hi) { return lo + uniform01() * (hi - lo); }

  /// Uniform integer in [0,n). n must be positive.
  std::size_t below(std::size_t n) { return static_cast<std::size_t>(gen_() % n); }

  double gaussian() {
    // Box-Muller; draws two uniforms per call, no cached spare.
    double u1 = uniform01();
    double u2 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.141592653589793 * u2);
  }

  template <class T>
  void shuffle(std::vector<T>& v) {
    // Fisher-Yates with our own index draws.
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = below(i);
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 gen_;
};

/// Derives an independent child seed from (seed, salt).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt) {
  // splitmix64 finalizer over the combined value.
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace stsim
