#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace gazeattn {

// SplitMix64 (Steele, Lea, Flood 2014). The algorithm is fixed here rather
// than taken from <random> so that synthetic corpora are reproducible across
// standard libraries and languages. Derived draws use only the documented
// transforms below.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1) with 53 bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n) by multiply-shift on the top 32 bits.
  std::uint64_t below(std::uint64_t n) { return ((next() >> 32) * n) >> 32; }

  bool bernoulli(double p) { return uniform() < p; }

  // Standard normal by Box-Muller; consumes two draws, returns the cosine branch.
  double normal() {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::uint64_t state_;
};

// Stateless hash of a 64-bit key, one SplitMix64 finalizer round.
inline std::uint64_t mix64(std::uint64_t key) {
  SplitMix64 g(key);
  return g.next();
}

}  // namespace gazeattn
