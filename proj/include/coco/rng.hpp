#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>

#include "coco/errors.hpp"

namespace coco {

// splitmix64 finalizer; used to derive independent stream seeds so that
// per-record / per-iteration generation is order- and parallelism-independent.
inline uint64_t mix_seed(uint64_t a, uint64_t b) {
  uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Thin deterministic wrapper around mt19937_64.  All sampling goes through
// explicit uniform doubles so streams do not depend on the standard library's
// distribution internals.
class Rng {
 public:
  explicit Rng(uint64_t seed) : eng_(seed) {}

  double uniform() {  // [0, 1)
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  }

  double normal() {  // Box-Muller, no cached spare
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  uint64_t below(uint64_t n) {  // uniform integer in [0, n)
    if (n == 0) throw Error("Rng::below: empty range");
    uint64_t threshold = (~n + 1) % n;  // rejection sampling, unbiased
    for (;;) {
      uint64_t r = eng_();
      if (r >= threshold) return r % n;
    }
  }

  // Index draw proportional to nonnegative weights.
  uint32_t categorical(std::span<const double> weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    if (total <= 0.0) throw Error("Rng::categorical: zero total weight");
    double x = uniform() * total;
    double acc = 0.0;
    for (uint32_t i = 0; i + 1 < weights.size(); ++i) {
      acc += weights[i];
      if (x < acc) return i;
    }
    return static_cast<uint32_t>(weights.size() - 1);
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace coco
