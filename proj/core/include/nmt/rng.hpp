#pragma once

#include <cstdint>
#include <random>

namespace nmt {

// Seeded random stream. All sampling goes through the methods below rather
// than <random> distributions, whose output is implementation-defined; this
// keeps runs bit-reproducible across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform double in [0, 1).
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform_range(double lo, double hi) {
    return lo + (hi - lo) * uniform();
  }

  // Uniform integer in [0, n). n must be positive.
  std::uint64_t uniform_int(std::uint64_t n) {
    // Rejection sampling to avoid modulo bias.
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t r = engine_();
    while (r >= limit) r = engine_();
    return r % n;
  }

  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace nmt
