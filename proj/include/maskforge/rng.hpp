#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace maskforge {

// Seeded generator. Uniform variates are derived from the raw 64-bit stream
// (bit-exact across standard libraries); Poisson draws use the standard
// library distribution.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next() { return eng_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform_phase() { return 2.0 * std::numbers::pi * uniform01(); }

  // Uniform integer in [0, n), unbiased by rejection.
  std::uint32_t index(std::uint32_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v;
    do {
      v = eng_();
    } while (v >= limit);
    return static_cast<std::uint32_t>(v % n);
  }

  double poisson(double mean) {
    if (mean <= 0.0) return 0.0;
    std::poisson_distribution<long long> d(mean);
    return static_cast<double>(d(eng_));
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace maskforge
