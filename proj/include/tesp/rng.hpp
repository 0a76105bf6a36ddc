#pragma once

#include <cstdint>
#include <random>

namespace tesp {

// Deterministic RNG used everywhere randomness is needed. mt19937_64 output
// is fully specified by the standard; the sampling helpers below avoid the
// implementation-defined std distributions so that a seed reproduces the
// same run on any toolchain.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next() { return eng_(); }

  // Unbiased integer in [0, n), n >= 1.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t v = next();
    while (v >= limit) v = next();
    return v % n;
  }

  // Inclusive range.
  int int_in(int lo, int hi) {
    return lo + static_cast<int>(below(static_cast<std::uint64_t>(hi - lo) + 1));
  }

  // Uniform in [0, 1).
  double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double in(double a, double b) { return a + (b - a) * unit(); }

  bool coin() { return (next() & 1u) != 0; }

 private:
  std::mt19937_64 eng_;
};

// splitmix64 step; used to derive independent per-worker streams from a
// master seed without overlapping mt19937_64 states.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace tesp
