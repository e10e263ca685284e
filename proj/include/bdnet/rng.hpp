#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>

namespace bdnet {

// All randomness in the toolkit flows from a single master seed through
// SplitMix64. Derived streams are obtained with seed_mix(); the scheme is
// identified as "splitmix64-v1" in search results so runs can be reproduced.

inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Folds the parts into a SplitMix64 state (xor, then advance) and returns the
// next output. Pure function of its inputs.
inline std::uint64_t seed_mix(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t state = 0x243F6A8885A308D3ULL;
  for (std::uint64_t part : parts) {
    state ^= part;
    (void)splitmix64_next(state);
  }
  std::uint64_t s = state;
  return splitmix64_next(s);
}

inline constexpr char kSeedScheme[] = "splitmix64-v1";

// Small deterministic generator. std::random distributions are not pinned
// down by the standard, so the few draws we need are implemented explicitly.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() { return splitmix64_next(state_); }

  // Uniform in [0, 1), 53-bit resolution.
  double next_unit() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

  // Unbiased integer in [0, n) via rejection sampling; n must be nonzero.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t x = next_u64();
    while (x >= limit) x = next_u64();
    return x % n;
  }

  // Box-Muller without caching the second value, so draws stay a pure
  // function of the stream position.
  double normal(double mean, double stddev) {
    const double u1 = 1.0 - next_unit();  // (0, 1]
    const double u2 = next_unit();
    const double r = std::sqrt(-2.0 * std::log(u1));
    return mean + stddev * r * std::cos(6.283185307179586476925286766559 * u2);
  }

 private:
  std::uint64_t state_;
};

}  // namespace bdnet
