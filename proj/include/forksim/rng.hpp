// Seedable, splittable random number generation.
//
// All randomness in the project flows through Rng so that a run is a pure
// function of its root seed.  Trial seeds are derived from the root seed by
// trial index, and generators can be split into independent substreams by a
// stream id, so results do not depend on thread count or evaluation order.
#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "forksim/errors.hpp"

namespace forksim {

// SplitMix64 step; the workhorse for seed derivation.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Stateless mix of a seed and a stream id into a fresh seed.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t s = seed ^ (0xD1B54A32D192ED03ull * (stream + 0x632BE59BD9B4E019ull));
  std::uint64_t a = splitmix64(s);
  std::uint64_t b = splitmix64(s);
  return a ^ (b << 1);
}

// Per-trial seed for Monte Carlo loops: same root seed + trial index gives
// the same trial regardless of how trials are scheduled across threads.
inline std::uint64_t trial_seed(std::uint64_t root_seed, std::uint64_t trial_index) {
  return derive_seed(root_seed, 0x7261696C00000000ull ^ trial_index);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Exponential with the given rate (mean 1/rate).
  double exponential(double rate) {
    if (!(rate > 0.0)) throw InvalidParameter("exponential: rate must be positive");
    // -log1p(-u) is safe because uniform01() < 1.
    return -std::log1p(-uniform01()) / rate;
  }

  bool bernoulli(double p) { return uniform01() < p; }

  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) throw InvalidParameter("below: n must be positive");
    // Rejection sampling keeps the draw unbiased.
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  // Independent substream; deterministic in (seed, stream).
  Rng split(std::uint64_t stream) const { return Rng(derive_seed(seed_, stream)); }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace forksim
