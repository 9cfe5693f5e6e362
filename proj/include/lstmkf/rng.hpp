#pragma once

#include <array>
#include <cstdint>

namespace lstmkf {

/// One step of the SplitMix64 sequence: advances `state` and returns the mixed output.
std::uint64_t splitmix64(std::uint64_t& state);

/// Derives an independent child seed from (seed, stream). Used wherever a
/// component needs its own reproducible stream: per sequence, per parameter,
/// per epoch. Defined as the first SplitMix64 output for state
/// seed ^ (stream * 0xD1B54A32D192ED03).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/**
 * xoshiro256** generator (Blackman & Vigna) seeded through SplitMix64.
 *
 * The full stream is defined by:
 *   - state words s[0..3] = four successive splitmix64 outputs from `seed`
 *   - uniform01() = (next() >> 11) * 2^-53, in [0, 1)
 *   - normal() = Box-Muller on (u1, u2) with u1 = 1 - uniform01(), producing
 *     sqrt(-2 ln u1) * cos(2 pi u2) first and the matching sin() value on the
 *     following call.
 */
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next();
  double uniform01();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
  double normal();
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

 private:
  std::array<std::uint64_t, 4> s_{};
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

}  // namespace lstmkf
