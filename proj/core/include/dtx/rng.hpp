#pragma once

#include <cstdint>

namespace dtx {

/// Deterministic counter-free PRNG (xoshiro256**) with explicit stream ids.
/// The same (seed, stream) pair always yields the same draw sequence, on any
/// platform; distribution helpers are implemented locally so results do not
/// depend on the standard library.
class Rng {
 public:
  Rng() : Rng(0, 0) {}
  Rng(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t next_u64();

  /// Uniform in [0, 1).
  double uniform01();
  /// Uniform in [lo, hi).
  double uniform(double lo, double hi);
  /// Uniform integer in [lo, hi] inclusive.
  long uniform_int(long lo, long hi);
  /// Standard normal (Box-Muller; two u64 draws per value).
  double normal();
  /// Poisson via inversion/Knuth; suitable for small means.
  long poisson(double mean);

  /// Independent child stream; deterministic function of (seed, stream, id).
  Rng fork(std::uint64_t id) const;

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

 private:
  std::uint64_t seed_ = 0;
  std::uint64_t stream_ = 0;
  std::uint64_t s_[4] = {};
};

/// SplitMix64 step; also used to derive stream seeds and hash-based draws.
std::uint64_t splitmix64(std::uint64_t& state);

/// Order-independent mix of two ids into one; not cryptographic.
std::uint64_t hash_mix(std::uint64_t a, std::uint64_t b);

}  // namespace dtx
