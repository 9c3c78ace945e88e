#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace pocsim {

/// Seeded, replayable random stream.
///
/// Generator: xoshiro256++ (Blackman & Vigna, 2019). The 256-bit state is
/// derived from (seed, stream_id) with two independently finalized
/// SplitMix64 sequences, so that
///   * identical (seed, stream_id) give a bit-identical draw sequence, and
///   * distinct stream ids give statistically independent streams.
/// All constants are fixed here; replays are stable across platforms.
///
/// A stream must not be shared between concurrent tasks; each replica owns
/// its own stream.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  std::uint64_t next_u64();

  /// Uniform in [0, 1) with 53 random mantissa bits.
  double uniform01();

  /// Uniform in [lo, hi).
  double uniform(double lo, double hi);

  /// Uniform angle in (-pi, pi].
  double uniform_angle();

  /// Unbiased integer in {0, 1, ..., n-1}.
  std::uint64_t below(std::uint64_t n);

  /// Standard normal via the Marsaglia polar method (spare value cached).
  double gaussian();

  /// Exponential waiting time with the given rate; mean 1/rate.
  /// Throws std::invalid_argument for rate <= 0.
  double exponential(double rate);

  /// Poisson count. Inversion-by-multiplication for small means,
  /// PTRS transformed rejection (Hoermann, 1993) for mean >= 30.
  std::uint64_t poisson(double mean);

  /// Uniformly distributed point on the sphere of the given radius in R^n,
  /// obtained by normalizing a vector of n standard Gaussians.
  /// Requires n >= 2 and radius > 0.
  std::vector<double> uniform_sphere(std::size_t n, double radius);

 private:
  std::array<std::uint64_t, 4> state_;
  std::uint64_t seed_ = 0;
  std::uint64_t stream_id_ = 0;
  double spare_gaussian_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace pocsim
