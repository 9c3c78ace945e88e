#include "pocsim/rng.hpp"

#include <cmath>

namespace pocsim {

namespace {

// SplitMix64 finalizer / sequence (Steele, Lea, Flood 2014).
constexpr std::uint64_t kSplitMixGamma = 0x9E3779B97F4A7C15ULL;

std::uint64_t splitmix_mix(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ULL;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBULL;
  z ^= z >> 31;
  return z;
}

struct SplitMix {
  std::uint64_t x;
  std::uint64_t next() { return splitmix_mix(x += kSplitMixGamma); }
};

std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id) {
  // Mix seed and stream through separate finalizers before expanding, so
  // nearby (seed, id) pairs land far apart in state space.
  SplitMix sm{splitmix_mix(seed) ^ splitmix_mix(stream_id + kSplitMixGamma)};
  for (auto& w : state_) w = sm.next();
  if ((state_[0] | state_[1] | state_[2] | state_[3]) == 0) state_[0] = 1;
}

std::uint64_t RngStream::next_u64() {
  // xoshiro256++
  const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
  const std::uint64_t t = state_[1] << 17;
  state_[2] ^= state_[0];
  state_[3] ^= state_[1];
  state_[1] ^= state_[2];
  state_[0] ^= state_[3];
  state_[2] ^= t;
  state_[3] = rotl(state_[3], 45);
  return result;
}

double RngStream::uniform01() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::uniform(double lo, double hi) {
  return lo + (hi - lo) * uniform01();
}

double RngStream::uniform_angle() {
  // u = 0 maps to +pi, u -> 1 approaches -pi: the interval is (-pi, pi].
  return M_PI - 2.0 * M_PI * uniform01();
}

std::uint64_t RngStream::below(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("RngStream::below: n must be positive");
  // Rejection to remove modulo bias.
  const std::uint64_t limit = ~std::uint64_t{0} - ~std::uint64_t{0} % n;
  std::uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return x % n;
}

double RngStream::gaussian() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_gaussian_;
  }
  double u, v, s;
  do {
    u = 2.0 * uniform01() - 1.0;
    v = 2.0 * uniform01() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double m = std::sqrt(-2.0 * std::log(s) / s);
  spare_gaussian_ = v * m;
  has_spare_ = true;
  return u * m;
}

double RngStream::exponential(double rate) {
  if (!(rate > 0.0)) throw std::invalid_argument("exponential: rate must be > 0");
  // 1 - uniform01() lies in (0, 1], so the log is finite.
  return -std::log(1.0 - uniform01()) / rate;
}

std::uint64_t RngStream::poisson(double mean) {
  if (!(mean >= 0.0)) throw std::invalid_argument("poisson: mean must be >= 0");
  if (mean == 0.0) return 0;
  if (mean < 30.0) {
    // Knuth: count multiplications until the product drops under e^-mean.
    const double threshold = std::exp(-mean);
    std::uint64_t k = 0;
    double p = uniform01();
    while (p > threshold) {
      ++k;
      p *= uniform01();
    }
    return k;
  }
  // PTRS transformed rejection (W. Hoermann, 1993), valid for mean >= 10.
  const double b = 0.931 + 2.53 * std::sqrt(mean);
  const double a = -0.059 + 0.02483 * b;
  const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  const double v_r = 0.9277 - 3.6224 / (b - 2.0);
  for (;;) {
    double u = uniform01() - 0.5;
    double v = uniform01();
    double us = 0.5 - std::fabs(u);
    double k = std::floor((2.0 * a / us + b) * u + mean + 0.43);
    if (us >= 0.07 && v <= v_r) return static_cast<std::uint64_t>(k);
    if (k < 0.0 || (us < 0.013 && v > us)) continue;
    if (std::log(v * inv_alpha / (a / (us * us) + b)) <=
        k * std::log(mean) - mean - std::lgamma(k + 1.0)) {
      return static_cast<std::uint64_t>(k);
    }
  }
}

std::vector<double> RngStream::uniform_sphere(std::size_t n, double radius) {
  if (n < 2) throw std::invalid_argument("uniform_sphere: dimension must be >= 2");
  if (!(radius > 0.0)) throw std::invalid_argument("uniform_sphere: radius must be > 0");
  std::vector<double> x(n);
  double norm2 = 0.0;
  do {
    norm2 = 0.0;
    for (auto& xi : x) {
      xi = gaussian();
      norm2 += xi * xi;
    }
  } while (norm2 == 0.0);
  const double scale = radius / std::sqrt(norm2);
  for (auto& xi : x) xi *= scale;
  return x;
}

}  // namespace pocsim
