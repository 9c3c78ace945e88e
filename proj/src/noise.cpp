#include "pocsim/noise.hpp"

#include <cmath>
#include <stdexcept>

namespace pocsim {

NoiseFamily noise_family_from_string(const std::string& name) {
  if (name == "gaussian") return NoiseFamily::kGaussian;
  if (name == "uniform") return NoiseFamily::kUniform;
  if (name == "point-pair") return NoiseFamily::kPointPair;
  throw std::invalid_argument("unsupported noise family: " + name);
}

std::string to_string(NoiseFamily family) {
  switch (family) {
    case NoiseFamily::kGaussian: return "gaussian";
    case NoiseFamily::kUniform: return "uniform";
    case NoiseFamily::kPointPair: return "point-pair";
  }
  throw std::logic_error("unreachable");
}

WrappedNoise::WrappedNoise(NoiseFamily f, double tau_, double atom_)
    : family(f), tau(tau_), atom(atom_) {
  if (!(tau > 0.0)) throw std::invalid_argument("WrappedNoise: tau must be > 0");
  if (family == NoiseFamily::kPointPair && atom < 0.0)
    throw std::invalid_argument("WrappedNoise: atom site must be >= 0");
}

double wrap_angle(double theta) {
  double y = std::remainder(theta, 2.0 * M_PI);  // (-pi, pi], ties to even
  if (y >= M_PI) y -= 2.0 * M_PI;
  return y;
}

double wrap_angle_half_open(double theta) {
  double y = std::remainder(theta, 2.0 * M_PI);
  if (y <= -M_PI) y += 2.0 * M_PI;
  return y;
}

double base_transform(const WrappedNoise& noise, double s) {
  switch (noise.family) {
    case NoiseFamily::kGaussian:
      return std::exp(-0.5 * s * s);
    case NoiseFamily::kUniform: {
      if (s == 0.0) return 1.0;
      return std::sin(s) / s;
    }
    case NoiseFamily::kPointPair:
      return std::cos(noise.atom * s);
  }
  throw std::logic_error("unreachable");
}

NoiseSpectrum noise_spectrum(const WrappedNoise& noise, int max_k) {
  if (max_k < 1) throw std::invalid_argument("noise_spectrum: K must be >= 1");
  NoiseSpectrum spectrum;
  spectrum.gamma.resize(static_cast<std::size_t>(max_k) + 1);
  spectrum.gamma[0] = 1.0;
  for (int k = 1; k <= max_k; ++k)
    spectrum.gamma[static_cast<std::size_t>(k)] = base_transform(noise, noise.tau * k);
  return spectrum;
}

double sample_wrapped(const WrappedNoise& noise, RngStream& rng) {
  double x = 0.0;
  switch (noise.family) {
    case NoiseFamily::kGaussian:
      x = rng.gaussian();
      break;
    case NoiseFamily::kUniform:
      x = rng.uniform(-1.0, 1.0);
      break;
    case NoiseFamily::kPointPair:
      x = (rng.next_u64() & 1ULL) ? noise.atom : -noise.atom;
      break;
  }
  return wrap_angle(noise.tau * x);
}

}  // namespace pocsim
