#pragma once

#include <string>
#include <vector>

#include "pocsim/rng.hpp"

namespace pocsim {

/// Base density families for circle noise. All are symmetric about 0:
///   kGaussian  : standard normal
///   kUniform   : uniform on [-1, 1]
///   kPointPair : (delta_{+a} + delta_{-a})/2; a = 0 is a point mass at 0
enum class NoiseFamily { kGaussian, kUniform, kPointPair };

NoiseFamily noise_family_from_string(const std::string& name);
std::string to_string(NoiseFamily family);

/// Noise law on the circle: a base density rho scaled by the concentration
/// tau and wrapped onto [-pi, pi). With the normalized measure d(theta)/2pi,
/// the wrapped density is
///   g_tau(y) = 2 pi sum_j (1/tau) rho((y - 2 pi j)/tau),
/// which integrates to 1. Small tau concentrates g_tau at 0.
struct WrappedNoise {
  NoiseFamily family = NoiseFamily::kGaussian;
  double tau = 1.0;
  double atom = 1.0;  // site of the point-pair family; ignored otherwise

  WrappedNoise() = default;
  WrappedNoise(NoiseFamily f, double tau_, double atom_ = 1.0);
};

/// Fourier coefficients gamma_k of a wrapped noise law, k = 0..K, under the
/// convention a_k = integral of f(theta) e^{-ik theta} d(theta)/2pi. For
/// every supported family gamma_0 = 1 and |gamma_k| <= 1; wrapping leaves
/// gamma_k = rho_hat(tau k) with rho_hat the transform of the base density.
struct NoiseSpectrum {
  std::vector<double> gamma;  // gamma[k], k = 0..K

  int max_k() const { return static_cast<int>(gamma.size()) - 1; }
  double operator[](int k) const { return gamma[static_cast<std::size_t>(k)]; }
};

/// Closed-form transform rho_hat(s) of the base density of `noise`.
double base_transform(const WrappedNoise& noise, double s);

/// gamma_k = rho_hat(tau k) for k = 0..K. Requires K >= 1.
NoiseSpectrum noise_spectrum(const WrappedNoise& noise, int max_k);

/// One draw from g_tau: sample the base density, scale by tau, reduce
/// mod 2pi into [-pi, pi).
double sample_wrapped(const WrappedNoise& noise, RngStream& rng);

/// Reduce an angle to the principal interval [-pi, pi).
double wrap_angle(double theta);

/// Reduce an angle to (-pi, pi] (ties at pi resolved toward +pi).
double wrap_angle_half_open(double theta);

}  // namespace pocsim
