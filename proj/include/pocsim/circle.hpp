#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "pocsim/noise.hpp"
#include "pocsim/rng.hpp"

namespace pocsim::circle {

using Complex = std::complex<double>;

/// Gamma(z) = sin(pi z) / (pi z) with Gamma(0) = 1; even, |Gamma| <= 1.
/// Exactly zero at nonzero integers. This is the Fourier factor of the
/// uniform angular measure entering the mode coupling (beta == 1 case).
double sinc_gamma(double z);

/// lambda_k = 2 gamma_k Gamma(k/2) - Gamma(0) - Gamma(k), k >= 1.
/// Since Gamma vanishes at nonzero integers, lambda_1 = 4 gamma_1 / pi - 1
/// (sign changes exactly at gamma_1 = pi/4) and lambda_k = -1 for even k.
double lambda_k(const NoiseSpectrum& spectrum, int k);

/// Linear-stability spectrum of the uniform state.
struct StabilitySpectrum {
  NoiseSpectrum source;
  std::vector<double> lambda;  // lambda[k-1] for k = 1..K
};
StabilitySpectrum stability_spectrum(const NoiseSpectrum& spectrum, int max_k);

/// Truncated Fourier state a_k, k = -K..K, under the d(theta)/2pi
/// convention: a_0 = 1 (mass) and a_{-k} = conj(a_k) (real density).
class SpectralState {
 public:
  explicit SpectralState(int truncation);

  int truncation() const { return trunc_; }
  Complex operator[](int k) const { return a_[idx(k)]; }
  void set(int k, Complex value);  // also sets the conjugate at -k

  double symmetry_violation() const;  // max |a_{-k} - conj(a_k)|
  double mass_violation() const;      // |a_0 - 1|

  std::vector<Complex>& raw() { return a_; }
  const std::vector<Complex>& raw() const { return a_; }
  std::size_t idx(int k) const { return static_cast<std::size_t>(k + trunc_); }

 private:
  int trunc_;
  std::vector<Complex> a_;
};

/// Mode derivative of the pair-alignment equation:
///   da_k/dt = gamma_k sum_n a_{k-n} a_n Gamma(n - k/2) - a_0 a_k.
/// The quadratic loss a_0 a_k is the transform of the bilinear loss term of
/// the angular equation; with gamma_0 = 1 it keeps da_0/dt = 0 exactly, and
/// its linearization at the uniform state reproduces lambda_k above.
/// Requires K >= 2 and a spectrum with max_k >= K.
SpectralState spectral_rhs(const SpectralState& a, const NoiseSpectrum& gamma);

struct SpectralTrajectory {
  std::vector<double> times;
  std::vector<Complex> a1;
  std::vector<double> max_symmetry_violation;
  bool truncation_warning = false;  // |a_K| exceeded 1e-8 along the run
  SpectralState final_state{2};
};

struct SpectralOptions {
  double horizon = 10.0;
  double dt = 0.005;               // must be <= 0.01
  double snapshot_interval = 0.1;
  double truncation_threshold = 1e-8;
};

/// Classic RK4 on spectral_rhs. Conjugate symmetry and a_0 = 1 are
/// maintained to 1e-12 (checked every step; violation throws).
SpectralTrajectory integrate_spectral(const SpectralState& initial,
                                      const NoiseSpectrum& gamma,
                                      const SpectralOptions& options);

/// N angles on [-pi, pi).
struct AngularEnsemble {
  std::vector<double> angles;
  double time = 0.0;

  explicit AngularEnsemble(std::vector<double> theta, double t = 0.0);

  /// Empirical Fourier coefficient (1/N) sum e^{-ik theta_j}.
  Complex fourier(int k) const;
};

/// One pair interaction: a uniform pair (i, j) is replaced by two angles
/// theta_bar + eta_1, theta_bar + eta_2, where theta_bar is the circle
/// midpoint theta_i + rep(theta_j - theta_i)/2 with rep in (-pi, pi] (ties
/// at pi resolved toward +pi) and eta ~ g_tau i.i.d.
struct PairJumpEvent {
  std::uint32_t i = 0, j = 0;
  double midpoint = 0.0;
};
PairJumpEvent pair_jump(AngularEnsemble& ensemble, const WrappedNoise& noise,
                        RngStream& rng);

/// Jump process with total event rate N (each particle interacts about
/// twice per unit time, Kac scaling). Records the empirical a_1 at each
/// snapshot.
struct ParticleTrajectory {
  std::vector<double> times;
  std::vector<Complex> a1;
  std::uint64_t event_count = 0;
};
ParticleTrajectory simulate_circle(AngularEnsemble& ensemble,
                                   const WrappedNoise& noise, double horizon,
                                   double snapshot_interval, RngStream& rng);

/// Rejection sample N angles from the tilted density 1 + 2 b cos(theta)
/// (its a_1 equals b; requires |b| <= 1/2).
std::vector<double> sample_tilted(std::size_t n, double b, RngStream& rng);

/// Replica-averaged empirical |a_1(t)| against the spectral solver on a
/// common physical clock. The particle system collides each particle at
/// rate 2 while the limit equation is normalized to rate 1, so the
/// spectral trajectory is evaluated at 2t (same clock matching as the Kac
/// mean-field solver).
struct ComparisonReport {
  std::vector<double> times;
  std::vector<double> a1_particle;  // |replica mean of empirical a_1|
  std::vector<double> a1_particle_stderr;
  std::vector<double> a1_spectral;
  double sup_difference = 0.0;
  double lambda1 = 0.0;
};

struct ComparisonOptions {
  std::size_t n_particles = 2000;  // >= 500
  std::size_t replicas = 200;      // >= 100
  double tau = 0.2;
  NoiseFamily family = NoiseFamily::kGaussian;
  double initial_a1 = 0.1;
  double horizon = 8.0;
  double snapshot_interval = 0.25;
  int truncation = 64;
  double dt = 0.005;
};

ComparisonReport particle_vs_spectral(const ComparisonOptions& options,
                                      std::uint64_t seed);

}  // namespace pocsim::circle
