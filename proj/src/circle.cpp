#include "pocsim/circle.hpp"

#include <cmath>
#include <stdexcept>

#include "pocsim/stats.hpp"

namespace pocsim::circle {

double sinc_gamma(double z) {
  if (z == 0.0) return 1.0;
  if (z == std::round(z)) return 0.0;  // sin(pi k) = 0 for integer k
  const double pz = M_PI * z;
  if (std::fabs(pz) < 1e-4) {
    const double p2 = pz * pz;
    return 1.0 - p2 / 6.0 * (1.0 - p2 / 20.0);
  }
  return std::sin(pz) / pz;
}

double lambda_k(const NoiseSpectrum& spectrum, int k) {
  if (k < 1) throw std::invalid_argument("lambda_k: k must be >= 1");
  if (k > spectrum.max_k())
    throw std::invalid_argument("lambda_k: spectrum shorter than k");
  return 2.0 * spectrum[k] * sinc_gamma(0.5 * k) - sinc_gamma(0.0) -
         sinc_gamma(static_cast<double>(k));
}

StabilitySpectrum stability_spectrum(const NoiseSpectrum& spectrum, int max_k) {
  if (max_k < 1 || max_k > spectrum.max_k())
    throw std::invalid_argument("stability_spectrum: bad truncation");
  StabilitySpectrum out;
  out.source = spectrum;
  out.lambda.reserve(static_cast<std::size_t>(max_k));
  for (int k = 1; k <= max_k; ++k) out.lambda.push_back(lambda_k(spectrum, k));
  return out;
}

SpectralState::SpectralState(int truncation) : trunc_(truncation) {
  if (trunc_ < 2) throw std::invalid_argument("SpectralState: K must be >= 2");
  a_.assign(2 * static_cast<std::size_t>(trunc_) + 1, Complex{0.0, 0.0});
  a_[idx(0)] = Complex{1.0, 0.0};
}

void SpectralState::set(int k, Complex value) {
  if (k < -trunc_ || k > trunc_)
    throw std::invalid_argument("SpectralState::set: mode out of range");
  if (k == 0) {
    a_[idx(0)] = Complex{value.real(), 0.0};
    return;
  }
  a_[idx(k)] = value;
  a_[idx(-k)] = std::conj(value);
}

double SpectralState::symmetry_violation() const {
  double worst = 0.0;
  for (int k = 1; k <= trunc_; ++k)
    worst = std::max(worst, std::abs(a_[idx(-k)] - std::conj(a_[idx(k)])));
  worst = std::max(worst, std::fabs(a_[idx(0)].imag()));
  return worst;
}

double SpectralState::mass_violation() const {
  return std::abs(a_[idx(0)] - Complex{1.0, 0.0});
}

SpectralState spectral_rhs(const SpectralState& a, const NoiseSpectrum& gamma) {
  const int K = a.truncation();
  if (gamma.max_k() < K)
    throw std::invalid_argument("spectral_rhs: spectrum shorter than truncation");
  SpectralState out(K);
  const Complex a0 = a[0];
  for (int k = -K; k <= K; ++k) {
    Complex gain{0.0, 0.0};
    const int n_lo = std::max(-K, k - K);
    const int n_hi = std::min(K, k + K);
    for (int n = n_lo; n <= n_hi; ++n) {
      const double w = sinc_gamma(n - 0.5 * k);
      if (w == 0.0) continue;
      gain += a[k - n] * a[n] * w;
    }
    out.raw()[out.idx(k)] = gamma[std::abs(k)] * gain - a0 * a[k];
  }
  return out;
}

namespace {

void axpy(SpectralState& y, double alpha, const SpectralState& x) {
  for (std::size_t i = 0; i < y.raw().size(); ++i) y.raw()[i] += alpha * x.raw()[i];
}

}  // namespace

SpectralTrajectory integrate_spectral(const SpectralState& initial,
                                      const NoiseSpectrum& gamma,
                                      const SpectralOptions& options) {
  if (!(options.dt > 0.0) || options.dt > 0.01)
    throw std::invalid_argument("integrate_spectral: require 0 < dt <= 0.01");
  const int K = initial.truncation();
  SpectralState a = initial;

  SpectralTrajectory traj;
  traj.final_state = a;
  double next_snapshot = 0.0;
  double worst_sym = 0.0;
  const auto record = [&](double t) {
    traj.times.push_back(t);
    traj.a1.push_back(a[1]);
    traj.max_symmetry_violation.push_back(worst_sym);
  };

  const std::size_t n_steps =
      static_cast<std::size_t>(std::ceil(options.horizon / options.dt - 1e-9));
  double t = 0.0;
  record(t);
  next_snapshot += options.snapshot_interval;
  for (std::size_t step = 0; step < n_steps; ++step) {
    const double h = std::min(options.dt, options.horizon - t);
    const SpectralState k1 = spectral_rhs(a, gamma);
    SpectralState s2 = a;
    axpy(s2, 0.5 * h, k1);
    const SpectralState k2 = spectral_rhs(s2, gamma);
    SpectralState s3 = a;
    axpy(s3, 0.5 * h, k2);
    const SpectralState k3 = spectral_rhs(s3, gamma);
    SpectralState s4 = a;
    axpy(s4, h, k3);
    const SpectralState k4 = spectral_rhs(s4, gamma);
    axpy(a, h / 6.0, k1);
    axpy(a, h / 3.0, k2);
    axpy(a, h / 3.0, k3);
    axpy(a, h / 6.0, k4);
    t += h;

    worst_sym = std::max(worst_sym, a.symmetry_violation());
    if (a.symmetry_violation() > 1e-12 || a.mass_violation() > 1e-12)
      throw std::runtime_error("integrate_spectral: state invariant violated");
    // Re-project the conjugate half so rounding cannot accumulate.
    for (int k = 1; k <= K; ++k) a.set(k, a[k]);
    if (std::abs(a[K]) > options.truncation_threshold) traj.truncation_warning = true;

    if (t >= next_snapshot - 1e-12 || step + 1 == n_steps) {
      record(t);
      next_snapshot += options.snapshot_interval;
    }
  }
  traj.final_state = a;
  return traj;
}

AngularEnsemble::AngularEnsemble(std::vector<double> theta, double t)
    : angles(std::move(theta)), time(t) {
  if (angles.size() < 2) throw std::invalid_argument("AngularEnsemble: N must be >= 2");
  for (double& a : angles) a = wrap_angle(a);
}

Complex AngularEnsemble::fourier(int k) const {
  Complex sum{0.0, 0.0};
  for (double a : angles) sum += std::exp(Complex{0.0, -k * a});
  return sum / static_cast<double>(angles.size());
}

PairJumpEvent pair_jump(AngularEnsemble& ensemble, const WrappedNoise& noise,
                        RngStream& rng) {
  const std::size_t n = ensemble.angles.size();
  const std::uint32_t i = static_cast<std::uint32_t>(rng.below(n));
  std::uint32_t j = static_cast<std::uint32_t>(rng.below(n - 1));
  if (j >= i) ++j;
  const double ti = ensemble.angles[i];
  const double tj = ensemble.angles[j];
  const double midpoint = wrap_angle(ti + 0.5 * wrap_angle_half_open(tj - ti));
  ensemble.angles[i] = wrap_angle(midpoint + sample_wrapped(noise, rng));
  ensemble.angles[j] = wrap_angle(midpoint + sample_wrapped(noise, rng));
  return {i, j, midpoint};
}

ParticleTrajectory simulate_circle(AngularEnsemble& ensemble,
                                   const WrappedNoise& noise, double horizon,
                                   double snapshot_interval, RngStream& rng) {
  if (!(horizon > 0.0)) throw std::invalid_argument("simulate_circle: T must be > 0");
  const double total_rate = static_cast<double>(ensemble.angles.size());
  const double t_end = ensemble.time + horizon;

  ParticleTrajectory traj;
  auto snapshot = [&](double t) {
    traj.times.push_back(t);
    traj.a1.push_back(ensemble.fourier(1));
  };
  snapshot(ensemble.time);
  double next_snapshot =
      snapshot_interval > 0.0 ? ensemble.time + snapshot_interval : t_end;

  double t = ensemble.time;
  for (;;) {
    t += rng.exponential(total_rate);
    while (t > next_snapshot && next_snapshot < t_end) {
      ensemble.time = next_snapshot;
      snapshot(next_snapshot);
      next_snapshot += snapshot_interval;
    }
    if (t > t_end) break;
    pair_jump(ensemble, noise, rng);
    ensemble.time = t;
    ++traj.event_count;
  }
  ensemble.time = t_end;
  snapshot(t_end);
  return traj;
}

std::vector<double> sample_tilted(std::size_t n, double b, RngStream& rng) {
  if (std::fabs(b) > 0.5)
    throw std::invalid_argument("sample_tilted: |b| must be <= 1/2");
  std::vector<double> out(n);
  const double fmax = 1.0 + 2.0 * std::fabs(b);
  for (auto& theta : out) {
    for (;;) {
      const double candidate = rng.uniform(-M_PI, M_PI);
      const double f = 1.0 + 2.0 * b * std::cos(candidate);
      if (rng.uniform01() * fmax < f) {
        theta = candidate;
        break;
      }
    }
  }
  return out;
}

ComparisonReport particle_vs_spectral(const ComparisonOptions& options,
                                      std::uint64_t seed) {
  if (options.n_particles < 500)
    throw std::invalid_argument("particle_vs_spectral: N must be >= 500");
  if (options.replicas < 100)
    throw std::invalid_argument("particle_vs_spectral: replicas must be >= 100");
  const WrappedNoise noise(options.family, options.tau);
  const NoiseSpectrum gamma = noise_spectrum(noise, options.truncation);

  const std::size_t n_snapshots = static_cast<std::size_t>(
      std::round(options.horizon / options.snapshot_interval)) + 1;

  // Particle side: replica mean of the empirical a_1 per snapshot.
  std::vector<std::vector<Complex>> a1_by_snapshot(
      n_snapshots, std::vector<Complex>(options.replicas));
  for (std::size_t r = 0; r < options.replicas; ++r) {
    RngStream rng(seed, r);
    AngularEnsemble ensemble(
        sample_tilted(options.n_particles, options.initial_a1, rng));
    const ParticleTrajectory traj = simulate_circle(
        ensemble, noise, options.horizon, options.snapshot_interval, rng);
    if (traj.times.size() != n_snapshots)
      throw std::runtime_error("particle_vs_spectral: snapshot grid mismatch");
    for (std::size_t s = 0; s < n_snapshots; ++s) a1_by_snapshot[s][r] = traj.a1[s];
  }

  // Spectral side on the matched clock: integrate to 2T and read at 2t.
  SpectralState a0(options.truncation);
  a0.set(1, Complex{options.initial_a1, 0.0});
  SpectralOptions sopt;
  sopt.horizon = 2.0 * options.horizon;
  sopt.dt = options.dt;
  sopt.snapshot_interval = 2.0 * options.snapshot_interval;
  const SpectralTrajectory spectral = integrate_spectral(a0, gamma, sopt);

  ComparisonReport report;
  report.lambda1 = lambda_k(gamma, 1);
  for (std::size_t s = 0; s < n_snapshots; ++s) {
    const double t = static_cast<double>(s) * options.snapshot_interval;
    std::vector<double> moduli(options.replicas);
    for (std::size_t r = 0; r < options.replicas; ++r)
      moduli[r] = std::abs(a1_by_snapshot[s][r]);
    const double mean_mod = mean(moduli);
    const double se = standard_error(moduli);

    // Nearest spectral sample to 2t (grids align by construction).
    std::size_t best = 0;
    double best_gap = 1e300;
    for (std::size_t q = 0; q < spectral.times.size(); ++q) {
      const double gap = std::fabs(spectral.times[q] - 2.0 * t);
      if (gap < best_gap) {
        best_gap = gap;
        best = q;
      }
    }
    report.times.push_back(t);
    report.a1_particle.push_back(mean_mod);
    report.a1_particle_stderr.push_back(se);
    report.a1_spectral.push_back(std::abs(spectral.a1[best]));
    report.sup_difference = std::max(
        report.sup_difference, std::fabs(report.a1_particle.back() -
                                         report.a1_spectral.back()));
  }
  return report;
}

}  // namespace pocsim::circle
