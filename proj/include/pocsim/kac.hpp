#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "pocsim/rng.hpp"

namespace pocsim::kac {

/// One pair rotation: indices canonicalized to i < j, angle in (-pi, pi].
struct RotationEvent {
  double time = 0.0;
  std::uint32_t i = 0;
  std::uint32_t j = 1;
  double theta = 0.0;
};

/// N one-dimensional velocities constrained to the energy sphere
/// (1/2) sum v_i^2 = N (each particle has unit expected energy). States are
/// renormalized onto the sphere on construction; simulation renormalizes
/// every 10^5 events to absorb rounding drift and logs each renormalization.
class KacState {
 public:
  /// Renormalizes the given velocities onto the sphere. Throws if N < 2 or
  /// if all velocities vanish.
  explicit KacState(std::vector<double> velocities, double time = 0.0);

  const std::vector<double>& velocities() const { return v_; }
  std::size_t size() const { return v_.size(); }
  double time() const { return time_; }

  /// (1/2) sum v_i^2, accumulated with compensated summation.
  double energy() const;

  void apply(const RotationEvent& event);
  void renormalize();
  void set_time(double t) { time_ = t; }

 private:
  std::vector<double> v_;
  double time_ = 0.0;
};

/// Uniform sample from the Kac sphere: sample_uniform_sphere(N, sqrt(2N)).
KacState equilibrium_sample(std::size_t n, RngStream& rng);

/// Rotate a velocity pair by theta. Energy v^2 + w^2 is exact in exact
/// arithmetic; in floating point it holds to a few ulp.
std::pair<double, double> kac_rotate(double v, double w, double theta);

struct Trajectory {
  std::vector<double> snapshot_times;
  std::vector<std::vector<double>> snapshots;  // velocities at each time
  std::vector<RotationEvent> events;           // filled when log_events
  std::uint64_t event_count = 0;
  std::uint64_t renormalizations = 0;
};

/// Rotation-angle law: uniform on (-pi, pi] by default; any bounded density
/// is admissible, and a wrapped Gaussian of concentration tau is provided.
/// Singular laws are excluded.
struct ThetaLaw {
  enum class Kind { kUniform, kWrappedGaussian };
  Kind kind = Kind::kUniform;
  double tau = 1.0;
};

struct SimulateOptions {
  double horizon = 1.0;             // T > 0
  double snapshot_interval = 0.0;   // 0: only t=0 and t=T
  bool log_events = false;
  ThetaLaw theta_law{};
};

/// Jump process of the master equation: exponential clocks at total rate N
/// (so each particle collides about twice per unit time), pair chosen
/// uniformly among the N(N-1)/2 pairs, theta ~ Uniform(-pi, pi].
Trajectory simulate_kac(KacState& state, const SimulateOptions& options,
                        RngStream& rng);

/// Sample ensemble for the mean-field (one-particle) evolution.
/// The per-particle collision rate nu defaults to 2, matching the
/// N-particle clock: marginalizing the master equation over one particle
/// yields a factor 2 in front of the collision integral.
class MeanFieldEnsemble {
 public:
  explicit MeanFieldEnsemble(std::vector<double> velocities, double nu = 2.0);

  const std::vector<double>& velocities() const { return v_; }
  double nu() const { return nu_; }
  double time() const { return time_; }

  double moment(int order) const;

  /// Nanbu step over [time, time+dt]: each particle independently collides
  /// with probability nu*dt against a partner drawn uniformly from the
  /// current ensemble, taking the first output of kac_rotate with
  /// theta ~ Uniform(-pi, pi]. Requires nu*dt <= 0.1.
  void step(double dt, RngStream& rng);
  void evolve(double horizon, double dt, RngStream& rng);

  /// Event-driven variant of the same dynamics (the dt -> 0 limit of the
  /// Nanbu sweep): single-particle refreshes at total rate M nu. Free of
  /// time-discretization bias; used where the ensemble serves as the
  /// reference limit solution.
  void evolve_exact(double horizon, RngStream& rng);

 private:
  std::vector<double> v_;
  double nu_;
  double time_ = 0.0;
};

/// Sup over snapshot times of W1 between the first-marginal samples of
/// N-particle replicas and a mean-field ensemble evolved from the same
/// initial law (both solvers run on the same physical clock).
struct MarginalGapReport {
  std::vector<double> times;
  std::vector<double> w1;  // per snapshot
  double sup_w1 = 0.0;
  // The sample sets behind each W1 value, for resampling-based errors.
  std::vector<std::vector<double>> marginal_sets;
  std::vector<std::vector<double>> meanfield_sets;
};

struct MarginalGapOptions {
  std::size_t n_particles = 100;
  std::size_t replicas = 1000;
  std::size_t meanfield_size = 10000;  // M >= 10 N
  double horizon = 2.0;
  double snapshot_interval = 0.5;
};

/// Initial law shared by both levels: i.i.d. two-point velocities +-sqrt(2)
/// (already on the sphere, so the N-particle renormalization is exact).
MarginalGapReport marginal_gap_two_point(const MarginalGapOptions& options,
                                         std::uint64_t seed);

}  // namespace pocsim::kac
