#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "pocsim/rng.hpp"

namespace pocsim::boltz3 {

using Vec3 = std::array<double, 3>;

Vec3 operator+(const Vec3& a, const Vec3& b);
Vec3 operator-(const Vec3& a, const Vec3& b);
Vec3 operator*(double s, const Vec3& a);
double dot(const Vec3& a, const Vec3& b);
double norm(const Vec3& a);

/// Binary collision with unit impact direction sigma:
///   v_i* = (v_i + v_j)/2 + sigma |v_i - v_j| / 2
///   v_j* = (v_i + v_j)/2 - sigma |v_i - v_j| / 2
/// Momentum and energy sums are exact in exact arithmetic. Throws if sigma
/// is not unit to 1e-12.
std::pair<Vec3, Vec3> collide(const Vec3& vi, const Vec3& vj, const Vec3& sigma);

/// Bounded collision kernel gamma(|v-w|) b(theta): gamma is a bounded
/// nonnegative function of the relative speed with declared bound
/// gamma_max; b is a probability density on the sphere for the angle
/// between sigma and the relative velocity.
struct CollisionKernel {
  enum class GammaFamily { kConstant, kCappedLinear };
  GammaFamily gamma_family = GammaFamily::kConstant;
  double gamma_value = 1.0;  // constant value, or slope for capped-linear
  double gamma_cap = 1.0;    // cap of the capped-linear family
  double gamma_max = 1.0;    // declared bound (validated at runtime)

  enum class AngularFamily { kIsotropic, kLinearCos };
  AngularFamily angular_family = AngularFamily::kIsotropic;
  double anisotropy = 0.0;  // c in b(u) ~ (1 + c u)/2, |c| <= 1

  static CollisionKernel constant(double value);
  static CollisionKernel capped_linear(double slope, double cap);

  double gamma(double rel_speed) const;  // throws if above gamma_max
};

/// N velocity 3-vectors. Total momentum and kinetic energy are recorded at
/// construction for conservation audits.
struct VelocityEnsemble3 {
  std::vector<Vec3> velocities;
  double time = 0.0;
  Vec3 initial_momentum{0.0, 0.0, 0.0};
  double initial_energy = 0.0;

  explicit VelocityEnsemble3(std::vector<Vec3> v);
  Vec3 total_momentum() const;
  double kinetic_energy() const;  // sum |v|^2 (compensated)
};

/// Raw randomness for one candidate event; drawing it separately from
/// applying it lets two coupled ensembles consume identical draws and lets
/// tests replay a run with transformed sigmas.
struct CandidateEvent {
  double wait = 0.0;  // exponential at the candidate rate
  std::uint32_t i = 0, j = 1;
  double u_cos = 0.0, u_azimuth = 0.0;  // sigma draws
  double u_accept = 0.0;                // thinning uniform
};

/// Candidate rate N gamma_max / 2: with gamma == gamma_max every candidate
/// is accepted and each particle participates in about one collision per
/// unit time.
double candidate_rate(std::size_t n, const CollisionKernel& kernel);

CandidateEvent draw_candidate(std::size_t n, const CollisionKernel& kernel,
                              RngStream& rng);

/// Unit impact direction from the candidate's uniforms. Isotropic kernels
/// realize sigma in world coordinates (independent of the pair); the
/// anisotropic family tilts the polar angle against rel_dir.
Vec3 realize_sigma(const CollisionKernel& kernel, const Vec3& rel_dir,
                   double u_cos, double u_azimuth);

/// Applies one candidate to the ensemble (thinning acceptance against
/// gamma/gamma_max). Returns true when the collision was accepted.
/// `sigma_out` receives the realized direction when non-null.
bool apply_candidate(VelocityEnsemble3& ensemble, const CollisionKernel& kernel,
                     const CandidateEvent& candidate, Vec3* sigma_out = nullptr);

struct CollisionEventLogRow {
  double time;
  std::uint32_t i, j;
  Vec3 sigma;
  bool accepted;
};

struct Trajectory3 {
  std::vector<double> snapshot_times;
  std::vector<std::vector<Vec3>> snapshots;
  std::vector<CollisionEventLogRow> events;  // filled when log_events
  std::uint64_t accepted = 0;
  std::uint64_t candidates = 0;
};

struct SimulateOptions3 {
  double horizon = 1.0;
  double snapshot_interval = 0.0;  // 0: endpoints only
  bool log_events = false;
};

/// Majorant-thinned jump process, equal in law to per-pair exponential
/// clocks with rates gamma(|v_i - v_j|)/(N-1) for bounded gamma.
Trajectory3 simulate_collisions(VelocityEnsemble3& ensemble,
                                const CollisionKernel& kernel,
                                const SimulateOptions3& options, RngStream& rng);

/// Synchronous Nanbu sweep: each particle collides with probability
/// gamma(|v - w|) dt against an independently drawn partner w from the
/// pre-step ensemble (one-sided update; momentum and energy are conserved
/// in expectation only). Requires gamma_max * dt <= 0.1.
void nanbu_meanfield3_step(std::vector<Vec3>& vs, const CollisionKernel& kernel,
                           double dt, RngStream& rng);
void nanbu_meanfield3(std::vector<Vec3>& vs, const CollisionKernel& kernel,
                      double horizon, double dt, RngStream& rng);

/// Two ensembles evolved under common randomness (same clocks, pairs,
/// sigma uniforms, and acceptance uniforms); exact W1 via matching at each
/// snapshot. N must not exceed the exact-matching cap.
struct TanakaReport {
  std::vector<double> times;
  std::vector<double> w1_mean;
  std::vector<double> w1_stderr;
  double initial_w1 = 0.0;
  double max_increase_sigmas = 0.0;  // max (mean_t - mean_0)/stderr_t
};

struct TanakaOptions {
  std::size_t n_particles = 256;
  std::size_t replicas = 50;
  std::size_t snapshots = 20;
  double horizon = 4.0;
  CollisionKernel kernel = CollisionKernel::constant(1.0);
};

using InitialSampler = std::function<Vec3(RngStream&)>;

TanakaReport tanaka_contraction_check(const InitialSampler& p0a,
                                      const InitialSampler& p0b,
                                      const TanakaOptions& options,
                                      std::uint64_t seed);

}  // namespace pocsim::boltz3
