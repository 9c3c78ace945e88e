#include "pocsim/boltzmann3.hpp"

#include <cmath>
#include <stdexcept>

#include "pocsim/measures.hpp"
#include "pocsim/stats.hpp"

namespace pocsim::boltz3 {

Vec3 operator+(const Vec3& a, const Vec3& b) {
  return {a[0] + b[0], a[1] + b[1], a[2] + b[2]};
}
Vec3 operator-(const Vec3& a, const Vec3& b) {
  return {a[0] - b[0], a[1] - b[1], a[2] - b[2]};
}
Vec3 operator*(double s, const Vec3& a) { return {s * a[0], s * a[1], s * a[2]}; }
double dot(const Vec3& a, const Vec3& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}
double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

std::pair<Vec3, Vec3> collide(const Vec3& vi, const Vec3& vj, const Vec3& sigma) {
  if (std::fabs(norm(sigma) - 1.0) > 1e-12)
    throw std::invalid_argument("collide: sigma must be a unit vector");
  const Vec3 center = 0.5 * (vi + vj);
  const Vec3 spread = 0.5 * norm(vi - vj) * sigma;
  return {center + spread, center - spread};
}

CollisionKernel CollisionKernel::constant(double value) {
  if (!(value > 0.0)) throw std::invalid_argument("kernel: gamma must be > 0");
  CollisionKernel k;
  k.gamma_family = GammaFamily::kConstant;
  k.gamma_value = value;
  k.gamma_max = value;
  return k;
}

CollisionKernel CollisionKernel::capped_linear(double slope, double cap) {
  if (!(slope > 0.0) || !(cap > 0.0))
    throw std::invalid_argument("kernel: slope and cap must be > 0");
  CollisionKernel k;
  k.gamma_family = GammaFamily::kCappedLinear;
  k.gamma_value = slope;
  k.gamma_cap = cap;
  k.gamma_max = cap;
  return k;
}

double CollisionKernel::gamma(double rel_speed) const {
  double g = 0.0;
  switch (gamma_family) {
    case GammaFamily::kConstant:
      g = gamma_value;
      break;
    case GammaFamily::kCappedLinear:
      g = std::min(gamma_value * rel_speed, gamma_cap);
      break;
  }
  if (g > gamma_max)
    throw std::runtime_error("collision kernel: gamma exceeded its declared bound");
  return g;
}

VelocityEnsemble3::VelocityEnsemble3(std::vector<Vec3> v)
    : velocities(std::move(v)) {
  if (velocities.size() < 2)
    throw std::invalid_argument("VelocityEnsemble3: N must be >= 2");
  initial_momentum = total_momentum();
  initial_energy = kinetic_energy();
}

Vec3 VelocityEnsemble3::total_momentum() const {
  CompensatedSum x, y, z;
  for (const auto& v : velocities) {
    x.add(v[0]);
    y.add(v[1]);
    z.add(v[2]);
  }
  return {x.value(), y.value(), z.value()};
}

double VelocityEnsemble3::kinetic_energy() const {
  CompensatedSum e;
  for (const auto& v : velocities) e.add(dot(v, v));
  return e.value();
}

double candidate_rate(std::size_t n, const CollisionKernel& kernel) {
  return 0.5 * static_cast<double>(n) * kernel.gamma_max;
}

CandidateEvent draw_candidate(std::size_t n, const CollisionKernel& kernel,
                              RngStream& rng) {
  CandidateEvent c;
  c.wait = rng.exponential(candidate_rate(n, kernel));
  const auto i = static_cast<std::uint32_t>(rng.below(n));
  auto j = static_cast<std::uint32_t>(rng.below(n - 1));
  if (j >= i) ++j;
  c.i = std::min(i, j);
  c.j = std::max(i, j);
  c.u_cos = rng.uniform01();
  c.u_azimuth = rng.uniform01();
  c.u_accept = rng.uniform01();
  return c;
}

namespace {

// Orthonormal completion of a unit vector (not rotation-equivariant; only
// the anisotropic family uses it).
void complete_frame(const Vec3& n, Vec3& e1, Vec3& e2) {
  const Vec3 axis = std::fabs(n[0]) < 0.9 ? Vec3{1.0, 0.0, 0.0} : Vec3{0.0, 1.0, 0.0};
  const double c = dot(axis, n);
  e1 = axis - c * n;
  const double len = norm(e1);
  e1 = (1.0 / len) * e1;
  e2 = {n[1] * e1[2] - n[2] * e1[1], n[2] * e1[0] - n[0] * e1[2],
        n[0] * e1[1] - n[1] * e1[0]};
}

}  // namespace

Vec3 realize_sigma(const CollisionKernel& kernel, const Vec3& rel_dir,
                   double u_cos, double u_azimuth) {
  const double phi = 2.0 * M_PI * u_azimuth;
  if (kernel.angular_family == CollisionKernel::AngularFamily::kIsotropic) {
    const double z = 2.0 * u_cos - 1.0;
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    return {r * std::cos(phi), r * std::sin(phi), z};
  }
  // b(u) ~ (1 + c u)/2 on u = cos(theta) in [-1, 1]; invert the CDF.
  const double c = kernel.anisotropy;
  double u;
  if (std::fabs(c) < 1e-12) {
    u = 2.0 * u_cos - 1.0;
  } else {
    // F(u) = (u+1)/2 + c (u^2 - 1)/4 = v
    const double disc = 0.25 - c * (0.5 - 0.25 * c - u_cos);
    u = (-0.5 + std::sqrt(std::max(0.0, disc))) / (0.5 * c);
    u = std::clamp(u, -1.0, 1.0);
  }
  const double rlen = norm(rel_dir);
  if (!(rlen > 0.0)) {
    const double z = 2.0 * u_cos - 1.0;
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    return {r * std::cos(phi), r * std::sin(phi), z};
  }
  const Vec3 n = (1.0 / rlen) * rel_dir;
  Vec3 e1, e2;
  complete_frame(n, e1, e2);
  const double s = std::sqrt(std::max(0.0, 1.0 - u * u));
  return u * n + (s * std::cos(phi)) * e1 + (s * std::sin(phi)) * e2;
}

bool apply_candidate(VelocityEnsemble3& ensemble, const CollisionKernel& kernel,
                     const CandidateEvent& candidate, Vec3* sigma_out) {
  const Vec3& vi = ensemble.velocities[candidate.i];
  const Vec3& vj = ensemble.velocities[candidate.j];
  const Vec3 rel = vi - vj;
  const Vec3 sigma = realize_sigma(kernel, rel, candidate.u_cos, candidate.u_azimuth);
  if (sigma_out) *sigma_out = sigma;
  if (candidate.u_accept * kernel.gamma_max >= kernel.gamma(norm(rel))) return false;
  auto [wi, wj] = collide(vi, vj, sigma);
  ensemble.velocities[candidate.i] = wi;
  ensemble.velocities[candidate.j] = wj;
  return true;
}

Trajectory3 simulate_collisions(VelocityEnsemble3& ensemble,
                                const CollisionKernel& kernel,
                                const SimulateOptions3& options, RngStream& rng) {
  if (!(options.horizon > 0.0))
    throw std::invalid_argument("simulate_collisions: T must be > 0");
  const std::size_t n = ensemble.velocities.size();
  const double t_end = ensemble.time + options.horizon;

  Trajectory3 traj;
  auto snapshot = [&](double t) {
    traj.snapshot_times.push_back(t);
    traj.snapshots.push_back(ensemble.velocities);
  };
  snapshot(ensemble.time);
  double next_snapshot = options.snapshot_interval > 0.0
                             ? ensemble.time + options.snapshot_interval
                             : t_end;

  double t = ensemble.time;
  for (;;) {
    const CandidateEvent cand = draw_candidate(n, kernel, rng);
    t += cand.wait;
    while (t > next_snapshot && next_snapshot < t_end) {
      ensemble.time = next_snapshot;
      snapshot(next_snapshot);
      next_snapshot += options.snapshot_interval;
    }
    if (t > t_end) break;
    Vec3 sigma;
    const bool accepted = apply_candidate(ensemble, kernel, cand, &sigma);
    ensemble.time = t;
    ++traj.candidates;
    if (accepted) ++traj.accepted;
    if (options.log_events)
      traj.events.push_back({t, cand.i, cand.j, sigma, accepted});
  }
  ensemble.time = t_end;
  snapshot(t_end);
  return traj;
}

void nanbu_meanfield3_step(std::vector<Vec3>& vs, const CollisionKernel& kernel,
                           double dt, RngStream& rng) {
  if (!(dt > 0.0) || kernel.gamma_max * dt > 0.1)
    throw std::invalid_argument("nanbu_meanfield3: require gamma_max*dt <= 0.1");
  const std::size_t m = vs.size();
  std::vector<Vec3> next(vs);
  for (std::size_t i = 0; i < m; ++i) {
    const Vec3& w = vs[rng.below(m)];
    const Vec3 rel = vs[i] - w;
    const double p = kernel.gamma(norm(rel)) * dt;
    if (rng.uniform01() >= p) continue;
    const Vec3 sigma = realize_sigma(kernel, rel, rng.uniform01(), rng.uniform01());
    next[i] = collide(vs[i], w, sigma).first;
  }
  vs = std::move(next);
}

void nanbu_meanfield3(std::vector<Vec3>& vs, const CollisionKernel& kernel,
                      double horizon, double dt, RngStream& rng) {
  double t = 0.0;
  while (t < horizon - 1e-12) {
    const double h = std::min(dt, horizon - t);
    nanbu_meanfield3_step(vs, kernel, h, rng);
    t += h;
  }
}

TanakaReport tanaka_contraction_check(const InitialSampler& p0a,
                                      const InitialSampler& p0b,
                                      const TanakaOptions& options,
                                      std::uint64_t seed) {
  if (options.n_particles > kW1ExactCap)
    throw std::invalid_argument("tanaka_contraction_check: N above exact-matching cap");
  const std::size_t n = options.n_particles;
  const std::size_t n_snapshots = options.snapshots;
  const double snap_dt = options.horizon / static_cast<double>(n_snapshots);

  auto to_points = [](const std::vector<Vec3>& vs) {
    std::vector<Point> pts;
    pts.reserve(vs.size());
    for (const auto& v : vs) pts.push_back({v[0], v[1], v[2]});
    return pts;
  };

  std::vector<std::vector<double>> w1(n_snapshots + 1,
                                      std::vector<double>(options.replicas));
  for (std::size_t r = 0; r < options.replicas; ++r) {
    // The two initial samplers consume identical streams, so samplers that
    // differ by a deterministic map (e.g. a translation) yield exactly
    // mapped configurations; the dynamics use a separate stream.
    RngStream rng_init_a(seed, 2 * r);
    RngStream rng_init_b(seed, 2 * r);
    RngStream rng(seed, 2 * r + 1);
    std::vector<Vec3> va(n), vb(n);
    for (std::size_t i = 0; i < n; ++i) va[i] = p0a(rng_init_a);
    for (std::size_t i = 0; i < n; ++i) vb[i] = p0b(rng_init_b);
    VelocityEnsemble3 a(std::move(va)), b(std::move(vb));

    w1[0][r] = w1_matched(EmpiricalMeasure(to_points(a.velocities)),
                          EmpiricalMeasure(to_points(b.velocities)));
    double t = 0.0;
    double next_snapshot = snap_dt;
    std::size_t s = 1;
    while (s <= n_snapshots) {
      const CandidateEvent cand = draw_candidate(n, options.kernel, rng);
      t += cand.wait;
      while (s <= n_snapshots && t > next_snapshot) {
        w1[s][r] = w1_matched(EmpiricalMeasure(to_points(a.velocities)),
                              EmpiricalMeasure(to_points(b.velocities)));
        next_snapshot += snap_dt;
        ++s;
      }
      if (s > n_snapshots) break;
      apply_candidate(a, options.kernel, cand);
      apply_candidate(b, options.kernel, cand);
    }
  }

  TanakaReport report;
  for (std::size_t s = 0; s <= n_snapshots; ++s) {
    report.times.push_back(static_cast<double>(s) * snap_dt);
    report.w1_mean.push_back(mean(w1[s]));
    report.w1_stderr.push_back(options.replicas > 1 ? standard_error(w1[s]) : 0.0);
  }
  report.initial_w1 = report.w1_mean.front();
  for (std::size_t s = 1; s <= n_snapshots; ++s) {
    const double increase = report.w1_mean[s] - report.initial_w1;
    if (increase <= 1e-12) continue;  // exact couplings sit at equality
    report.max_increase_sigmas =
        std::max(report.max_increase_sigmas,
                 increase / std::max(report.w1_stderr[s], 1e-15));
  }
  return report;
}

}  // namespace pocsim::boltz3
