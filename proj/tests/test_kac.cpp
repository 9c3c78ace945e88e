#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "pocsim/kac.hpp"
#include "pocsim/measures.hpp"
#include "pocsim/stats.hpp"

using namespace pocsim;
using namespace pocsim::kac;

TEST_CASE("kac_rotate identity, quarter turn, energy identity") {
  auto [v0, w0] = kac_rotate(1.0, 2.0, 0.0);
  CHECK(v0 == 1.0);
  CHECK(w0 == 2.0);

  auto [v1, w1] = kac_rotate(1.0, 2.0, M_PI / 2.0);
  CHECK(v1 == doctest::Approx(-2.0).epsilon(1e-15));
  CHECK(w1 == doctest::Approx(1.0).epsilon(1e-15));

  RngStream rng(41, 0);
  for (int trial = 0; trial < 100000; ++trial) {
    const double v = 3.0 * rng.gaussian();
    const double w = 3.0 * rng.gaussian();
    const double theta = rng.uniform_angle();
    auto [vp, wp] = kac_rotate(v, w, theta);
    const double before = v * v + w * w;
    const double after = vp * vp + wp * wp;
    CHECK(std::fabs(after - before) <= 4.0 * before * 2.220446049250313e-16);
  }
}

TEST_CASE("KacState normalizes onto the sphere") {
  KacState state({3.0, 4.0});
  CHECK(state.energy() == doctest::Approx(2.0).epsilon(1e-14));
  CHECK_THROWS_AS(KacState({1.0}), std::invalid_argument);
  CHECK_THROWS_AS(KacState({0.0, 0.0}), std::invalid_argument);
}

TEST_CASE("N = 2 rotation by pi negates both components") {
  KacState state({1.0, -1.0});
  const auto before = state.velocities();
  state.apply({0.0, 0, 1, M_PI});
  CHECK(state.velocities()[0] == doctest::Approx(-before[0]).epsilon(1e-12));
  CHECK(state.velocities()[1] == doctest::Approx(-before[1]).epsilon(1e-12));
}

TEST_CASE("event count lies in the Poisson(NT) band") {
  RngStream rng(42, 0);
  KacState state(rng.uniform_sphere(100, std::sqrt(200.0)));
  SimulateOptions opts;
  opts.horizon = 10.0;
  const auto traj = simulate_kac(state, opts, rng);
  const double expected = 1000.0;
  CHECK(std::fabs(static_cast<double>(traj.event_count) - expected) <
        5.0 * std::sqrt(expected));
}

TEST_CASE("inter-event times are exponential at rate N (Anderson-Darling)") {
  RngStream rng(43, 0);
  const std::size_t n = 50;
  KacState state(rng.uniform_sphere(n, std::sqrt(100.0)));
  SimulateOptions opts;
  opts.horizon = 400.0;
  opts.log_events = true;
  const auto traj = simulate_kac(state, opts, rng);
  std::vector<double> gaps;
  for (std::size_t e = 1; e < traj.events.size(); ++e)
    gaps.push_back(traj.events[e].time - traj.events[e - 1].time);
  const double rate = static_cast<double>(n);
  const double a2 = anderson_darling(
      gaps, [&](double x) { return 1.0 - std::exp(-rate * x); });
  CHECK(a2 < 3.857);  // 1% critical value, fully specified case
}

TEST_CASE("energy drift stays below 1e-9 relative over 1e6 events") {
  RngStream rng(44, 0);
  const std::size_t n = 1000;
  KacState state(rng.uniform_sphere(n, std::sqrt(2000.0)));
  const double e0 = state.energy();
  SimulateOptions opts;
  opts.horizon = 1.0e6 / static_cast<double>(n);
  const auto traj = simulate_kac(state, opts, rng);
  CHECK(traj.event_count > 900000);
  CHECK(std::fabs(state.energy() - e0) / e0 < 1e-9);
  CHECK(traj.renormalizations == traj.event_count / 100000);
}

TEST_CASE("momentum is not conserved: equilibrium momentum variance > 0") {
  RngStream rng(45, 0);
  const std::size_t n = 20;
  std::vector<double> momenta;
  for (int rep = 0; rep < 200; ++rep) {
    KacState state(rng.uniform_sphere(n, std::sqrt(2.0 * n)));
    SimulateOptions opts;
    opts.horizon = 2.0;
    simulate_kac(state, opts, rng);
    double p = 0.0;
    for (double v : state.velocities()) p += v;
    momenta.push_back(p);
  }
  CHECK(variance(momenta) > 1.0);
}

TEST_CASE("label-shuffled statistics agree (permutation equivariance)") {
  // Compare the empirical law of particle 0 and particle N-1 over replicas.
  const std::size_t n = 10, replicas = 20000;
  std::vector<double> first, last;
  for (std::size_t r = 0; r < replicas; ++r) {
    RngStream rng(46, r);
    const double c = std::sqrt(2.0);
    std::vector<double> v(n);
    for (auto& vi : v) vi = (rng.next_u64() & 1ULL) ? c : -c;
    KacState state(std::move(v));
    SimulateOptions opts;
    opts.horizon = 1.0;
    simulate_kac(state, opts, rng);
    first.push_back(state.velocities()[0]);
    last.push_back(state.velocities()[n - 1]);
  }
  const int bins = 10;
  std::vector<std::uint64_t> h_first(bins, 0), h_last(bins, 0);
  auto bin_of = [&](double v) {
    const int b = static_cast<int>((v + 3.0) / 6.0 * bins);
    return static_cast<std::size_t>(std::clamp(b, 0, bins - 1));
  };
  for (double v : first) ++h_first[bin_of(v)];
  for (double v : last) ++h_last[bin_of(v)];
  CHECK(chi2_two_sample_pvalue(h_first, h_last) > 0.001);
}

TEST_CASE("deterministic replay: identical seeds give identical event logs") {
  auto run_once = [] {
    RngStream rng(47, 3);
    KacState state({1.0, -1.0, 2.0, -2.0});
    SimulateOptions opts;
    opts.horizon = 5.0;
    opts.log_events = true;
    return simulate_kac(state, opts, rng);
  };
  const auto a = run_once();
  const auto b = run_once();
  REQUIRE(a.events.size() == b.events.size());
  for (std::size_t e = 0; e < a.events.size(); ++e) {
    CHECK(a.events[e].time == b.events[e].time);
    CHECK(a.events[e].i == b.events[e].i);
    CHECK(a.events[e].j == b.events[e].j);
    CHECK(a.events[e].theta == b.events[e].theta);
  }
}

TEST_CASE("equilibrium_sample: exact energy, flat N = 3 marginal, Gaussian limit") {
  RngStream rng(48, 0);
  KacState s(equilibrium_sample(64, rng));
  CHECK(std::fabs(s.energy() - 64.0) / 64.0 < 1e-12);

  // N = 3: first-coordinate density is flat on (-sqrt(6), sqrt(6)).
  const int samples = 60000, bins = 12;
  std::vector<std::uint64_t> hist(bins, 0);
  const double edge = std::sqrt(6.0);
  for (int i = 0; i < samples; ++i) {
    const double v = equilibrium_sample(3, rng).velocities()[0];
    int b = static_cast<int>((v + edge) / (2.0 * edge) * bins);
    ++hist[static_cast<std::size_t>(std::clamp(b, 0, bins - 1))];
  }
  const std::vector<double> expected(bins, static_cast<double>(samples) / bins);
  CHECK(chi2_pvalue(hist, expected) > 0.001);

  // N = 1000: Gaussian limit of the first coordinate.
  std::vector<double> first(20000);
  for (auto& f : first) f = equilibrium_sample(1000, rng).velocities()[0];
  CHECK(ks_distance(first, [](double x) { return normal_cdf(x, 0.0, 2.0); }) < 0.02);
}

TEST_CASE("mean-field ensemble: fixed point, flat m2, m4 relaxation at nu/4") {
  CHECK_THROWS_AS(MeanFieldEnsemble({0.0, 1.0}, 2.0), std::invalid_argument);
  CHECK_THROWS_AS(MeanFieldEnsemble(std::vector<double>(200, 1.0), 0.0),
                  std::invalid_argument);

  RngStream rng(49, 0);
  MeanFieldEnsemble zeros(std::vector<double>(200, 0.0));
  zeros.evolve(1.0, 0.05, rng);
  for (double v : zeros.velocities()) CHECK(v == 0.0);
  CHECK_THROWS_AS(zeros.step(0.2, rng), std::invalid_argument);

  // Two-point initial law: m2 = 2 is flat; u = m4 - 3 m2^2 relaxes at nu/4.
  const std::size_t m = 100000;
  std::vector<double> v0(m);
  for (auto& vi : v0) vi = (rng.next_u64() & 1ULL) ? std::sqrt(2.0) : -std::sqrt(2.0);
  MeanFieldEnsemble mf(std::move(v0));  // nu = 2
  std::vector<double> times, log_u;
  const double dt = 0.05;
  for (double t = 0.0; t <= 3.0 + 1e-9; t += 0.5) {
    const double m2 = mf.moment(2);
    const double m4 = mf.moment(4);
    CHECK(std::fabs(m2 - 2.0) < 0.05);
    times.push_back(t);
    log_u.push_back(std::log(std::fabs(m4 - 3.0 * m2 * m2)));
    if (t < 3.0) mf.evolve(0.5, dt, rng);
  }
  const auto fit = fit_line(times, log_u);
  const double rate = -fit.slope;  // expected nu/4 = 0.5
  CHECK(rate == doctest::Approx(0.5).epsilon(0.10));
}

TEST_CASE("N-particle m4 relaxation matches the same moment law") {
  // The jump process gives each particle collision rate 2, so the same
  // closed moment equation with nu = 2 applies up to O(1/N).
  const std::size_t n = 1000, replicas = 60;
  const double horizon = 3.0;
  std::vector<double> times{0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0};
  std::vector<std::vector<double>> m4(times.size());
  for (std::size_t r = 0; r < replicas; ++r) {
    RngStream rng(50, r);
    std::vector<double> v(n);
    for (auto& vi : v) vi = (rng.next_u64() & 1ULL) ? std::sqrt(2.0) : -std::sqrt(2.0);
    KacState state(std::move(v));
    SimulateOptions opts;
    opts.horizon = horizon;
    opts.snapshot_interval = 0.5;
    const auto traj = simulate_kac(state, opts, rng);
    REQUIRE(traj.snapshot_times.size() == times.size());
    for (std::size_t s = 0; s < times.size(); ++s) {
      double sum4 = 0.0;
      for (double vi : traj.snapshots[s]) sum4 += vi * vi * vi * vi;
      m4[s].push_back(sum4 / static_cast<double>(n));
    }
  }
  std::vector<double> log_u;
  for (std::size_t s = 0; s < times.size(); ++s)
    log_u.push_back(std::log(std::fabs(mean(m4[s]) - 12.0)));
  const auto fit = fit_line(times, log_u);
  CHECK(-fit.slope == doctest::Approx(0.5).epsilon(0.10));
}

TEST_CASE("marginal gap: noise floor at t = 0 and N-decreasing trend") {
  MarginalGapOptions opts;
  opts.n_particles = 8;
  opts.replicas = 30000;
  opts.meanfield_size = 120000;
  opts.horizon = 2.0;
  opts.snapshot_interval = 1.0;
  const auto gap8 = marginal_gap_two_point(opts, 61);

  // Both levels share the two-point initial law; at t = 0 the W1 between
  // finite samples of the same law is a pure noise floor.
  CHECK(gap8.w1.front() < 4.0 * std::sqrt(2.0) / std::sqrt(30000.0));

  // The finite-N marginal deviation decays like 1/N; at small N it stands
  // far above the sampling floor and the halving trend is unambiguous.
  opts.n_particles = 16;
  const auto gap16 = marginal_gap_two_point(opts, 62);
  opts.n_particles = 64;
  const auto gap64 = marginal_gap_two_point(opts, 63);
  CHECK(gap8.sup_w1 > 1.5 * gap16.sup_w1);
  CHECK(gap16.sup_w1 > gap64.sup_w1);

  opts.meanfield_size = 100;  // < 10 N
  CHECK_THROWS_AS(marginal_gap_two_point(opts, 64), std::invalid_argument);
}

TEST_CASE("long-run marginal approaches the Maxwellian") {
  const std::size_t n = 200, replicas = 4000;
  std::vector<double> first;
  for (std::size_t r = 0; r < replicas; ++r) {
    RngStream rng(64, r);
    std::vector<double> v(n);
    for (auto& vi : v) vi = (rng.next_u64() & 1ULL) ? std::sqrt(2.0) : -std::sqrt(2.0);
    KacState state(std::move(v));
    SimulateOptions opts;
    opts.horizon = 50.0;
    simulate_kac(state, opts, rng);
    first.push_back(state.velocities()[0]);
  }
  CHECK(ks_distance(first, [](double x) { return normal_cdf(x, 0.0, 2.0); }) < 0.03);
}
