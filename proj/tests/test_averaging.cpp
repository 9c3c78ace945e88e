#include "doctest.h"

#include <cmath>
#include <complex>
#include <vector>

#include "pocsim/averaging.hpp"
#include "pocsim/stats.hpp"

using namespace pocsim;
using namespace pocsim::averaging;

TEST_CASE("averaging_step: pure midpoint with a zero point mass") {
  const auto delta0 = NoiseLaw::two_point(0.0);
  RngStream rng(81, 0);
  AveragingEnsemble ens({0.0, 2.0});
  averaging_step(ens, delta0, rng);
  CHECK(ens.positions[0] == 1.0);
  CHECK(ens.positions[1] == 1.0);
  CHECK(ens.events == 1);
  CHECK(ens.time() == doctest::Approx(1.0));  // one event on N = 2
}

TEST_CASE("ensemble mean drifts only within the martingale band") {
  const auto g = NoiseLaw::gaussian(1.0);
  const std::size_t replicas = 10000, n = 16;
  std::vector<double> drifts(replicas);
  for (std::size_t r = 0; r < replicas; ++r) {
    RngStream rng(82, r);
    std::vector<double> x(n);
    for (auto& xi : x) xi = rng.gaussian();
    AveragingEnsemble ens(x);
    const double before = ens.mean_position();
    run_events(ens, g, 50, rng);
    drifts[r] = ens.mean_position() - before;
  }
  CHECK(std::fabs(mean(drifts)) < 4.0 * standard_error(drifts));
}

TEST_CASE("stationary ensemble variance approaches 2 Var(g) for all families") {
  const std::size_t n = 10000;
  for (const auto& g : {NoiseLaw::gaussian(1.0), NoiseLaw::uniform(1.0),
                        NoiseLaw::two_point(0.8)}) {
    RngStream rng(83, static_cast<std::uint64_t>(g.family));
    AveragingEnsemble ens(std::vector<double>(n, 0.0));
    run_events(ens, g, 50 * n, rng);
    const double target = 2.0 * g.variance();
    CHECK(std::fabs(ens.variance() - target) / target < 0.05);
  }
}

TEST_CASE("stationary_charfun: normalization and the Gaussian closed form") {
  const auto g = NoiseLaw::gaussian(0.8);
  CHECK(stationary_charfun(g, 0.0).real() == 1.0);
  for (double xi : {0.3, 1.0, 2.7, 8.0}) {
    const double expected = std::exp(-0.8 * 0.8 * xi * xi);  // Normal(0, 2 sigma^2)
    CHECK(stationary_charfun(g, xi, 1e-12).real() ==
          doctest::Approx(expected).epsilon(1e-10));
  }
}

TEST_CASE("stationary_charfun is a fixed point of the one-step map") {
  for (const auto& g : {NoiseLaw::gaussian(1.0), NoiseLaw::uniform(1.2),
                        NoiseLaw::two_point(1.0)}) {
    for (double xi : {0.5, 2.0, 5.0, 12.0, 20.0}) {
      const auto f = stationary_charfun(g, xi, 1e-12);
      const auto fh = stationary_charfun(g, 0.5 * xi, 1e-12);
      CHECK(std::abs(g.char_fun(xi) * fh * fh - f) < 1e-10);
    }
  }
}

TEST_CASE("two-point stationary transform matches the long-run ensemble") {
  const auto g = NoiseLaw::two_point(1.0);
  RngStream rng(84, 0);
  const std::size_t n = 10000;
  AveragingEnsemble ens(std::vector<double>(n, 0.0));
  run_events(ens, g, 50 * n, rng);
  double worst = 0.0;
  for (double xi = 0.25; xi <= 5.0 + 1e-9; xi += 0.25) {
    const auto empirical = ens.char_fun(xi);
    const auto exact = stationary_charfun(g, xi, 1e-10);
    worst = std::max(worst, std::abs(empirical - exact));
  }
  CHECK(worst < 0.02);
}

TEST_CASE("CharFunGrid: Hermitian symmetry and half-grid reads") {
  CharFunGrid grid(4.0, 0.5);
  grid.fill([](double xi) {
    return std::complex<double>{std::exp(-0.5 * xi * xi) * std::cos(0.1 * xi),
                                std::exp(-0.5 * xi * xi) * std::sin(0.1 * xi)};
  });
  CHECK(grid.hermitian_violation() < 1e-15);
  // Even node: exact copy.
  const std::size_t c = grid.center();
  CHECK(grid.value_at_half(c + 4) == grid.value(c + 2));
  // Odd node: cubic midpoint, error ~ (3/128) h^4 |f''''| ~ 4e-3 at h = 0.5.
  const auto interp = grid.value_at_half(c + 1);  // f(0.25)
  const std::complex<double> exact{std::exp(-0.5 * 0.0625) * std::cos(0.025),
                                   std::exp(-0.5 * 0.0625) * std::sin(0.025)};
  CHECK(std::abs(interp - exact) < 5e-3);

  // A production-scale grid is 4th-order accurate.
  CharFunGrid fine(4.0, 0.05);
  fine.fill([](double xi) { return std::exp(-0.5 * xi * xi); });
  const auto fi = fine.value_at_half(fine.center() + 1);  // f(0.025)
  CHECK(std::abs(fi - std::exp(-0.5 * 0.025 * 0.025)) < 1e-6);
}

TEST_CASE("meanfield_evolve keeps fixed points fixed") {
  const auto g = NoiseLaw::gaussian(1.0);
  CharFunGrid grid(10.0, 0.01);
  grid.fill([&](double xi) { return stationary_charfun(g, xi, 1e-12); });
  EvolveOptions opts;
  opts.horizon = 1.0;
  opts.dt = 0.02;
  const auto traj = meanfield_evolve(grid, g, opts);
  for (double r : traj.fixed_point_residuals) CHECK(r < 1e-6);
  // Grid values stay put to 1e-6; the finite-difference second moment
  // amplifies value drift by 2/h^2, so it gets a looser band.
  double sup = 0.0;
  for (std::size_t k = 0; k <= grid.center(); ++k)
    sup = std::max(sup, std::abs(traj.final_grid.value(grid.center() + k) -
                                 grid.value(grid.center() + k)));
  CHECK(sup < 1e-6);
  CHECK(std::fabs(traj.second_moments.back() - traj.second_moments.front()) < 1e-3);
}

TEST_CASE("second-moment flow matches dm/dt = -m/2 + sigma^2") {
  const auto g = NoiseLaw::gaussian(0.7);
  CharFunGrid grid(10.0, 0.01);
  grid.fill([](double xi) { return std::exp(-0.5 * xi * xi); });  // Normal(0,1)
  EvolveOptions opts;
  opts.horizon = 2.0;
  opts.dt = 0.01;
  opts.snapshot_interval = 0.25;
  const auto traj = meanfield_evolve(grid, g, opts);

  const double sigma2 = 0.7 * 0.7;
  for (std::size_t s = 0; s < traj.times.size(); ++s) {
    const double t = traj.times[s];
    const double expected =
        2.0 * sigma2 + (1.0 - 2.0 * sigma2) * std::exp(-0.5 * t);
    CHECK(traj.second_moments[s] == doctest::Approx(expected).epsilon(5e-3));
  }

  // Initial slope by finite differences: -m/2 + sigma^2 at m = 1.
  const double slope0 =
      (traj.second_moments[1] - traj.second_moments[0]) / (traj.times[1] - traj.times[0]);
  CHECK(slope0 == doctest::Approx(-0.5 + sigma2).epsilon(0.05));
}

TEST_CASE("point-mass noise halves the variance per unit time") {
  const auto g = NoiseLaw::two_point(0.0);
  CharFunGrid grid(10.0, 0.01);
  grid.fill([](double xi) { return std::exp(-0.5 * xi * xi); });
  EvolveOptions opts;
  opts.horizon = 2.0;
  opts.dt = 0.01;
  opts.snapshot_interval = 0.5;
  const auto traj = meanfield_evolve(grid, g, opts);
  for (std::size_t s = 0; s < traj.times.size(); ++s)
    CHECK(traj.second_moments[s] ==
          doctest::Approx(std::exp(-0.5 * traj.times[s])).epsilon(5e-3));
}

TEST_CASE("meanfield_evolve guards: coarse grids and dt are rejected") {
  const auto g = NoiseLaw::gaussian(1.0);
  CharFunGrid coarse(10.0, 1.0);
  coarse.fill([](double xi) { return std::exp(-0.5 * xi * xi); });
  EvolveOptions opts;
  CHECK_THROWS_WITH_AS(meanfield_evolve(coarse, g, opts),
                       "meanfield_evolve: grid too coarse", std::invalid_argument);
  CharFunGrid fine(2.0, 0.01);
  fine.fill([](double xi) { return std::exp(-0.5 * xi * xi); });
  opts.dt = 0.2;
  CHECK_THROWS_AS(meanfield_evolve(fine, g, opts), std::invalid_argument);
}

TEST_CASE("|f_hat| <= 1 and Hermitian symmetry hold along the flow") {
  const auto g = NoiseLaw::uniform(1.0);
  CharFunGrid grid(8.0, 0.01);
  grid.fill([](double xi) {
    // Characteristic function of Uniform[-2, 2].
    return xi == 0.0 ? 1.0 : std::sin(2.0 * xi) / (2.0 * xi);
  });
  EvolveOptions opts;
  opts.horizon = 3.0;
  opts.dt = 0.02;
  const auto traj = meanfield_evolve(grid, g, opts);
  CHECK(traj.final_grid.max_modulus() <= 1.0 + 1e-9);
  CHECK(traj.final_grid.hermitian_violation() < 1e-12);
  CHECK(std::abs(traj.final_grid.value(traj.final_grid.center()) -
                 std::complex<double>{1.0, 0.0}) == 0.0);
}

TEST_CASE("one-step marginal recursions match the simulation (N = 2, 4)") {
  const auto g = NoiseLaw::gaussian(0.6);
  const auto r2 = marginal_recursion_check(2, 60000, g, 85);
  CHECK(r2.p_value_marginal1 > 0.01);
  CHECK(r2.p_value_marginal2 > 0.01);
  const auto r4 = marginal_recursion_check(4, 60000, g, 86);
  CHECK(r4.p_value_marginal1 > 0.01);
  CHECK(r4.p_value_marginal2 > 0.01);

  const auto two_point = NoiseLaw::two_point(0.7);
  const auto r4b = marginal_recursion_check(4, 60000, two_point, 87);
  CHECK(r4b.p_value_marginal1 > 0.01);
  CHECK(r4b.p_value_marginal2 > 0.01);

  CHECK_THROWS_AS(marginal_recursion_check(9, 60000, g, 88), std::invalid_argument);
}

TEST_CASE("identity check: point-mass noise on identical particles") {
  const auto delta0 = NoiseLaw::two_point(0.0);
  RngStream rng(89, 0);
  AveragingEnsemble ens(std::vector<double>(8, 1.5));
  run_events(ens, delta0, 100, rng);
  for (double x : ens.positions) CHECK(x == 1.5);
}

TEST_CASE("update law is permutation-symmetric (label-shuffle chi-squared)") {
  const auto g = NoiseLaw::gaussian(1.0);
  const std::size_t n = 6, replicas = 40000;
  std::vector<double> first, last;
  for (std::size_t r = 0; r < replicas; ++r) {
    RngStream rng(90, r);
    std::vector<double> x(n);
    for (auto& xi : x) xi = rng.gaussian();
    AveragingEnsemble ens(x);
    run_events(ens, g, 12, rng);
    first.push_back(ens.positions[0]);
    last.push_back(ens.positions[n - 1]);
  }
  const int bins = 10;
  std::vector<std::uint64_t> h_first(bins, 0), h_last(bins, 0);
  auto bin_of = [&](double v) {
    const int b = static_cast<int>((v + 4.0) / 8.0 * bins);
    return static_cast<std::size_t>(std::clamp(b, 0, bins - 1));
  };
  for (double v : first) ++h_first[bin_of(v)];
  for (double v : last) ++h_last[bin_of(v)];
  CHECK(chi2_two_sample_pvalue(h_first, h_last) > 0.001);
}

TEST_CASE("stationary_charfun rejects hopeless tolerances") {
  const auto g = NoiseLaw::gaussian(1.0);
  CHECK_THROWS_AS(stationary_charfun(g, 1e9, 1e-12), std::runtime_error);
  CHECK_THROWS_AS(stationary_charfun(g, 1.0, 0.0), std::invalid_argument);
}
