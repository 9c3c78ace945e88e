#include "doctest.h"

#include <cmath>
#include <vector>

#include "pocsim/harness.hpp"
#include "pocsim/measures.hpp"
#include "pocsim/rng.hpp"
#include "pocsim/stats.hpp"

using namespace pocsim;
using namespace pocsim::harness;

TEST_CASE("plan validation") {
  ExperimentPlan plan;
  plan.model = "kac";
  plan.n_values = {50, 100};
  plan.validate();

  plan.model = "vicsek";
  CHECK_THROWS_AS(plan.validate(), std::invalid_argument);
  plan.model = "kac";
  plan.n_values = {100, 50};
  CHECK_THROWS_AS(plan.validate(), std::invalid_argument);
  plan.n_values = {1, 50};
  CHECK_THROWS_AS(plan.validate(), std::invalid_argument);
  plan.n_values = {};
  CHECK_THROWS_AS(plan.validate(), std::invalid_argument);
}

TEST_CASE("t1: degree-1 difference is identically zero") {
  RngStream rng(141, 0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> config(6);
    for (auto& x : config) x = rng.gaussian();
    const double a = rng.uniform(0.3, 3.0);
    std::vector<TestFunction> blocks{{[a](double x) { return std::cos(a * x); }, 1.0}};
    const auto res = t1_evaluate(blocks, config);
    CHECK(res.difference < 1e-15);
  }
}

TEST_CASE("t1: degree-2 difference matches the direct index formula") {
  RngStream rng(142, 0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 4 + rng.below(4);
    std::vector<double> config(n);
    for (auto& x : config) x = rng.gaussian();
    std::vector<TestFunction> blocks{
        {[](double x) { return std::tanh(x); }, 1.0},
        {[](double x) { return x > 0.0 ? 1.0 : 0.0; }, 1.0}};
    const auto res = t1_evaluate(blocks, config);

    // (1/(N(N-1))) sum_{i != j} - (1/N^2) sum_{i,j}
    double distinct = 0.0, all = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        const double term = blocks[0].f(config[i]) * blocks[1].f(config[j]);
        all += term;
        if (i != j) distinct += term;
      }
    }
    const double nd = static_cast<double>(n);
    const double direct =
        std::fabs(distinct / (nd * (nd - 1.0)) - all / (nd * nd));
    CHECK(res.difference == doctest::Approx(direct).epsilon(1e-12));
    CHECK(res.ratio <= 1.0);
  }
}

TEST_CASE("t1: constant configurations give zero difference") {
  std::vector<double> constant(8, 0.77);
  std::vector<TestFunction> blocks{
      {[](double x) { return std::cos(x); }, 1.0},
      {[](double x) { return std::sin(2.0 * x); }, 1.0}};
  const auto res = t1_evaluate(blocks, constant);
  CHECK(res.difference < 1e-15);
}

TEST_CASE("t1: the bound hypothesis N >= 2 ell is enforced") {
  std::vector<TestFunction> blocks(3, {[](double x) { return std::cos(x); }, 1.0});
  std::vector<double> too_small(5, 0.0);
  CHECK_THROWS_AS(t1_evaluate(blocks, too_small), std::invalid_argument);
  CHECK_THROWS_AS(t1_bound_check(9, 3, 10, 1), std::invalid_argument);
  CHECK_THROWS_AS(t1_bound_check(8, 4, 10, 1), std::invalid_argument);
  CHECK_THROWS_AS(t1_bound_check(4, 3, 10, 1), std::invalid_argument);
}

TEST_CASE("t1 sweep: no violations across random draws") {
  const auto sweep = t1_bound_check(8, 3, 10000, 143);
  CHECK(sweep.violations == 0);
  CHECK(sweep.max_ratio > 0.0);
  CHECK(sweep.max_ratio <= 1.0);
}

TEST_CASE("chaos_sweep on kac: slope -1 within the acceptance band") {
  ExperimentPlan plan;
  plan.model = "kac";
  plan.n_values = {50, 100, 200, 400};
  plan.replicas = 2000;
  plan.horizon = 2.0;
  plan.seed = 144;
  const auto report = chaos_sweep(plan);
  REQUIRE(report.rows.size() == 4);
  for (std::size_t i = 1; i < report.rows.size(); ++i)
    CHECK(report.rows[i].defect < report.rows[i - 1].defect);
  REQUIRE(report.fit_valid);
  CHECK(report.slope > -1.3);
  CHECK(report.slope < -0.7);
}

TEST_CASE("chaos_sweep with frozen dynamics stays at the noise floor") {
  // horizon -> 0 means no events: truly product initial data everywhere.
  ExperimentPlan plan;
  plan.model = "averaging";
  plan.n_values = {16, 32, 64};
  plan.replicas = 1500;
  plan.horizon = 1e-9;
  plan.seed = 145;
  const auto report = chaos_sweep(plan);
  for (const auto& row : report.rows)
    CHECK(row.defect < 4.0 / std::sqrt(static_cast<double>(plan.replicas)));
  // The fit must refuse to run on noise-floor data.
  CHECK_FALSE(report.fit_valid);
  CHECK_FALSE(report.warning.empty());
}

TEST_CASE("chaos_sweep runs every model id") {
  ExperimentPlan plan;
  plan.n_values = {8, 16};
  plan.replicas = 200;
  plan.horizon = 0.5;
  plan.seed = 146;
  for (const std::string model : {"kac", "circle", "averaging", "boltzmann3"}) {
    plan.model = model;
    plan.circle_tau = 1.0;
    const auto report = chaos_sweep(plan);
    CHECK(report.rows.size() == 2);
    for (const auto& row : report.rows) {
      CHECK(row.defect >= 0.0);
      CHECK(row.replicas == 200);
    }
  }
}

TEST_CASE("marginal_gap: kac gap decreases in N; circle is rejected") {
  ExperimentPlan plan;
  plan.model = "kac";
  plan.n_values = {8, 16, 64};
  plan.replicas = 30000;
  plan.horizon = 2.0;
  plan.seed = 147;
  const auto report = marginal_gap(plan);
  REQUIRE(report.rows.size() == 3);
  // The finite-N deviation decays like 1/N, far above the sampling floor
  // at these sizes: strict decrease, and decrease net of 2 standard errors.
  for (std::size_t i = 1; i < 3; ++i) {
    const auto& prev = report.rows[i - 1];
    const auto& cur = report.rows[i];
    CHECK(cur.sup_w1 < prev.sup_w1);
    const double slack = 2.0 * std::sqrt(prev.sup_w1_stderr * prev.sup_w1_stderr +
                                         cur.sup_w1_stderr * cur.sup_w1_stderr);
    CHECK(cur.sup_w1 < prev.sup_w1 - slack);
  }

  plan.model = "circle";
  CHECK_THROWS_AS(marginal_gap(plan), std::invalid_argument);
}

TEST_CASE("marginal_gap: averaging and boltzmann3 paths produce finite gaps") {
  ExperimentPlan plan;
  plan.n_values = {32};
  plan.replicas = 400;
  plan.horizon = 2.0;
  plan.seed = 148;

  plan.model = "averaging";
  const auto avg = marginal_gap(plan);
  REQUIRE(avg.rows.size() == 1);
  CHECK(avg.rows[0].sup_w1 > 0.0);
  CHECK(avg.rows[0].sup_w1 < 1.0);
  CHECK(avg.rows[0].times.size() == 5);

  plan.model = "boltzmann3";
  plan.replicas = 300;
  const auto b3 = marginal_gap(plan);
  REQUIRE(b3.rows.size() == 1);
  CHECK(b3.rows[0].sup_w1 > 0.0);
  CHECK(b3.rows[0].sup_w1 < 2.0);
}

TEST_CASE("averaging gap at T = 5 is consistent with the chaos-sweep scale") {
  // Cross-experiment coherence: the W1 gap and the defect both decay like
  // 1/sqrt(N) and 1/N respectively; at modest N the gap should sit within
  // an order of magnitude of sqrt(defect), far from either extreme.
  ExperimentPlan plan;
  plan.model = "averaging";
  plan.n_values = {64};
  plan.replicas = 2000;
  plan.horizon = 5.0;
  plan.seed = 149;
  const auto gap = marginal_gap(plan);
  const auto sweep = chaos_sweep(plan);
  REQUIRE(gap.rows.size() == 1);
  REQUIRE(sweep.rows.size() == 1);
  CHECK(gap.rows[0].sup_w1 < 10.0 * std::sqrt(sweep.rows[0].defect) + 0.5);
  CHECK(gap.rows[0].sup_w1 > 0.0);
}
