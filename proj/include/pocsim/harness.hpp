#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "pocsim/measures.hpp"

namespace pocsim::harness {

/// Cross-model experiment plan. The N list must be strictly increasing
/// with every entry >= 2.
struct ExperimentPlan {
  std::string model;  // kac | circle | averaging | boltzmann3
  std::vector<std::size_t> n_values;
  std::size_t replicas = 1000;
  double horizon = 2.0;
  std::string dictionary_id = "standard";
  std::uint64_t seed = 1;
  // model knobs
  double circle_tau = 1.0;
  double averaging_sigma = 1.0;

  void validate() const;
};

/// Least-squares rate fit on log-log points (slope of log defect vs log N).
struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;
  double half_width = 0.0;  // 2x slope standard error
};

/// For each N: run `replicas` trajectories from i.i.d.-product initial data
/// to time T and measure the chaoticity defect of the final ensemble law.
/// The fit uses only N values whose defect exceeds 5x its standard error;
/// a warning is recorded when fewer than 3 survive.
ChaosReport chaos_sweep(const ExperimentPlan& plan);

/// Bounded test function for the combinatorial bound check.
struct TestFunction {
  std::function<double(double)> f;
  double sup_norm = 1.0;
};

/// Exact evaluation of the symmetrization error for phi = phi_1 x ... x
/// phi_ell on a configuration X in R^N:
///   sym  = average over ordered distinct index tuples of prod phi_b(x_i_b)
///   mono = prod_b ( (1/N) sum_i phi_b(x_i) )
/// and |sym - mono| <= 2 ell^2 ||phi||_inf / N for N >= 2 ell.
struct T1Result {
  double difference = 0.0;
  double bound = 0.0;
  double ratio = 0.0;
};
T1Result t1_evaluate(const std::vector<TestFunction>& blocks,
                     const std::vector<double>& config);

/// Runs t1_evaluate over `draws` random (configuration, test-function)
/// samples with 1 <= ell <= max_ell and the given N; returns the worst
/// ratio and throws if the bound is ever violated.
struct T1SweepResult {
  double max_ratio = 0.0;
  std::uint64_t draws = 0;
  std::uint64_t violations = 0;
};
T1SweepResult t1_bound_check(std::size_t n, int max_ell, std::uint64_t draws,
                             std::uint64_t seed);

/// Sup-over-snapshots W1 between the N-particle first marginal and the
/// model's sample-based mean-field solver, per N. Models without such a
/// solver (circle) are rejected.
struct MarginalGapRow {
  std::size_t n_particles = 0;
  double sup_w1 = 0.0;
  double sup_w1_stderr = 0.0;  // bootstrap over the sup snapshot's samples
  std::vector<double> times;
  std::vector<double> w1;
};
struct MarginalGapReport {
  std::string model;
  std::vector<MarginalGapRow> rows;
};
MarginalGapReport marginal_gap(const ExperimentPlan& plan);

}  // namespace pocsim::harness
