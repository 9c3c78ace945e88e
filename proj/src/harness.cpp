#include "pocsim/harness.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "pocsim/averaging.hpp"
#include "pocsim/boltzmann3.hpp"
#include "pocsim/circle.hpp"
#include "pocsim/kac.hpp"
#include "pocsim/parallel.hpp"
#include "pocsim/stats.hpp"

namespace pocsim::harness {

void ExperimentPlan::validate() const {
  if (model != "kac" && model != "circle" && model != "averaging" &&
      model != "boltzmann3")
    throw std::invalid_argument("plan.model: unknown model '" + model + "'");
  if (n_values.empty()) throw std::invalid_argument("plan.N: empty N list");
  for (std::size_t i = 0; i < n_values.size(); ++i) {
    if (n_values[i] < 2) throw std::invalid_argument("plan.N: every N must be >= 2");
    if (i > 0 && n_values[i] <= n_values[i - 1])
      throw std::invalid_argument("plan.N: N list must be strictly increasing");
  }
  if (replicas < 4) throw std::invalid_argument("plan.replicas: too few replicas");
  if (!(horizon > 0.0)) throw std::invalid_argument("plan.T: must be > 0");
}

namespace {

// One replica from i.i.d.-product initial data, evolved to time T; the
// returned configuration is scalar per particle (first coordinate for the
// 3-D model).
std::vector<double> run_replica(const ExperimentPlan& plan, std::size_t n,
                                std::size_t replica_index, std::uint64_t n_index) {
  RngStream rng(plan.seed, (n_index << 32) ^ replica_index);
  if (plan.model == "kac") {
    // Two-point +-sqrt(2) initial law sits on the energy sphere exactly,
    // so the initial ensemble is a true product.
    const double c = std::sqrt(2.0);
    std::vector<double> v(n);
    for (auto& vi : v) vi = (rng.next_u64() & 1ULL) ? c : -c;
    kac::KacState state(std::move(v));
    kac::SimulateOptions opts;
    opts.horizon = plan.horizon;
    kac::simulate_kac(state, opts, rng);
    return state.velocities();
  }
  if (plan.model == "circle") {
    std::vector<double> theta(n);
    for (auto& t : theta) t = rng.uniform(-M_PI, M_PI);
    circle::AngularEnsemble ensemble(std::move(theta));
    const WrappedNoise noise(NoiseFamily::kGaussian, plan.circle_tau);
    circle::simulate_circle(ensemble, noise, plan.horizon, 0.0, rng);
    return ensemble.angles;
  }
  if (plan.model == "averaging") {
    std::vector<double> x(n);
    for (auto& xi : x) xi = rng.gaussian();
    averaging::AveragingEnsemble ensemble(std::move(x));
    const auto g = averaging::NoiseLaw::gaussian(plan.averaging_sigma);
    const auto events = static_cast<std::uint64_t>(
        std::llround(plan.horizon * static_cast<double>(n) / 2.0));
    averaging::run_events(ensemble, g, events, rng);
    return ensemble.positions;
  }
  if (plan.model == "boltzmann3") {
    std::vector<boltz3::Vec3> v(n);
    for (auto& vi : v) vi = {rng.gaussian(), rng.gaussian(), rng.gaussian()};
    boltz3::VelocityEnsemble3 ensemble(std::move(v));
    boltz3::SimulateOptions3 opts;
    opts.horizon = plan.horizon;
    boltz3::simulate_collisions(ensemble, boltz3::CollisionKernel::constant(1.0),
                                opts, rng);
    std::vector<double> first(n);
    for (std::size_t i = 0; i < n; ++i) first[i] = ensemble.velocities[i][0];
    return first;
  }
  throw std::invalid_argument("unknown model: " + plan.model);
}

}  // namespace

ChaosReport chaos_sweep(const ExperimentPlan& plan) {
  plan.validate();
  const auto dict = ObservableDictionary::by_id(plan.dictionary_id);

  ChaosReport report;
  report.model_id = plan.model;
  for (std::size_t ni = 0; ni < plan.n_values.size(); ++ni) {
    const std::size_t n = plan.n_values[ni];
    std::vector<std::vector<double>> replicas(plan.replicas);
    parallel_for_index(plan.replicas, [&](std::size_t r) {
      replicas[r] = run_replica(plan, n, r, ni);
    });
    const DefectEstimate est = chaoticity_defect(replicas, dict);
    report.rows.push_back({n, plan.replicas, est.value, est.stderr_value});
  }

  // Log-log fit over rows whose defect clears 5x its standard error.
  std::vector<double> log_n, log_d;
  for (const auto& row : report.rows) {
    if (row.defect > 5.0 * row.stderr_value && row.defect > 0.0) {
      log_n.push_back(std::log(static_cast<double>(row.n_particles)));
      log_d.push_back(std::log(row.defect));
    }
  }
  if (log_n.size() >= 3) {
    const LineFit fit = fit_line(log_n, log_d);
    report.fit_valid = true;
    report.slope = fit.slope;
    report.intercept = fit.intercept;
    report.residual_rms = fit.residual_rms;
    report.slope_half_width = 2.0 * fit.slope_stderr;
  } else {
    report.warning =
        "fewer than 3 N values clear the 5-sigma defect threshold; "
        "increase replicas for the target standard error";
  }
  if (report.warning.empty() && log_n.size() < report.rows.size())
    report.warning = "some N values are at the Monte Carlo noise floor";
  return report;
}

T1Result t1_evaluate(const std::vector<TestFunction>& blocks,
                     const std::vector<double>& config) {
  const std::size_t ell = blocks.size();
  const std::size_t n = config.size();
  if (ell < 1) throw std::invalid_argument("t1_evaluate: need >= 1 block");
  if (n < 2 * ell)
    throw std::invalid_argument("t1_evaluate: bound requires N >= 2 ell");

  // Per-block values and means.
  std::vector<std::vector<double>> vals(ell, std::vector<double>(n));
  double monomial = 1.0;
  for (std::size_t b = 0; b < ell; ++b) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      vals[b][i] = blocks[b].f(config[i]);
      s += vals[b][i];
    }
    monomial *= s / static_cast<double>(n);
  }

  // Average over ordered tuples of distinct indices.
  double sym_sum = 0.0;
  std::uint64_t tuple_count = 0;
  std::vector<std::size_t> idx(ell, 0);
  std::vector<char> used(n, 0);
  std::function<void(std::size_t, double)> recurse = [&](std::size_t depth,
                                                         double partial) {
    if (depth == ell) {
      sym_sum += partial;
      ++tuple_count;
      return;
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (used[i]) continue;
      used[i] = 1;
      recurse(depth + 1, partial * vals[depth][i]);
      used[i] = 0;
    }
  };
  recurse(0, 1.0);

  double sup = 1.0;
  for (const auto& b : blocks) sup *= b.sup_norm;

  T1Result result;
  result.difference = std::fabs(sym_sum / static_cast<double>(tuple_count) - monomial);
  result.bound = 2.0 * static_cast<double>(ell) * static_cast<double>(ell) * sup /
                 static_cast<double>(n);
  result.ratio = result.difference / result.bound;
  return result;
}

T1SweepResult t1_bound_check(std::size_t n, int max_ell, std::uint64_t draws,
                             std::uint64_t seed) {
  if (n > 8) throw std::invalid_argument("t1_bound_check: N must be <= 8");
  if (max_ell < 1 || max_ell > 3)
    throw std::invalid_argument("t1_bound_check: ell must be in [1, 3]");
  if (n < 2 * static_cast<std::size_t>(max_ell))
    throw std::invalid_argument("t1_bound_check: bound requires N >= 2 ell");

  RngStream rng(seed, 0x7431 /* "t1" */);
  auto random_block = [&]() {
    TestFunction tf;
    switch (rng.below(3)) {
      case 0: {
        const double a = rng.uniform(0.3, 3.0), b = rng.uniform(-3.0, 3.0);
        tf.f = [a, b](double x) { return std::cos(a * x + b); };
        break;
      }
      case 1: {
        const double a = rng.uniform(0.5, 4.0), b = rng.uniform(-1.5, 1.5);
        tf.f = [a, b](double x) { return std::tanh(a * (x - b)); };
        break;
      }
      default: {
        const double b = rng.uniform(-1.5, 1.5);
        tf.f = [b](double x) { return x > b ? 1.0 : 0.0; };
        break;
      }
    }
    tf.sup_norm = 1.0;
    return tf;
  };

  T1SweepResult sweep;
  sweep.draws = draws;
  for (std::uint64_t d = 0; d < draws; ++d) {
    const int ell = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_ell)));
    std::vector<TestFunction> blocks;
    for (int b = 0; b < ell; ++b) blocks.push_back(random_block());
    std::vector<double> config(n);
    for (auto& x : config) x = rng.gaussian();
    const T1Result res = t1_evaluate(blocks, config);
    sweep.max_ratio = std::max(sweep.max_ratio, res.ratio);
    if (res.difference > res.bound * (1.0 + 1e-12)) ++sweep.violations;
  }
  if (sweep.violations > 0)
    throw std::runtime_error("t1_bound_check: combinatorial bound violated");
  return sweep;
}

namespace {

double bootstrap_w1_se_1d(const std::vector<double>& a, const std::vector<double>& b,
                          std::uint64_t seed) {
  const int n_resamples = 16;
  std::vector<double> vals(n_resamples);
  RngStream rng(seed, 0xb007);
  for (int i = 0; i < n_resamples; ++i) {
    std::vector<double> res(a.size());
    for (auto& x : res) x = a[rng.below(a.size())];
    vals[i] = w1_1d_unequal(res, b);
  }
  return std::sqrt(variance(vals));
}

double bootstrap_w1_se_matched(const std::vector<Point>& a,
                               const std::vector<Point>& b, std::uint64_t seed) {
  const int n_resamples = 8;
  std::vector<double> vals(n_resamples);
  RngStream rng(seed, 0xb007);
  const EmpiricalMeasure mb(b);
  for (int i = 0; i < n_resamples; ++i) {
    std::vector<Point> res(a.size());
    for (auto& x : res) x = a[rng.below(a.size())];
    vals[i] = w1_matched(EmpiricalMeasure(res), mb);
  }
  return std::sqrt(variance(vals));
}

}  // namespace

MarginalGapReport marginal_gap(const ExperimentPlan& plan) {
  plan.validate();
  MarginalGapReport report;
  report.model = plan.model;

  if (plan.model == "circle")
    throw std::invalid_argument(
        "marginal_gap: mean-field solver unavailable for model 'circle' "
        "(its limit solver is spectral, not sample-based)");

  for (std::size_t ni = 0; ni < plan.n_values.size(); ++ni) {
    const std::size_t n = plan.n_values[ni];
    MarginalGapRow row;
    row.n_particles = n;

    if (plan.model == "kac") {
      kac::MarginalGapOptions opts;
      opts.n_particles = n;
      opts.replicas = plan.replicas;
      opts.meanfield_size = std::max<std::size_t>(10 * n, 10000);
      opts.horizon = plan.horizon;
      opts.snapshot_interval = plan.horizon / 4.0;
      kac::MarginalGapReport gap = kac::marginal_gap_two_point(opts, plan.seed + ni);
      row.times = gap.times;
      row.w1 = gap.w1;
      row.sup_w1 = gap.sup_w1;
      const auto argmax =
          std::max_element(gap.w1.begin(), gap.w1.end()) - gap.w1.begin();
      row.sup_w1_stderr = bootstrap_w1_se_1d(
          gap.marginal_sets[static_cast<std::size_t>(argmax)],
          gap.meanfield_sets[static_cast<std::size_t>(argmax)], plan.seed + ni);
    } else if (plan.model == "averaging") {
      const auto g = averaging::NoiseLaw::gaussian(plan.averaging_sigma);
      const std::size_t n_snapshots = 4;
      const double snap_dt = plan.horizon / n_snapshots;
      // N-particle replicas: first coordinate per snapshot.
      std::vector<std::vector<double>> marg(n_snapshots + 1);
      for (std::size_t r = 0; r < plan.replicas; ++r) {
        RngStream rng(plan.seed + ni, r);
        std::vector<double> x(n);
        for (auto& xi : x) xi = rng.gaussian();
        averaging::AveragingEnsemble ens(std::move(x));
        marg[0].push_back(ens.positions[0]);
        for (std::size_t s = 1; s <= n_snapshots; ++s) {
          const auto events = static_cast<std::uint64_t>(
              std::llround(snap_dt * static_cast<double>(n) / 2.0));
          averaging::run_events(ens, g, events, rng);
          marg[s].push_back(ens.positions[0]);
        }
      }
      // Sample mean-field on the same grid.
      RngStream mf_rng(plan.seed + ni, 0x6d66);
      std::vector<double> mf(std::max<std::size_t>(10 * n, 10000));
      for (auto& xi : mf) xi = mf_rng.gaussian();
      for (std::size_t s = 0; s <= n_snapshots; ++s) {
        if (s > 0) averaging::meanfield_particles_exact(mf, g, snap_dt, mf_rng);
        row.times.push_back(static_cast<double>(s) * snap_dt);
        row.w1.push_back(w1_1d_unequal(marg[s], mf));
        if (row.w1.back() >= row.sup_w1) {
          row.sup_w1 = row.w1.back();
          row.sup_w1_stderr = bootstrap_w1_se_1d(marg[s], mf, plan.seed + ni);
        }
      }
    } else {  // boltzmann3
      const auto kernel = boltz3::CollisionKernel::constant(1.0);
      const std::size_t n_snapshots = 4;
      const double snap_dt = plan.horizon / n_snapshots;
      std::vector<std::vector<Point>> marg(n_snapshots + 1);
      for (std::size_t r = 0; r < plan.replicas; ++r) {
        RngStream rng(plan.seed + ni, r);
        std::vector<boltz3::Vec3> v(n);
        for (auto& vi : v) vi = {rng.gaussian(), rng.gaussian(), rng.gaussian()};
        boltz3::VelocityEnsemble3 ens(std::move(v));
        boltz3::SimulateOptions3 opts;
        opts.horizon = plan.horizon;
        opts.snapshot_interval = snap_dt;
        const auto traj = boltz3::simulate_collisions(ens, kernel, opts, rng);
        for (std::size_t s = 0; s <= n_snapshots && s < traj.snapshots.size(); ++s) {
          const auto& v0 = traj.snapshots[s][0];
          marg[s].push_back({v0[0], v0[1], v0[2]});
        }
      }
      RngStream mf_rng(plan.seed + ni, 0x6d66);
      std::vector<boltz3::Vec3> mf(std::max<std::size_t>(10 * n, 4000));
      for (auto& vi : mf) vi = {mf_rng.gaussian(), mf_rng.gaussian(), mf_rng.gaussian()};
      for (std::size_t s = 0; s <= n_snapshots; ++s) {
        if (s > 0) boltz3::nanbu_meanfield3(mf, kernel, snap_dt, 0.05, mf_rng);
        std::vector<Point> mf_pts;
        for (const auto& vi : mf) mf_pts.push_back({vi[0], vi[1], vi[2]});
        const std::size_t target = std::min({marg[s].size(), mf_pts.size(),
                                             kW1ExactCap});
        const auto a = subsample(std::span<const Point>(marg[s]), target,
                                 plan.seed ^ s);
        const auto b = subsample(std::span<const Point>(mf_pts), target,
                                 (plan.seed ^ s) + 1);
        row.times.push_back(static_cast<double>(s) * snap_dt);
        row.w1.push_back(w1_matched(EmpiricalMeasure(a), EmpiricalMeasure(b)));
        if (row.w1.back() >= row.sup_w1) {
          row.sup_w1 = row.w1.back();
          row.sup_w1_stderr = bootstrap_w1_se_matched(a, b, plan.seed + ni);
        }
      }
    }
    report.rows.push_back(std::move(row));
  }
  return report;
}

}  // namespace pocsim::harness
