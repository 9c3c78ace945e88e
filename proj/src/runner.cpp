#include "pocsim/runner.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"
#include "pocsim/averaging.hpp"
#include "pocsim/boltzmann3.hpp"
#include "pocsim/circle.hpp"
#include "pocsim/harness.hpp"
#include "pocsim/io.hpp"
#include "pocsim/kac.hpp"
#include "pocsim/measures.hpp"
#include "pocsim/parallel.hpp"
#include "pocsim/speciation.hpp"
#include "pocsim/stats.hpp"

#ifndef POCSIM_VERSION
#define POCSIM_VERSION "0.0.0+unknown"
#endif

namespace pocsim::runner {

namespace {

using nlohmann::json;

std::string resolve_out_dir(const std::string& out) {
  std::filesystem::path p(out);
  if (p.is_relative()) {
    if (const char* root = std::getenv("POCSIM_OUT_ROOT")) p = std::filesystem::path(root) / p;
  }
  return p.string();
}

/// Collects artifacts, then writes them plus a manifest carrying the
/// resolved config echo, seed, version stamp, wall time, and a checksum
/// per output file.
class RunWriter {
 public:
  RunWriter(std::string subcommand, json config_echo, std::uint64_t seed,
            std::string out_dir)
      : subcommand_(std::move(subcommand)),
        config_(std::move(config_echo)),
        seed_(seed),
        out_dir_(resolve_out_dir(out_dir)),
        start_(std::chrono::steady_clock::now()) {}

  void add_artifact(const std::string& name, const std::string& bytes) {
    artifacts_.emplace_back(name, bytes);
  }
  void add_extra(const std::string& key, json value) { extra_[key] = std::move(value); }

  void commit() {
    std::filesystem::create_directories(out_dir_);
    json outputs = json::array();
    for (const auto& [name, bytes] : artifacts_) {
      const std::string path = (std::filesystem::path(out_dir_) / name).string();
      write_file(path, bytes);
      outputs.push_back({{"path", name},
                         {"bytes", bytes.size()},
                         {"fnv1a64", fnv1a64_hex(bytes)}});
    }
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    json manifest{{"subcommand", subcommand_}, {"version", POCSIM_VERSION},
                  {"seed", seed_},             {"wall_time_s", wall},
                  {"config", config_},         {"outputs", outputs}};
    if (!extra_.empty()) manifest["extra"] = extra_;
    write_file((std::filesystem::path(out_dir_) / "run_manifest.json").string(),
               manifest.dump(2) + "\n");
  }

 private:
  std::string subcommand_;
  json config_;
  std::uint64_t seed_;
  std::string out_dir_;
  std::chrono::steady_clock::time_point start_;
  std::vector<std::pair<std::string, std::string>> artifacts_;
  json extra_;
};

// ---------------------------------------------------------------- kac ----

struct KacArgs {
  std::size_t n = 100;
  double horizon = 2.0;
  double snapshot_interval = 0.5;
  std::string theta_law = "uniform";
  double theta_tau = 1.0;
  std::string initial = "two-point";  // two-point | equilibrium
  std::size_t replicas = 1;
  bool log_events = false;
};

int exec_kac(const KacArgs& a, std::uint64_t seed, const std::string& out) {
  if (a.theta_law != "uniform" && a.theta_law != "wrapped-gaussian")
    throw CLI::ValidationError("kac.theta-law",
                               "must be 'uniform' or 'wrapped-gaussian'");
  if (a.initial != "two-point" && a.initial != "equilibrium")
    throw CLI::ValidationError("kac.initial", "must be 'two-point' or 'equilibrium'");

  kac::SimulateOptions opts;
  opts.horizon = a.horizon;
  opts.snapshot_interval = a.snapshot_interval;
  opts.log_events = a.log_events;
  opts.theta_law.kind = a.theta_law == "uniform"
                            ? kac::ThetaLaw::Kind::kUniform
                            : kac::ThetaLaw::Kind::kWrappedGaussian;
  opts.theta_law.tau = a.theta_tau;

  struct ReplicaOut {
    kac::Trajectory traj;
  };
  std::vector<ReplicaOut> results(a.replicas);
  parallel_for_index(a.replicas, [&](std::size_t r) {
    RngStream rng(seed, r);
    std::vector<double> v0(a.n);
    if (a.initial == "two-point") {
      const double c = std::sqrt(2.0);
      for (auto& vi : v0) vi = (rng.next_u64() & 1ULL) ? c : -c;
    } else {
      v0 = rng.uniform_sphere(a.n, std::sqrt(2.0 * static_cast<double>(a.n)));
    }
    kac::KacState state(std::move(v0));
    results[r].traj = kac::simulate_kac(state, opts, rng);
  });

  CsvWriter csv({"replica", "t", "energy", "momentum", "m2", "m4"});
  for (std::size_t r = 0; r < a.replicas; ++r) {
    const auto& traj = results[r].traj;
    for (std::size_t s = 0; s < traj.snapshot_times.size(); ++s) {
      const auto& v = traj.snapshots[s];
      CompensatedSum e, p, m4;
      for (double vi : v) {
        e.add(vi * vi);
        p.add(vi);
        m4.add(vi * vi * vi * vi);
      }
      const double n = static_cast<double>(v.size());
      csv.append_row({static_cast<double>(r), traj.snapshot_times[s], 0.5 * e.value(),
                      p.value(), e.value() / n, m4.value() / n});
    }
  }

  RunWriter writer("kac",
                   json{{"n", a.n},
                        {"t", a.horizon},
                        {"snapshot-interval", a.snapshot_interval},
                        {"theta-law", a.theta_law},
                        {"theta-tau", a.theta_tau},
                        {"initial", a.initial},
                        {"replicas", a.replicas},
                        {"seed", seed}},
                   seed, out);
  writer.add_artifact("kac_moments.csv", csv.str());
  if (a.log_events) {
    CsvWriter events({"replica", "t", "i", "j", "theta"});
    for (std::size_t r = 0; r < a.replicas; ++r)
      for (const auto& ev : results[r].traj.events)
        events.append_row({static_cast<double>(r), ev.time, static_cast<double>(ev.i),
                           static_cast<double>(ev.j), ev.theta});
    writer.add_artifact("kac_events.csv", events.str());
  }
  std::uint64_t total_events = 0, renorms = 0;
  for (const auto& r : results) {
    total_events += r.traj.event_count;
    renorms += r.traj.renormalizations;
  }
  writer.add_extra("total_events", total_events);
  writer.add_extra("renormalizations", renorms);
  writer.commit();
  return kExitOk;
}

// ------------------------------------------------------------- circle ----

struct CircleArgs {
  std::size_t n = 2000;
  double tau = 0.5;
  std::string rho_family = "gaussian";
  int truncation = 64;
  double horizon = 8.0;
  double dt = 0.005;
  double snapshot_interval = 0.25;
  std::size_t replicas = 100;
  double initial_a1 = 0.1;
};

int exec_circle(const CircleArgs& a, std::uint64_t seed, const std::string& out) {
  circle::ComparisonOptions opts;
  opts.n_particles = a.n;
  opts.replicas = a.replicas;
  opts.tau = a.tau;
  opts.family = noise_family_from_string(a.rho_family);
  opts.initial_a1 = a.initial_a1;
  opts.horizon = a.horizon;
  opts.snapshot_interval = a.snapshot_interval;
  opts.truncation = a.truncation;
  opts.dt = a.dt;
  const circle::ComparisonReport report = circle::particle_vs_spectral(opts, seed);

  CsvWriter csv({"t", "a1_particle", "a1_spectral", "stderr"});
  for (std::size_t s = 0; s < report.times.size(); ++s)
    csv.append_row({report.times[s], report.a1_particle[s], report.a1_spectral[s],
                    report.a1_particle_stderr[s]});

  const WrappedNoise noise(opts.family, a.tau);
  RunWriter writer("circle",
                   json{{"n", a.n},
                        {"tau", a.tau},
                        {"rho-family", a.rho_family},
                        {"k", a.truncation},
                        {"t", a.horizon},
                        {"dt", a.dt},
                        {"snapshot-interval", a.snapshot_interval},
                        {"replicas", a.replicas},
                        {"initial-a1", a.initial_a1},
                        {"seed", seed}},
                   seed, out);
  writer.add_artifact("circle_a1.csv", csv.str());
  writer.add_extra("lambda1", report.lambda1);
  writer.add_extra("gamma1", noise_spectrum(noise, 1)[1]);
  writer.add_extra("sup_difference", report.sup_difference);
  writer.add_extra("regime", report.lambda1 > 0.0 ? "supercritical" : "subcritical");
  writer.commit();
  return kExitOk;
}

// ---------------------------------------------------------- averaging ----

struct AveragingArgs {
  std::size_t n = 10000;
  std::string g_family = "gaussian";
  double g_param = 1.0;
  double horizon = 10.0;
  double snapshot_interval = 1.0;
  double grid_xi = 20.0;
  double grid_h = 0.01;
};

int exec_averaging(const AveragingArgs& a, std::uint64_t seed, const std::string& out) {
  const auto g = averaging::NoiseLaw::from_strings(a.g_family, a.g_param);
  RngStream rng(seed, 0);
  std::vector<double> x0(a.n, 0.0);
  averaging::AveragingEnsemble ensemble(std::move(x0));

  // Probe frequencies for the distance to the stationary characteristic
  // function.
  std::vector<double> probes;
  for (double xi = 0.25; xi <= 5.0 + 1e-9; xi += 0.25) probes.push_back(xi);
  auto ecf_residual = [&]() {
    double worst = 0.0;
    for (double xi : probes)
      worst = std::max(worst, std::abs(ensemble.char_fun(xi) -
                                       averaging::stationary_charfun(g, xi, 1e-10)));
    return worst;
  };

  const auto events_per_snapshot = static_cast<std::uint64_t>(std::llround(
      a.snapshot_interval * static_cast<double>(a.n) / 2.0));
  const auto n_snapshots =
      static_cast<std::size_t>(std::llround(a.horizon / a.snapshot_interval));

  CsvWriter csv({"t", "events", "variance", "ecf_sup_dist"});
  csv.append_row({0.0, 0.0, ensemble.variance(), ecf_residual()});
  for (std::size_t s = 1; s <= n_snapshots; ++s) {
    averaging::run_events(ensemble, g, events_per_snapshot, rng);
    csv.append_row({ensemble.time(), static_cast<double>(ensemble.events),
                    ensemble.variance(), ecf_residual()});
  }

  // Dyadic fixed-point residual of the stationary transform on the grid.
  averaging::CharFunGrid grid(a.grid_xi, a.grid_h);
  grid.fill([&](double xi) { return averaging::stationary_charfun(g, xi, 1e-10); });
  const double residual = averaging::fixed_point_residual(grid, g);

  RunWriter writer("averaging",
                   json{{"n", a.n},
                        {"g-family", a.g_family},
                        {"g-param", a.g_param},
                        {"t", a.horizon},
                        {"snapshot-interval", a.snapshot_interval},
                        {"grid-xi", a.grid_xi},
                        {"grid-h", a.grid_h},
                        {"seed", seed}},
                   seed, out);
  writer.add_artifact("averaging.csv", csv.str());
  writer.add_extra("stationary_fixed_point_residual", residual);
  writer.add_extra("stationary_variance_target", 2.0 * g.variance());
  writer.commit();
  return kExitOk;
}

// ---------------------------------------------------------- boltzmann3 ----

struct Boltzmann3Args {
  std::size_t n = 100;
  std::string gamma_family = "constant";
  double gamma_value = 1.0;
  double gamma_cap = 1.0;
  double gamma_max = 0.0;  // 0: derived from the family
  std::string b_family = "isotropic";
  double anisotropy = 0.0;
  double horizon = 10.0;
  double snapshot_interval = 1.0;
  bool log_events = false;
};

boltz3::CollisionKernel make_kernel(const Boltzmann3Args& a) {
  boltz3::CollisionKernel kernel =
      a.gamma_family == "constant"
          ? boltz3::CollisionKernel::constant(a.gamma_value)
          : boltz3::CollisionKernel::capped_linear(a.gamma_value, a.gamma_cap);
  if (a.gamma_max > 0.0) kernel.gamma_max = a.gamma_max;
  if (a.b_family == "isotropic") {
    kernel.angular_family = boltz3::CollisionKernel::AngularFamily::kIsotropic;
  } else if (a.b_family == "linear-cos") {
    kernel.angular_family = boltz3::CollisionKernel::AngularFamily::kLinearCos;
    kernel.anisotropy = a.anisotropy;
  } else {
    throw CLI::ValidationError("boltzmann3.b-family",
                               "must be 'isotropic' or 'linear-cos'");
  }
  if (std::fabs(kernel.anisotropy) > 1.0)
    throw CLI::ValidationError("boltzmann3.anisotropy", "must lie in [-1, 1]");
  // Kernel contract: probe gamma on the documented grid r = 0(0.05)50 and
  // reject an understated bound before the run starts.
  for (int i = 0; i <= 1000; ++i) {
    const double r = 0.05 * i;
    double g = 0.0;
    switch (kernel.gamma_family) {
      case boltz3::CollisionKernel::GammaFamily::kConstant:
        g = kernel.gamma_value;
        break;
      case boltz3::CollisionKernel::GammaFamily::kCappedLinear:
        g = std::min(kernel.gamma_value * r, kernel.gamma_cap);
        break;
    }
    if (g > kernel.gamma_max)
      throw CLI::ValidationError(
          "boltzmann3.gamma-max",
          "declared bound understates gamma on the probe grid");
  }
  return kernel;
}

int exec_boltzmann3(const Boltzmann3Args& a, std::uint64_t seed,
                    const std::string& out) {
  const auto kernel = make_kernel(a);
  RngStream rng(seed, 0);
  std::vector<boltz3::Vec3> v0(a.n);
  for (auto& v : v0) v = {rng.gaussian(), rng.gaussian(), rng.gaussian()};
  boltz3::VelocityEnsemble3 ensemble(std::move(v0));

  boltz3::SimulateOptions3 opts;
  opts.horizon = a.horizon;
  opts.snapshot_interval = a.snapshot_interval;
  opts.log_events = a.log_events;
  const auto traj = boltz3::simulate_collisions(ensemble, kernel, opts, rng);

  CsvWriter csv({"t", "energy", "px", "py", "pz"});
  for (std::size_t s = 0; s < traj.snapshot_times.size(); ++s) {
    CompensatedSum e, px, py, pz;
    for (const auto& v : traj.snapshots[s]) {
      e.add(boltz3::dot(v, v));
      px.add(v[0]);
      py.add(v[1]);
      pz.add(v[2]);
    }
    csv.append_row({traj.snapshot_times[s], e.value(), px.value(), py.value(),
                    pz.value()});
  }

  RunWriter writer("boltzmann3",
                   json{{"n", a.n},
                        {"gamma-family", a.gamma_family},
                        {"gamma-value", a.gamma_value},
                        {"gamma-cap", a.gamma_cap},
                        {"gamma-max", kernel.gamma_max},
                        {"b-family", a.b_family},
                        {"anisotropy", a.anisotropy},
                        {"t", a.horizon},
                        {"snapshot-interval", a.snapshot_interval},
                        {"seed", seed}},
                   seed, out);
  writer.add_artifact("boltzmann3.csv", csv.str());
  if (a.log_events) {
    CsvWriter events({"t", "i", "j", "sigma_x", "sigma_y", "sigma_z", "accepted"});
    for (const auto& ev : traj.events)
      events.append_row({ev.time, static_cast<double>(ev.i), static_cast<double>(ev.j),
                         ev.sigma[0], ev.sigma[1], ev.sigma[2],
                         ev.accepted ? 1.0 : 0.0});
    writer.add_artifact("boltzmann3_events.csv", events.str());
  }
  writer.add_extra("accepted_events", traj.accepted);
  writer.add_extra("candidate_events", traj.candidates);
  writer.commit();
  return kExitOk;
}

// ---------------------------------------------------------- speciation ----

struct SpeciationArgs {
  std::vector<double> food_x{-1.0, 1.0};
  std::vector<double> food_w{100.0, 100.0};
  double sigma_x = 0.3;
  // Choosiness at a tenth of the stationary appearance dispersion
  // sqrt(2) * mut_y; <= 0 means infinite (random mating).
  double sigma_mate = 0.007;
  double mut_x = 0.05;
  double mut_y = 0.05;
  double mut_y_star = 0.05;
  std::size_t d_y = 1;
  std::size_t n0 = 200;
  double x0 = 0.0;
  std::uint64_t generations = 500;
  double bandwidth = 0.15;
  std::size_t cap = 1000000;
};

int exec_speciation(const SpeciationArgs& a, std::uint64_t seed,
                    const std::string& out) {
  if (a.food_x.size() != a.food_w.size() || a.food_x.empty())
    throw CLI::ValidationError("speciation.food", "atom locations and weights differ");
  std::vector<speciation::FoodDistribution::Atom> atoms;
  for (std::size_t i = 0; i < a.food_x.size(); ++i) {
    if (!(a.food_w[i] > 0.0))
      throw CLI::ValidationError("speciation.food-w", "weights must be positive");
    atoms.push_back({a.food_x[i], a.food_w[i]});
  }
  speciation::FoodDistribution food(std::move(atoms));
  speciation::SpeciationParams params;
  params.sigma_x = a.sigma_x;
  params.sigma_mate =
      a.sigma_mate > 0.0 ? a.sigma_mate : std::numeric_limits<double>::infinity();
  params.mut_x = a.mut_x;
  params.mut_y = a.mut_y;
  params.mut_y_star = a.mut_y_star;
  params.d_y = a.d_y;
  params.population_cap = a.cap;
  try {
    params.validate();
  } catch (const std::exception& e) {
    throw CLI::ValidationError("speciation", e.what());
  }

  RngStream rng(seed, 0);
  auto lineage = speciation::run_lineage(speciation::founders(a.n0, a.x0, params),
                                         food, params, a.generations, a.bandwidth,
                                         rng);

  CsvWriter csv({"t", "n", "w_c", "modes_x", "modes_y", "mean_x", "var_x"});
  for (const auto& row : lineage.history)
    csv.append_row({static_cast<double>(row.generation),
                    static_cast<double>(row.population), row.entropy,
                    static_cast<double>(row.modes_x),
                    static_cast<double>(row.modes_y), row.mean_x, row.var_x});

  RunWriter writer("speciation",
                   json{{"food-x", a.food_x},
                        {"food-w", a.food_w},
                        {"sigma-x", a.sigma_x},
                        {"sigma-mate", a.sigma_mate},
                        {"mut-x", a.mut_x},
                        {"mut-y", a.mut_y},
                        {"mut-ystar", a.mut_y_star},
                        {"d-y", a.d_y},
                        {"n0", a.n0},
                        {"x0", a.x0},
                        {"generations", a.generations},
                        {"bandwidth", a.bandwidth},
                        {"cap", a.cap},
                        {"seed", seed}},
                   seed, out);
  writer.add_artifact("speciation.csv", csv.str());
  writer.add_extra("extinct", lineage.extinct);
  writer.add_extra("final_population", lineage.final_population.size());
  writer.commit();
  return kExitOk;
}

// ------------------------------------------------- harness subcommands ----

struct SweepArgs {
  std::string model = "kac";
  std::vector<std::size_t> n_values{50, 100, 200, 400};
  std::size_t replicas = 10000;
  double horizon = 2.0;
  std::string dictionary = "standard";
  double tau = 1.0;
  double sigma = 1.0;
};

harness::ExperimentPlan make_plan(const SweepArgs& a, std::uint64_t seed) {
  harness::ExperimentPlan plan;
  plan.model = a.model;
  plan.n_values = a.n_values;
  plan.replicas = a.replicas;
  plan.horizon = a.horizon;
  plan.dictionary_id = a.dictionary;
  plan.seed = seed;
  plan.circle_tau = a.tau;
  plan.averaging_sigma = a.sigma;
  try {
    plan.validate();
  } catch (const std::exception& e) {
    throw CLI::ValidationError("plan", e.what());
  }
  return plan;
}

int exec_chaos_sweep(const SweepArgs& a, std::uint64_t seed, const std::string& out) {
  const auto plan = make_plan(a, seed);
  const ChaosReport report = harness::chaos_sweep(plan);

  RunWriter writer("chaos-sweep",
                   json{{"model", a.model},
                        {"n", a.n_values},
                        {"replicas", a.replicas},
                        {"t", a.horizon},
                        {"dictionary", a.dictionary},
                        {"tau", a.tau},
                        {"sigma", a.sigma},
                        {"seed", seed}},
                   seed, out);
  writer.add_artifact("chaos_report.csv", report.to_csv());
  writer.add_artifact("chaos_report.jsonl", report.to_jsonl());
  if (report.fit_valid) {
    writer.add_extra("fit", json{{"slope", report.slope},
                                 {"intercept", report.intercept},
                                 {"residual_rms", report.residual_rms},
                                 {"half_width", report.slope_half_width}});
  }
  if (!report.warning.empty()) writer.add_extra("warning", report.warning);
  if (a.model == "circle") {
    const WrappedNoise noise(NoiseFamily::kGaussian, a.tau);
    if (circle::lambda_k(noise_spectrum(noise, 1), 1) > 0.0)
      writer.add_extra("long_time_warning",
                       "supercritical pair-interaction dynamics: stationary "
                       "N-particle states need not be chaotic; a long-horizon "
                       "defect may not decay with N");
  }
  writer.commit();
  std::cout << "chaos-sweep: " << (report.fit_valid
                                       ? "slope " + format_double(report.slope)
                                       : "fit unavailable")
            << "\n";
  return kExitOk;
}

struct T1Args {
  std::size_t n = 8;
  int max_ell = 3;
  std::uint64_t draws = 10000;
};

int exec_t1_check(const T1Args& a, std::uint64_t seed, const std::string& out) {
  harness::T1SweepResult sweep;
  int exit_code = kExitOk;
  std::string error;
  try {
    sweep = harness::t1_bound_check(a.n, a.max_ell, a.draws, seed);
  } catch (const std::runtime_error& e) {
    error = e.what();
    exit_code = kExitAssertion;
  }
  RunWriter writer("t1-check",
                   json{{"n", a.n}, {"ell", a.max_ell}, {"draws", a.draws},
                        {"seed", seed}},
                   seed, out);
  json record{{"n", a.n},
              {"ell_max", a.max_ell},
              {"draws", sweep.draws},
              {"max_ratio", sweep.max_ratio},
              {"violations", sweep.violations}};
  if (!error.empty()) record["error"] = error;
  writer.add_artifact("t1_report.jsonl", record.dump() + "\n");
  writer.commit();
  if (exit_code != kExitOk) std::cerr << "t1-check: " << error << "\n";
  return exit_code;
}

int exec_marginal_gap(const SweepArgs& a, std::uint64_t seed, const std::string& out) {
  const auto plan = make_plan(a, seed);
  const auto report = harness::marginal_gap(plan);

  CsvWriter csv({"model", "N", "t", "w1"});
  CsvWriter summary({"model", "N", "sup_w1", "stderr"});
  for (const auto& row : report.rows) {
    for (std::size_t s = 0; s < row.times.size(); ++s)
      csv.append_row_raw({report.model, std::to_string(row.n_particles),
                          format_double(row.times[s]), format_double(row.w1[s])});
    summary.append_row_raw({report.model, std::to_string(row.n_particles),
                            format_double(row.sup_w1),
                            format_double(row.sup_w1_stderr)});
  }

  // Monotonicity in N, net of two standard errors.
  int exit_code = kExitOk;
  std::string violation;
  for (std::size_t i = 1; i < report.rows.size(); ++i) {
    const auto& prev = report.rows[i - 1];
    const auto& cur = report.rows[i];
    const double slack =
        2.0 * std::sqrt(prev.sup_w1_stderr * prev.sup_w1_stderr +
                        cur.sup_w1_stderr * cur.sup_w1_stderr);
    if (cur.sup_w1 > prev.sup_w1 + slack) {
      exit_code = kExitAssertion;
      violation = "sup W1 increased from N=" + std::to_string(prev.n_particles) +
                  " to N=" + std::to_string(cur.n_particles) +
                  " beyond 2 standard errors";
    }
  }

  RunWriter writer("marginal-gap",
                   json{{"model", a.model},
                        {"n", a.n_values},
                        {"replicas", a.replicas},
                        {"t", a.horizon},
                        {"seed", seed}},
                   seed, out);
  writer.add_artifact("marginal_gap.csv", csv.str());
  writer.add_artifact("marginal_gap_summary.csv", summary.str());
  if (!violation.empty()) writer.add_extra("violation", violation);
  writer.commit();
  if (exit_code != kExitOk) std::cerr << "marginal-gap: " << violation << "\n";
  return exit_code;
}

// -------------------------------------------------------------- driver ----

json load_config(const std::vector<std::string>& args) {
  for (std::size_t i = 0; i + 1 < args.size(); ++i)
    if (args[i] == "--config") {
      const std::string text = read_file(args[i + 1]);
      return json::parse(text);
    }
  return json::object();
}

// Pulls `key` out of the subcommand section of the config, if present.
template <typename T>
void config_default(const json& cfg, const std::string& section,
                    const std::string& key, T& target) {
  if (cfg.contains(section) && cfg[section].contains(key))
    target = cfg[section][key].get<T>();
}

}  // namespace

int run(const std::vector<std::string>& args) {
  json cfg;
  try {
    cfg = load_config(args);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }

  CLI::App app{"interacting-particle simulation and verification workbench"};
  app.require_subcommand(1);
  app.fallthrough(true);

  std::uint64_t seed = 1;
  std::string out = "out";
  std::string config_path;
  if (cfg.contains("seed")) seed = cfg["seed"].get<std::uint64_t>();
  if (cfg.contains("out")) out = cfg["out"].get<std::string>();
  app.add_option("--config", config_path, "JSON config file (flags override it)");
  app.add_option("--seed", seed, "top-level seed; replica streams derive from it");
  app.add_option("--out", out, "output directory");

  KacArgs kac_args;
  config_default(cfg, "kac", "n", kac_args.n);
  config_default(cfg, "kac", "t", kac_args.horizon);
  config_default(cfg, "kac", "snapshot-interval", kac_args.snapshot_interval);
  config_default(cfg, "kac", "theta-law", kac_args.theta_law);
  config_default(cfg, "kac", "theta-tau", kac_args.theta_tau);
  config_default(cfg, "kac", "initial", kac_args.initial);
  config_default(cfg, "kac", "replicas", kac_args.replicas);
  config_default(cfg, "kac", "events", kac_args.log_events);
  auto* kac_cmd = app.add_subcommand("kac", "Kac energy-sphere jump process");
  kac_cmd->add_option("--n", kac_args.n, "particle count")->check(CLI::Range(std::size_t{2}, std::size_t{1000000}));
  kac_cmd->add_option("--t", kac_args.horizon, "time horizon")->check(CLI::PositiveNumber);
  kac_cmd->add_option("--snapshot-interval", kac_args.snapshot_interval, "snapshot spacing");
  kac_cmd->add_option("--theta-law", kac_args.theta_law, "uniform | wrapped-gaussian");
  kac_cmd->add_option("--theta-tau", kac_args.theta_tau, "wrapped-gaussian concentration");
  kac_cmd->add_option("--initial", kac_args.initial, "two-point | equilibrium");
  kac_cmd->add_option("--replicas", kac_args.replicas, "independent replicas")->check(CLI::PositiveNumber);
  kac_cmd->add_flag("--events", kac_args.log_events, "write the event log CSV");

  CircleArgs circle_args;
  config_default(cfg, "circle", "n", circle_args.n);
  config_default(cfg, "circle", "tau", circle_args.tau);
  config_default(cfg, "circle", "rho-family", circle_args.rho_family);
  config_default(cfg, "circle", "k", circle_args.truncation);
  config_default(cfg, "circle", "t", circle_args.horizon);
  config_default(cfg, "circle", "dt", circle_args.dt);
  config_default(cfg, "circle", "snapshot-interval", circle_args.snapshot_interval);
  config_default(cfg, "circle", "replicas", circle_args.replicas);
  config_default(cfg, "circle", "initial-a1", circle_args.initial_a1);
  auto* circle_cmd = app.add_subcommand("circle", "circle alignment model vs spectral solver");
  circle_cmd->add_option("--n", circle_args.n, "particle count")->check(CLI::Range(std::size_t{500}, std::size_t{1000000}));
  circle_cmd->add_option("--tau", circle_args.tau, "noise concentration")->check(CLI::PositiveNumber);
  circle_cmd->add_option("--rho-family", circle_args.rho_family, "gaussian | uniform | point-pair");
  circle_cmd->add_option("--k", circle_args.truncation, "Fourier truncation")->check(CLI::Range(2, 4096));
  circle_cmd->add_option("--t", circle_args.horizon, "time horizon")->check(CLI::PositiveNumber);
  circle_cmd->add_option("--dt", circle_args.dt, "spectral step (<= 0.01)");
  circle_cmd->add_option("--snapshot-interval", circle_args.snapshot_interval, "snapshot spacing");
  circle_cmd->add_option("--replicas", circle_args.replicas, "particle replicas")->check(CLI::Range(std::size_t{100}, std::size_t{100000}));
  circle_cmd->add_option("--initial-a1", circle_args.initial_a1, "initial first-mode amplitude");

  AveragingArgs avg_args;
  config_default(cfg, "averaging", "n", avg_args.n);
  config_default(cfg, "averaging", "g-family", avg_args.g_family);
  config_default(cfg, "averaging", "g-param", avg_args.g_param);
  config_default(cfg, "averaging", "t", avg_args.horizon);
  config_default(cfg, "averaging", "snapshot-interval", avg_args.snapshot_interval);
  config_default(cfg, "averaging", "grid-xi", avg_args.grid_xi);
  config_default(cfg, "averaging", "grid-h", avg_args.grid_h);
  auto* avg_cmd = app.add_subcommand("averaging", "pair-replacement averaging process");
  avg_cmd->add_option("--n", avg_args.n, "particle count")->check(CLI::Range(std::size_t{2}, std::size_t{10000000}));
  avg_cmd->add_option("--g-family", avg_args.g_family, "gaussian | uniform | two-point");
  avg_cmd->add_option("--g-param", avg_args.g_param, "family parameter")->check(CLI::PositiveNumber);
  avg_cmd->add_option("--t", avg_args.horizon, "time horizon (N/2 events per unit)")->check(CLI::PositiveNumber);
  avg_cmd->add_option("--snapshot-interval", avg_args.snapshot_interval, "snapshot spacing");
  avg_cmd->add_option("--grid-xi", avg_args.grid_xi, "characteristic grid extent");
  avg_cmd->add_option("--grid-h", avg_args.grid_h, "characteristic grid step");

  Boltzmann3Args b3_args;
  config_default(cfg, "boltzmann3", "n", b3_args.n);
  config_default(cfg, "boltzmann3", "gamma-family", b3_args.gamma_family);
  config_default(cfg, "boltzmann3", "gamma-value", b3_args.gamma_value);
  config_default(cfg, "boltzmann3", "gamma-cap", b3_args.gamma_cap);
  config_default(cfg, "boltzmann3", "gamma-max", b3_args.gamma_max);
  config_default(cfg, "boltzmann3", "b-family", b3_args.b_family);
  config_default(cfg, "boltzmann3", "anisotropy", b3_args.anisotropy);
  config_default(cfg, "boltzmann3", "t", b3_args.horizon);
  config_default(cfg, "boltzmann3", "snapshot-interval", b3_args.snapshot_interval);
  config_default(cfg, "boltzmann3", "events", b3_args.log_events);
  auto* b3_cmd = app.add_subcommand("boltzmann3", "bounded-kernel 3-D collision process");
  b3_cmd->add_option("--n", b3_args.n, "particle count")->check(CLI::Range(std::size_t{2}, std::size_t{1000000}));
  b3_cmd->add_option("--gamma-family", b3_args.gamma_family, "constant | capped-linear");
  b3_cmd->add_option("--gamma-value", b3_args.gamma_value, "constant value or slope")->check(CLI::PositiveNumber);
  b3_cmd->add_option("--gamma-cap", b3_args.gamma_cap, "cap of capped-linear")->check(CLI::PositiveNumber);
  b3_cmd->add_option("--gamma-max", b3_args.gamma_max, "declared kernel bound");
  b3_cmd->add_option("--b-family", b3_args.b_family, "isotropic | linear-cos");
  b3_cmd->add_option("--anisotropy", b3_args.anisotropy, "linear-cos tilt in [-1,1]");
  b3_cmd->add_option("--t", b3_args.horizon, "time horizon")->check(CLI::PositiveNumber);
  b3_cmd->add_option("--snapshot-interval", b3_args.snapshot_interval, "snapshot spacing");
  b3_cmd->add_flag("--events", b3_args.log_events, "write the event log CSV");

  SpeciationArgs spc_args;
  config_default(cfg, "speciation", "food-x", spc_args.food_x);
  config_default(cfg, "speciation", "food-w", spc_args.food_w);
  config_default(cfg, "speciation", "sigma-x", spc_args.sigma_x);
  config_default(cfg, "speciation", "sigma-mate", spc_args.sigma_mate);
  config_default(cfg, "speciation", "mut-x", spc_args.mut_x);
  config_default(cfg, "speciation", "mut-y", spc_args.mut_y);
  config_default(cfg, "speciation", "mut-ystar", spc_args.mut_y_star);
  config_default(cfg, "speciation", "d-y", spc_args.d_y);
  config_default(cfg, "speciation", "n0", spc_args.n0);
  config_default(cfg, "speciation", "x0", spc_args.x0);
  config_default(cfg, "speciation", "generations", spc_args.generations);
  config_default(cfg, "speciation", "bandwidth", spc_args.bandwidth);
  config_default(cfg, "speciation", "cap", spc_args.cap);
  auto* spc_cmd = app.add_subcommand("speciation", "assortative-mating agent model");
  spc_cmd->add_option("--food-x", spc_args.food_x, "food atom locations");
  spc_cmd->add_option("--food-w", spc_args.food_w, "food atom weights");
  spc_cmd->add_option("--sigma-x", spc_args.sigma_x, "competition width");
  spc_cmd->add_option("--sigma-mate", spc_args.sigma_mate, "choosiness (<= 0: random mating)");
  spc_cmd->add_option("--mut-x", spc_args.mut_x, "x mutation std-dev");
  spc_cmd->add_option("--mut-y", spc_args.mut_y, "y mutation std-dev");
  spc_cmd->add_option("--mut-ystar", spc_args.mut_y_star, "y* mutation std-dev");
  spc_cmd->add_option("--d-y", spc_args.d_y, "appearance-trait dimension")->check(CLI::PositiveNumber);
  spc_cmd->add_option("--n0", spc_args.n0, "founder count")->check(CLI::Range(std::size_t{2}, std::size_t{1000000}));
  spc_cmd->add_option("--x0", spc_args.x0, "founder fitness trait");
  spc_cmd->add_option("--generations", spc_args.generations, "generations to run");
  spc_cmd->add_option("--bandwidth", spc_args.bandwidth, "KDE bandwidth for mode counts")->check(CLI::PositiveNumber);
  spc_cmd->add_option("--cap", spc_args.cap, "population safety cap");

  SweepArgs sweep_args;
  config_default(cfg, "chaos-sweep", "model", sweep_args.model);
  config_default(cfg, "chaos-sweep", "n", sweep_args.n_values);
  config_default(cfg, "chaos-sweep", "replicas", sweep_args.replicas);
  config_default(cfg, "chaos-sweep", "t", sweep_args.horizon);
  config_default(cfg, "chaos-sweep", "dictionary", sweep_args.dictionary);
  config_default(cfg, "chaos-sweep", "tau", sweep_args.tau);
  config_default(cfg, "chaos-sweep", "sigma", sweep_args.sigma);
  auto* sweep_cmd = app.add_subcommand("chaos-sweep", "chaoticity-defect decay in N");
  sweep_cmd->add_option("--model", sweep_args.model, "kac | circle | averaging | boltzmann3");
  sweep_cmd->add_option("--n", sweep_args.n_values, "strictly increasing N list");
  sweep_cmd->add_option("--replicas", sweep_args.replicas, "replicas per N");
  sweep_cmd->add_option("--t", sweep_args.horizon, "defect measurement time");
  sweep_cmd->add_option("--dictionary", sweep_args.dictionary, "standard | clipped-poly");
  sweep_cmd->add_option("--tau", sweep_args.tau, "circle noise concentration");
  sweep_cmd->add_option("--sigma", sweep_args.sigma, "averaging noise sigma");

  T1Args t1_args;
  config_default(cfg, "t1-check", "n", t1_args.n);
  config_default(cfg, "t1-check", "ell", t1_args.max_ell);
  config_default(cfg, "t1-check", "draws", t1_args.draws);
  auto* t1_cmd = app.add_subcommand("t1-check", "symmetrization bound enumeration");
  t1_cmd->add_option("--n", t1_args.n, "configuration size (<= 8)")->check(CLI::Range(std::size_t{2}, std::size_t{8}));
  t1_cmd->add_option("--ell", t1_args.max_ell, "max tensor degree (<= 3)")->check(CLI::Range(1, 3));
  t1_cmd->add_option("--draws", t1_args.draws, "random draws");

  SweepArgs gap_args;
  gap_args.n_values = {50, 100, 200};
  gap_args.replicas = 1000;
  config_default(cfg, "marginal-gap", "model", gap_args.model);
  config_default(cfg, "marginal-gap", "n", gap_args.n_values);
  config_default(cfg, "marginal-gap", "replicas", gap_args.replicas);
  config_default(cfg, "marginal-gap", "t", gap_args.horizon);
  auto* gap_cmd = app.add_subcommand("marginal-gap", "N-particle marginal vs mean-field W1");
  gap_cmd->add_option("--model", gap_args.model, "kac | averaging | boltzmann3");
  gap_cmd->add_option("--n", gap_args.n_values, "strictly increasing N list");
  gap_cmd->add_option("--replicas", gap_args.replicas, "replicas per N");
  gap_cmd->add_option("--t", gap_args.horizon, "time horizon");

  std::vector<const char*> argv;
  argv.push_back("pocsim");
  for (const auto& s : args) argv.push_back(s.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (kac_cmd->parsed()) return exec_kac(kac_args, seed, out);
    if (circle_cmd->parsed()) return exec_circle(circle_args, seed, out);
    if (avg_cmd->parsed()) return exec_averaging(avg_args, seed, out);
    if (b3_cmd->parsed()) return exec_boltzmann3(b3_args, seed, out);
    if (spc_cmd->parsed()) return exec_speciation(spc_args, seed, out);
    if (sweep_cmd->parsed()) return exec_chaos_sweep(sweep_args, seed, out);
    if (t1_cmd->parsed()) return exec_t1_check(t1_args, seed, out);
    if (gap_cmd->parsed()) return exec_marginal_gap(gap_args, seed, out);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "run failed: " << e.what() << "\n";
    return kExitAssertion;
  }
  std::cerr << "no subcommand\n";
  return kExitConfig;
}

int run(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args);
}

}  // namespace pocsim::runner
