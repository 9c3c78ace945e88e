#include "pocsim/speciation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "pocsim/stats.hpp"

namespace pocsim::speciation {

FoodDistribution::FoodDistribution(std::vector<Atom> a) : atoms(std::move(a)) {
  if (atoms.empty()) throw std::invalid_argument("FoodDistribution: no atoms");
  for (const auto& atom : atoms)
    if (!(atom.weight > 0.0))
      throw std::invalid_argument("FoodDistribution: weights must be positive");
}

double FoodDistribution::total_mass() const {
  double m = 0.0;
  for (const auto& atom : atoms) m += atom.weight;
  return m;
}

void SpeciationParams::validate() const {
  if (!(sigma_x > 0.0)) throw std::invalid_argument("sigma_x: width must be positive");
  if (!(sigma_mate > 0.0))
    throw std::invalid_argument("sigma_mate: width must be positive");
  if (mut_x < 0.0 || mut_y < 0.0 || mut_y_star < 0.0)
    throw std::invalid_argument("mutation std-devs must be nonnegative");
  if (d_y < 1) throw std::invalid_argument("d_y must be >= 1");
}

std::vector<double> fitness_shares(const Population& pop,
                                   const FoodDistribution& food, double sigma_x) {
  const std::size_t n = pop.size();
  if (n == 0) throw std::invalid_argument("fitness_shares: empty population");
  const double inv2s2 = 1.0 / (2.0 * sigma_x * sigma_x);
  const double mass = food.total_mass();
  std::vector<double> shares(n, 0.0);
  std::vector<double> kernel(n);
  for (const auto& atom : food.atoms) {
    double denom = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double d = pop.individuals[j].x - atom.x;
      kernel[j] = std::exp(-d * d * inv2s2);
      denom += kernel[j];
    }
    const double atom_mass = atom.weight / mass;
    for (std::size_t j = 0; j < n; ++j) shares[j] += atom_mass * kernel[j] / denom;
  }
  return shares;
}

namespace {

double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

}  // namespace

std::size_t choose_partner(std::size_t k, const Population& pop, double sigma_mate,
                           RngStream& rng) {
  const std::size_t n = pop.size();
  if (n < 2) throw std::invalid_argument("choose_partner: no partner available");
  if (std::isinf(sigma_mate)) {
    std::size_t j = rng.below(n - 1);
    if (j >= k) ++j;
    return j;
  }
  const double inv2s2 = 1.0 / (2.0 * sigma_mate * sigma_mate);
  const auto& pref = pop.individuals[k].y_star;
  std::vector<double> weights(n, 0.0);
  double max_log = -std::numeric_limits<double>::infinity();
  std::vector<double> logw(n);
  for (std::size_t j = 0; j < n; ++j) {
    if (j == k) continue;
    logw[j] = -sq_dist(pref, pop.individuals[j].y) * inv2s2;
    max_log = std::max(max_log, logw[j]);
  }
  double total = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    if (j == k) continue;
    weights[j] = std::exp(logw[j] - max_log);
    total += weights[j];
  }
  const double target = rng.uniform01() * total;
  double acc = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    acc += weights[j];
    if (acc > target) return j;
  }
  return k == n - 1 ? n - 2 : n - 1;  // rounding fallback
}

std::vector<Individual> reproduce(std::size_t k, std::size_t j,
                                  const std::vector<double>& shares,
                                  double food_mass, const Population& pop,
                                  const SpeciationParams& params, RngStream& rng) {
  const double kappa = 0.5 * (shares[k] + shares[j]) * food_mass;
  const std::uint64_t count = rng.poisson(kappa);
  const Individual& a = pop.individuals[k];
  const Individual& b = pop.individuals[j];
  std::vector<Individual> children;
  children.reserve(count);
  for (std::uint64_t c = 0; c < count; ++c) {
    Individual child;
    child.x = 0.5 * (a.x + b.x) + params.mut_x * rng.gaussian();
    child.y.resize(params.d_y);
    child.y_star.resize(params.d_y);
    for (std::size_t d = 0; d < params.d_y; ++d)
      child.y[d] = 0.5 * (a.y[d] + b.y[d]) + params.mut_y * rng.gaussian();
    for (std::size_t d = 0; d < params.d_y; ++d)
      child.y_star[d] =
          0.5 * (a.y_star[d] + b.y_star[d]) + params.mut_y_star * rng.gaussian();
    children.push_back(std::move(child));
  }
  return children;
}

GenerationResult step_generation(const Population& pop, const FoodDistribution& food,
                                 const SpeciationParams& params, RngStream& rng) {
  if (pop.size() < 2)
    throw std::invalid_argument("step_generation: N must be >= 2");
  params.validate();
  GenerationResult result;
  result.shares = fitness_shares(pop, food, params.sigma_x);
  double share_sum = 0.0;
  for (double c : result.shares) share_sum += c;
  if (std::fabs(share_sum - 1.0) > 1e-12)
    throw std::runtime_error("step_generation: shares do not sum to 1");
  const double mass = food.total_mass();
  // Partner and offspring draws consume the stream in individual-index
  // order, which keeps lineages replayable.
  for (std::size_t k = 0; k < pop.size(); ++k) {
    const std::size_t partner = choose_partner(k, pop, params.sigma_mate, rng);
    auto children = reproduce(k, partner, result.shares, mass, pop, params, rng);
    for (auto& child : children) {
      result.next.individuals.push_back(std::move(child));
      if (result.next.individuals.size() > params.population_cap)
        throw std::runtime_error("step_generation: population cap exceeded");
    }
  }
  result.next.generation = pop.generation + 1;
  result.extinct = result.next.individuals.empty();
  return result;
}

double food_entropy(const std::vector<double>& shares) {
  const double n = static_cast<double>(shares.size());
  double w = 0.0;
  for (double c : shares) {
    if (c < 0.0) throw std::invalid_argument("food_entropy: negative share");
    if (c > 0.0) w += c * std::log(n * c);
  }
  // KL nonnegativity: anything beyond rounding noise is a share bug.
  if (w < -1e-9) throw std::runtime_error("food_entropy: negative entropy");
  return std::max(w, 0.0);
}

ModeReport detect_modes(const std::vector<double>& values, double bandwidth) {
  if (values.size() < 1) throw std::invalid_argument("detect_modes: empty input");
  if (!(bandwidth > 0.0)) throw std::invalid_argument("detect_modes: bandwidth must be > 0");
  const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
  if (*mx - *mn < 1e-12) return {1, true, bandwidth};

  const auto count_at = [&](double bw) {
    const int grid_n = 512;
    const double lo = *mn - 3.0 * bw;
    const double hi = *mx + 3.0 * bw;
    const double h = (hi - lo) / (grid_n - 1);
    std::vector<double> kde(grid_n, 0.0);
    for (double v : values) {
      // Gaussian kernel truncated at 5 bandwidths.
      const int first = std::max(0, static_cast<int>((v - 5.0 * bw - lo) / h));
      const int last = std::min(grid_n - 1, static_cast<int>((v + 5.0 * bw - lo) / h) + 1);
      for (int i = first; i <= last; ++i) {
        const double z = (lo + i * h - v) / bw;
        kde[i] += std::exp(-0.5 * z * z);
      }
    }
    const double peak = *std::max_element(kde.begin(), kde.end());
    const double floor_level = 0.05 * peak;
    int modes = 0;
    for (int i = 1; i + 1 < grid_n; ++i)
      if (kde[i] > kde[i - 1] && kde[i] > kde[i + 1] && kde[i] > floor_level) ++modes;
    if (kde[0] > kde[1] && kde[0] > floor_level) ++modes;
    if (kde[grid_n - 1] > kde[grid_n - 2] && kde[grid_n - 1] > floor_level) ++modes;
    return modes;
  };

  ModeReport report;
  report.bandwidth = bandwidth;
  report.count = count_at(bandwidth);
  report.stable = count_at(2.0 * bandwidth) == report.count;
  return report;
}

LineageResult run_lineage(Population initial, const FoodDistribution& food,
                          const SpeciationParams& params, std::uint64_t generations,
                          double mode_bandwidth, RngStream& rng) {
  LineageResult result;
  Population pop = std::move(initial);
  for (std::uint64_t g = 0; g < generations; ++g) {
    GenerationResult step = step_generation(pop, food, params, rng);

    GenerationStats stats;
    stats.generation = pop.generation;
    stats.population = pop.size();
    stats.entropy = food_entropy(step.shares);
    std::vector<double> xs(pop.size()), ys(pop.size());
    for (std::size_t i = 0; i < pop.size(); ++i) {
      xs[i] = pop.individuals[i].x;
      ys[i] = pop.individuals[i].y[0];
    }
    stats.modes_x = detect_modes(xs, mode_bandwidth).count;
    stats.modes_y = detect_modes(ys, mode_bandwidth).count;
    stats.mean_x = mean(xs);
    stats.var_x = xs.size() > 1 ? variance(xs) : 0.0;
    result.history.push_back(stats);

    if (step.extinct) {
      result.extinct = true;
      result.final_population = std::move(step.next);
      return result;
    }
    pop = std::move(step.next);
    if (pop.size() < 2) {
      result.extinct = true;
      break;
    }
  }
  result.final_population = std::move(pop);
  return result;
}

Population founders(std::size_t n, double x0, const SpeciationParams& params) {
  Population pop;
  pop.individuals.resize(n);
  for (auto& ind : pop.individuals) {
    ind.x = x0;
    ind.y.assign(params.d_y, 0.0);
    ind.y_star.assign(params.d_y, 0.0);
  }
  return pop;
}

}  // namespace pocsim::speciation
