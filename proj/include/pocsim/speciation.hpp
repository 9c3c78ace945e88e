#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pocsim/rng.hpp"

namespace pocsim::speciation {

/// One agent: fitness trait x, appearance trait y and partner-preference
/// trait y_star (both of dimension d_y).
struct Individual {
  double x = 0.0;
  std::vector<double> y;
  std::vector<double> y_star;
};

/// Finite atomic food measure: atoms (location, weight > 0).
struct FoodDistribution {
  struct Atom {
    double x;
    double weight;
  };
  std::vector<Atom> atoms;

  explicit FoodDistribution(std::vector<Atom> a);
  double total_mass() const;  // ||f||
};

struct SpeciationParams {
  double sigma_x = 0.3;       // competition kernel width
  double sigma_mate = 0.2;    // mating choosiness; infinity = random mating
  double mut_x = 0.05;        // mutation std-dev per trait block
  double mut_y = 0.05;
  double mut_y_star = 0.05;
  std::size_t d_y = 1;
  std::size_t population_cap = 1000000;

  void validate() const;  // throws on nonpositive widths
};

struct Population {
  std::vector<Individual> individuals;
  std::uint64_t generation = 0;

  std::size_t size() const { return individuals.size(); }
};

/// Resource shares: individual k receives
///   c_k = sum_atoms (w/||f||) K(x_k, a) / sum_j K(x_j, a),
/// K(x, a) = exp(-(x-a)^2 / (2 sigma_x^2)). The shares sum to one.
std::vector<double> fitness_shares(const Population& pop,
                                   const FoodDistribution& food, double sigma_x);

/// Partner index for individual k: P(j) ~ exp(-|y*_k - y_j|^2 / (2 sigma^2))
/// over j != k. sigma_mate = infinity gives the uniform law. Requires N >= 2.
std::size_t choose_partner(std::size_t k, const Population& pop, double sigma_mate,
                           RngStream& rng);

/// Offspring of the ordered couple (k, j): count ~ Poisson(kappa) with
/// kappa = (c_k + c_j)/2 * ||f||; each child sits at the parental midpoint
/// plus independent Gaussian mutations per trait block.
std::vector<Individual> reproduce(std::size_t k, std::size_t j,
                                  const std::vector<double>& shares,
                                  double food_mass, const Population& pop,
                                  const SpeciationParams& params, RngStream& rng);

/// One synchronous generation: shares, partner choice and reproduction for
/// every individual in index order; only the offspring survive. An empty
/// next generation is a normal (extinction) outcome; exceeding the
/// population cap throws.
struct GenerationResult {
  Population next;
  std::vector<double> shares;  // shares of the parent generation
  bool extinct = false;
};
GenerationResult step_generation(const Population& pop, const FoodDistribution& food,
                                 const SpeciationParams& params, RngStream& rng);

/// Resource-sharing entropy W_c = sum c_k log(N c_k) >= 0, zero iff the
/// shares are uniform (KL divergence from the uniform shares).
double food_entropy(const std::vector<double>& shares);

/// Strict local maxima of a Gaussian KDE on a fixed grid, counted above 5%
/// of the global maximum. `stable` is false when doubling the bandwidth
/// changes the count (bandwidth-sensitivity diagnostic).
struct ModeReport {
  int count = 0;
  bool stable = true;
  double bandwidth = 0.0;
};
ModeReport detect_modes(const std::vector<double>& values, double bandwidth);

/// Per-generation summary row for CSV output.
struct GenerationStats {
  std::uint64_t generation;
  std::size_t population;
  double entropy;
  int modes_x;
  int modes_y;
  double mean_x;
  double var_x;
};

struct LineageResult {
  std::vector<GenerationStats> history;
  bool extinct = false;
  Population final_population;
};

/// Runs a lineage for `generations` steps (stops early on extinction).
/// Mode counts use the given KDE bandwidth; the y-mode count uses the first
/// appearance coordinate.
LineageResult run_lineage(Population initial, const FoodDistribution& food,
                          const SpeciationParams& params, std::uint64_t generations,
                          double mode_bandwidth, RngStream& rng);

/// Monomorphic founder population.
Population founders(std::size_t n, double x0, const SpeciationParams& params);

}  // namespace pocsim::speciation
