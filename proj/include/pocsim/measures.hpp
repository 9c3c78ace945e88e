#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "pocsim/rng.hpp"

namespace pocsim {

using Point = std::vector<double>;

/// Uniform-weight point measure (1/N) sum of delta_{x_j}. N >= 1.
struct EmpiricalMeasure {
  std::vector<Point> points;

  explicit EmpiricalMeasure(std::vector<Point> pts);
  static EmpiricalMeasure from_scalars(std::span<const double> xs);

  std::size_t size() const { return points.size(); }
  std::size_t dim() const { return points.front().size(); }
};

/// Exact 1-D Wasserstein-1 distance between two equal-size sample sets:
/// the monotone coupling of order statistics is optimal, so
/// W1 = (1/n) sum |a_(i) - b_(i)|. Inputs need not be pre-sorted.
/// Throws on empty input or size mismatch.
double w1_1d(std::span<const double> a, std::span<const double> b);

/// Exact 1-D Wasserstein-1 between uniform empirical measures of possibly
/// different sizes: the area between the two empirical CDFs. Coincides
/// with w1_1d for equal counts; lets a large reference set be used at full
/// precision instead of resampling down.
double w1_1d_unequal(std::span<const double> a, std::span<const double> b);

/// Exact Wasserstein-1 distance between equal-size uniform empirical
/// measures in R^d via minimum-cost perfect matching on the Euclidean
/// cost matrix (shortest augmenting path, O(n^3)). The exact regime is
/// capped at n = 512; larger inputs must be subsampled first.
double w1_matched(const EmpiricalMeasure& a, const EmpiricalMeasure& b);
inline constexpr std::size_t kW1ExactCap = 512;

/// Deterministic subsample of `points` down to `target` elements (uniform
/// without replacement, order of first occurrence kept); used to bring
/// large sets under the exact-matching cap with a recorded seed.
std::vector<Point> subsample(std::span<const Point> points, std::size_t target,
                             std::uint64_t seed);
std::vector<double> subsample(std::span<const double> xs, std::size_t target,
                              std::uint64_t seed);

/// Configuration-space Levy-Prokhorov distance:
///   inf over permutations sigma and eps > 0 such that
///   #{ i : d(x_i, y_sigma(i)) > eps } / N < eps.
/// Exact permutation search for N <= 10; greedy matching upper bound above.
/// The value never exceeds 1.
double lp_config_distance(
    std::span<const Point> x, std::span<const Point> y,
    const std::function<double(const Point&, const Point&)>& metric);

/// Euclidean metric convenience overload.
double lp_config_distance(std::span<const Point> x, std::span<const Point> y);

/// Bounded test function with recorded sup-norm and Lipschitz constant.
struct Observable {
  std::string name;
  std::function<double(double)> f;  // applied to one coordinate
  double sup_norm = 1.0;
  double lipschitz = 1.0;
};

/// Named dictionary of bounded Lipschitz observables, applied coordinatewise
/// to particle states.
struct ObservableDictionary {
  std::string id;
  std::vector<Observable> items;

  /// {cos x, sin x, cos 2x, tanh x}: bounded, Lipschitz <= 2.
  static ObservableDictionary standard();
  /// Clipped polynomials {clip(x), clip(x^2)} with clip at +-3.
  static ObservableDictionary clipped_poly();
  static ObservableDictionary by_id(const std::string& id);
};

/// Factorization defect of an ensemble law estimated across replicas:
///   D = max over dictionary pairs (phi, psi) of
///       | E[phi(v_1) psi(v_2)] - E[phi(v_1)] E[psi(v_2)] |
/// where the pair term averages ordered particle pairs (i != j) within each
/// replica and the product term uses a cross-replica baseline (products of
/// means from distinct replicas), which removes the O(1/replicas) bias of
/// the naive plug-in product.
///
/// `replicas[r]` is one N-particle configuration, each particle a Point;
/// observables are applied to coordinate `coord` of each particle.
struct DefectEstimate {
  double value = 0.0;
  double stderr_value = 0.0;  // delete-one-replica jackknife
  std::string argmax_pair;
};
DefectEstimate chaoticity_defect(const std::vector<std::vector<Point>>& replicas,
                                 const ObservableDictionary& dict,
                                 std::size_t coord = 0);

/// Scalar-state convenience wrapper (each particle one real).
DefectEstimate chaoticity_defect(const std::vector<std::vector<double>>& replicas,
                                 const ObservableDictionary& dict);

/// One sample in R^k per replica: the first k coordinates of each replica's
/// configuration (any fixed choice is unbiased by permutation symmetry).
std::vector<std::vector<double>> marginal_samples(
    const std::vector<std::vector<double>>& replicas, std::size_t k);

/// Kolmogorov-Smirnov sup distance between the empirical CDF of samples and
/// a reference CDF (monotone, values in [0,1]).
double ks_distance(std::span<const double> samples,
                   const std::function<double(double)>& reference_cdf);

/// Per-N chaoticity measurement plus a fitted log-log decay rate.
struct ChaosReportRow {
  std::size_t n_particles = 0;
  std::size_t replicas = 0;
  double defect = 0.0;
  double stderr_value = 0.0;
};
struct ChaosReport {
  std::string model_id;
  std::vector<ChaosReportRow> rows;
  // Least-squares fit of log(defect) vs log(N) over rows whose defect
  // exceeds 5x its standard error; slope_half_width is 2x the slope SE.
  bool fit_valid = false;
  double slope = 0.0;
  double intercept = 0.0;
  double residual_rms = 0.0;
  double slope_half_width = 0.0;
  std::string warning;

  std::string to_csv() const;    // columns: model,N,replicas,defect,stderr
  std::string to_jsonl() const;  // one JSON record per N
};

}  // namespace pocsim
