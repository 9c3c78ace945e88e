#pragma once

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "pocsim/rng.hpp"

namespace pocsim::averaging {

using Complex = std::complex<double>;

/// Mean-zero, finite-variance displacement law for the replacement step,
/// with closed-form characteristic function:
///   kGaussian : Normal(0, sigma^2),          g_hat = exp(-sigma^2 xi^2 / 2)
///   kUniform  : Uniform[-a, a],              g_hat = sin(a xi)/(a xi)
///   kTwoPoint : (delta_{+a} + delta_{-a})/2, g_hat = cos(a xi)
struct NoiseLaw {
  enum class Family { kGaussian, kUniform, kTwoPoint };
  Family family = Family::kGaussian;
  double param = 1.0;  // sigma, a, or the atom site

  static NoiseLaw gaussian(double sigma);
  static NoiseLaw uniform(double half_width);
  static NoiseLaw two_point(double atom);
  static NoiseLaw from_strings(const std::string& family, double param);

  double char_fun(double xi) const;
  /// log |g_hat(xi)|, with series branches near xi = 0 so that dyadic
  /// products can be accumulated without ulp blow-up. -inf at zeros.
  double log_abs_char_fun(double xi) const;
  double variance() const;
  double cdf(double x) const;
  double sample(RngStream& rng) const;
  std::string name() const;
};

/// N scalar positions plus an event counter. One unit of mean-field time
/// corresponds to N/2 replacements (each replacement touches 2 particles,
/// so every particle is refreshed about once per unit time).
struct AveragingEnsemble {
  std::vector<double> positions;
  std::uint64_t events = 0;

  explicit AveragingEnsemble(std::vector<double> x);

  double time() const {
    return 2.0 * static_cast<double>(events) / static_cast<double>(positions.size());
  }
  double mean_position() const;
  double variance() const;

  /// Empirical characteristic function (1/N) sum e^{i xi x_j}.
  Complex char_fun(double xi) const;
};

/// One replacement: a uniform unordered pair (j, k) is replaced by
/// (m + X1, m + X2) with m the pair midpoint and X1, X2 i.i.d. ~ g.
/// Returns the chosen pair.
std::pair<std::size_t, std::size_t> averaging_step(AveragingEnsemble& ensemble,
                                                   const NoiseLaw& g,
                                                   RngStream& rng);

void run_events(AveragingEnsemble& ensemble, const NoiseLaw& g,
                std::uint64_t n_events, RngStream& rng);

/// Characteristic function of the stationary law as the dyadic product
///   f_hat(xi) = prod_{j>=0} g_hat(xi / 2^j)^(2^j),
/// truncated once the remaining tail factor provably deviates from 1 by
/// less than tol (second-moment bound). Throws if 64 levels do not suffice.
Complex stationary_charfun(const NoiseLaw& g, double xi, double tol = 1e-12);

/// Uniform symmetric grid of characteristic-function values on [-Xi, Xi]
/// with Hermitian symmetry f_hat(-xi) = conj(f_hat(xi)) and f_hat(0) = 1.
/// Half-grid reads f_hat(xi/2) use exact nodes for even indices and the
/// 4-point cubic midpoint rule for odd ones.
class CharFunGrid {
 public:
  CharFunGrid(double xi_max, double step);

  double xi_max() const { return xi_max_; }
  double step() const { return h_; }
  std::size_t center() const { return center_; }
  std::size_t size() const { return values_.size(); }
  double xi(std::size_t i) const {
    return (static_cast<double>(i) - static_cast<double>(center_)) * h_;
  }

  Complex value(std::size_t i) const { return values_[i]; }
  void set_nonnegative_half(std::size_t offset, Complex v);  // mirrors to -xi

  /// f_hat(xi_i / 2) for the node at index i >= center.
  Complex value_at_half(std::size_t i) const;

  /// Fill from a callable xi -> value over the nonnegative half.
  template <typename F>
  void fill(F&& f) {
    for (std::size_t k = 0; k <= center_; ++k)
      set_nonnegative_half(k, f(static_cast<double>(k) * h_));
  }

  double hermitian_violation() const;
  double max_modulus() const;
  /// Cubic-interpolation error estimate from fourth differences.
  double interpolation_error_estimate() const;

  /// Second moment -Re f''(0) by central differences.
  double second_moment() const;

 private:
  double xi_max_, h_;
  std::size_t center_;
  std::vector<Complex> values_;
};

/// Residual sup_i | g_hat(xi_i) f_hat(xi_i/2)^2 - f_hat(xi_i) |.
double fixed_point_residual(const CharFunGrid& grid, const NoiseLaw& g);

struct EvolveOptions {
  double horizon = 1.0;
  double dt = 0.02;  // <= 0.05
  double snapshot_interval = 0.1;
};

struct EvolveTrajectory {
  std::vector<double> times;
  std::vector<double> second_moments;
  std::vector<double> fixed_point_residuals;
  CharFunGrid final_grid{1.0, 0.5};
};

/// RK4 integration of  d f_hat / dt = g_hat(xi) f_hat(xi/2)^2 - f_hat(xi)
/// (the transform of the pair-replacement limit equation). f_hat(0) = 1 and
/// Hermitian symmetry are preserved; |f_hat| <= 1 is checked each step.
/// Throws "grid too coarse" when the interpolation error estimate of the
/// initial grid exceeds 1e-6.
EvolveTrajectory meanfield_evolve(const CharFunGrid& initial, const NoiseLaw& g,
                                  const EvolveOptions& options);

/// Sample-based mean-field solver on the same clock (each particle is
/// refreshed at rate 1 against an independently resampled partner).
void meanfield_particles_step(std::vector<double>& xs, const NoiseLaw& g,
                              double dt, RngStream& rng);

/// Event-driven variant (the dt -> 0 limit of the sweep): one-particle
/// refreshes at total rate M. Used as the reference limit solution.
void meanfield_particles_exact(std::vector<double>& xs, const NoiseLaw& g,
                               double horizon, RngStream& rng);

/// chi-squared comparison of one replacement step against the exact
/// 1- and 2-marginal recursion formulas, for product Normal(0,1) initial
/// data and small N (<= 8). Expected bin masses are evaluated by
/// conditioning on the pair midpoint and integrating numerically.
struct RecursionCheckReport {
  std::size_t n_particles = 0;
  std::size_t replicas = 0;
  double p_value_marginal1 = 0.0;
  double p_value_marginal2 = 0.0;
};
RecursionCheckReport marginal_recursion_check(std::size_t n_particles,
                                              std::size_t replicas,
                                              const NoiseLaw& g,
                                              std::uint64_t seed);

}  // namespace pocsim::averaging
