#include "pocsim/averaging.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "pocsim/stats.hpp"

namespace pocsim::averaging {

NoiseLaw NoiseLaw::gaussian(double sigma) {
  if (!(sigma >= 0.0)) throw std::invalid_argument("NoiseLaw: sigma must be >= 0");
  return {Family::kGaussian, sigma};
}
NoiseLaw NoiseLaw::uniform(double half_width) {
  if (!(half_width > 0.0)) throw std::invalid_argument("NoiseLaw: width must be > 0");
  return {Family::kUniform, half_width};
}
NoiseLaw NoiseLaw::two_point(double atom) {
  if (!(atom >= 0.0)) throw std::invalid_argument("NoiseLaw: atom must be >= 0");
  return {Family::kTwoPoint, atom};
}

NoiseLaw NoiseLaw::from_strings(const std::string& family, double param) {
  if (family == "gaussian") return gaussian(param);
  if (family == "uniform") return uniform(param);
  if (family == "two-point") return two_point(param);
  throw std::invalid_argument("unsupported noise family: " + family);
}

double NoiseLaw::char_fun(double xi) const {
  switch (family) {
    case Family::kGaussian:
      return std::exp(-0.5 * param * param * xi * xi);
    case Family::kUniform: {
      const double s = param * xi;
      if (s == 0.0) return 1.0;
      return std::sin(s) / s;
    }
    case Family::kTwoPoint:
      return std::cos(param * xi);
  }
  throw std::logic_error("unreachable");
}

double NoiseLaw::log_abs_char_fun(double xi) const {
  switch (family) {
    case Family::kGaussian:
      return -0.5 * param * param * xi * xi;
    case Family::kUniform: {
      const double s = param * xi;
      const double s2 = s * s;
      if (s2 < 1e-6) return -s2 / 6.0 - s2 * s2 / 180.0;
      const double v = std::fabs(std::sin(s) / s);
      return v > 0.0 ? std::log(v) : -std::numeric_limits<double>::infinity();
    }
    case Family::kTwoPoint: {
      const double s = param * xi;
      const double s2 = s * s;
      if (s2 < 1e-6) return -0.5 * s2 - s2 * s2 / 12.0;
      const double v = std::fabs(std::cos(s));
      return v > 0.0 ? std::log(v) : -std::numeric_limits<double>::infinity();
    }
  }
  throw std::logic_error("unreachable");
}

double NoiseLaw::variance() const {
  switch (family) {
    case Family::kGaussian: return param * param;
    case Family::kUniform: return param * param / 3.0;
    case Family::kTwoPoint: return param * param;
  }
  throw std::logic_error("unreachable");
}

double NoiseLaw::cdf(double x) const {
  switch (family) {
    case Family::kGaussian:
      if (param == 0.0) return x < 0.0 ? 0.0 : 1.0;
      return normal_cdf(x / param);
    case Family::kUniform:
      return std::clamp((x + param) / (2.0 * param), 0.0, 1.0);
    case Family::kTwoPoint:
      if (x < -param) return 0.0;
      if (x < param) return 0.5;
      return 1.0;
  }
  throw std::logic_error("unreachable");
}

double NoiseLaw::sample(RngStream& rng) const {
  switch (family) {
    case Family::kGaussian: return param * rng.gaussian();
    case Family::kUniform: return rng.uniform(-param, param);
    case Family::kTwoPoint: return (rng.next_u64() & 1ULL) ? param : -param;
  }
  throw std::logic_error("unreachable");
}

std::string NoiseLaw::name() const {
  switch (family) {
    case Family::kGaussian: return "gaussian";
    case Family::kUniform: return "uniform";
    case Family::kTwoPoint: return "two-point";
  }
  throw std::logic_error("unreachable");
}

AveragingEnsemble::AveragingEnsemble(std::vector<double> x) : positions(std::move(x)) {
  if (positions.size() < 2)
    throw std::invalid_argument("AveragingEnsemble: N must be >= 2");
}

double AveragingEnsemble::mean_position() const { return mean(positions); }
double AveragingEnsemble::variance() const { return pocsim::variance(positions); }

Complex AveragingEnsemble::char_fun(double xi) const {
  Complex sum{0.0, 0.0};
  for (double x : positions) sum += std::exp(Complex{0.0, xi * x});
  return sum / static_cast<double>(positions.size());
}

std::pair<std::size_t, std::size_t> averaging_step(AveragingEnsemble& ensemble,
                                                   const NoiseLaw& g,
                                                   RngStream& rng) {
  const std::size_t n = ensemble.positions.size();
  const std::size_t j = rng.below(n);
  std::size_t k = rng.below(n - 1);
  if (k >= j) ++k;
  const double m = 0.5 * (ensemble.positions[j] + ensemble.positions[k]);
  ensemble.positions[j] = m + g.sample(rng);
  ensemble.positions[k] = m + g.sample(rng);
  ++ensemble.events;
  return {j, k};
}

void run_events(AveragingEnsemble& ensemble, const NoiseLaw& g,
                std::uint64_t n_events, RngStream& rng) {
  for (std::uint64_t e = 0; e < n_events; ++e) averaging_step(ensemble, g, rng);
}

Complex stationary_charfun(const NoiseLaw& g, double xi, double tol) {
  if (!(tol > 0.0)) throw std::invalid_argument("stationary_charfun: tol must be > 0");
  if (xi == 0.0) return Complex{1.0, 0.0};
  const double var = g.variance();
  // Tail of the exponent after level J is below var*xi^2 / 2^(J+1)
  // (|1 - g_hat(s)| <= var s^2 / 2 for mean-zero laws).
  int levels = 1;
  while (var * xi * xi / std::pow(2.0, levels + 1) >= 0.25 * tol) {
    ++levels;
    if (levels > 64)
      throw std::runtime_error("stationary_charfun: no convergence within 64 levels");
  }
  // Accumulate 2^j log|g_hat(xi/2^j)| rather than repeated squaring, which
  // would amplify one ulp of a level-j factor by 2^j. Only the j = 0
  // factor carries a sign (all higher exponents are even).
  double log_abs = 0.0;
  for (int j = 0; j <= levels; ++j) {
    const double term = g.log_abs_char_fun(xi / std::pow(2.0, j));
    if (std::isinf(term)) return Complex{0.0, 0.0};
    log_abs += std::pow(2.0, j) * term;
  }
  const double sign = g.char_fun(xi) < 0.0 ? -1.0 : 1.0;
  return Complex{sign * std::exp(log_abs), 0.0};
}

CharFunGrid::CharFunGrid(double xi_max, double step) : xi_max_(xi_max), h_(step) {
  if (!(xi_max > 0.0) || !(step > 0.0) || step > xi_max)
    throw std::invalid_argument("CharFunGrid: bad grid parameters");
  const auto half = static_cast<std::size_t>(std::round(xi_max / step));
  center_ = half;
  values_.assign(2 * half + 1, Complex{0.0, 0.0});
  values_[center_] = Complex{1.0, 0.0};
}

void CharFunGrid::set_nonnegative_half(std::size_t offset, Complex v) {
  if (offset > center_) throw std::invalid_argument("CharFunGrid: index out of range");
  if (offset == 0) {
    values_[center_] = Complex{v.real(), 0.0};
    return;
  }
  values_[center_ + offset] = v;
  values_[center_ - offset] = std::conj(v);
}

Complex CharFunGrid::value_at_half(std::size_t i) const {
  const std::size_t k = i - center_;  // node offset, xi = k h
  if (k % 2 == 0) return values_[center_ + k / 2];
  // Midpoint of nodes (k-1)/2 and (k+1)/2: classic 4-point cubic weights.
  const std::ptrdiff_t lo = static_cast<std::ptrdiff_t>((k - 1) / 2);
  auto at = [&](std::ptrdiff_t off) {
    // Mirror across 0 using Hermitian symmetry when off < 0.
    if (off >= 0) return values_[center_ + static_cast<std::size_t>(off)];
    return std::conj(values_[center_ + static_cast<std::size_t>(-off)]);
  };
  return (-at(lo - 1) + 9.0 * at(lo) + 9.0 * at(lo + 1) - at(lo + 2)) / 16.0;
}

double CharFunGrid::hermitian_violation() const {
  double worst = 0.0;
  for (std::size_t k = 1; k <= center_; ++k)
    worst = std::max(worst,
                     std::abs(values_[center_ - k] - std::conj(values_[center_ + k])));
  worst = std::max(worst, std::fabs(values_[center_].imag()));
  return worst;
}

double CharFunGrid::max_modulus() const {
  double worst = 0.0;
  for (const auto& v : values_) worst = std::max(worst, std::abs(v));
  return worst;
}

double CharFunGrid::interpolation_error_estimate() const {
  // Midpoint cubic interpolation error is bounded by (3/128) h^4 |f''''|;
  // the fourth difference approximates h^4 f''''.
  double worst = 0.0;
  for (std::size_t i = 2; i + 2 < values_.size(); ++i) {
    const Complex d4 = values_[i - 2] - 4.0 * values_[i - 1] + 6.0 * values_[i] -
                       4.0 * values_[i + 1] + values_[i + 2];
    worst = std::max(worst, std::abs(d4));
  }
  return 3.0 / 128.0 * worst;
}

double CharFunGrid::second_moment() const {
  const Complex up = values_[center_ + 1];
  return -(2.0 * up.real() - 2.0) / (h_ * h_);
}

double fixed_point_residual(const CharFunGrid& grid, const NoiseLaw& g) {
  double worst = 0.0;
  for (std::size_t i = grid.center(); i < grid.size(); ++i) {
    const Complex half = grid.value_at_half(i);
    const Complex rhs = g.char_fun(grid.xi(i)) * half * half;
    worst = std::max(worst, std::abs(rhs - grid.value(i)));
  }
  return worst;
}

namespace {

// d f_hat / dt over the nonnegative half.
std::vector<Complex> evolve_rhs(const CharFunGrid& grid, const NoiseLaw& g) {
  std::vector<Complex> out(grid.center() + 1);
  for (std::size_t k = 0; k <= grid.center(); ++k) {
    const std::size_t i = grid.center() + k;
    const Complex half = grid.value_at_half(i);
    out[k] = g.char_fun(grid.xi(i)) * half * half - grid.value(i);
  }
  return out;
}

CharFunGrid apply_delta(const CharFunGrid& base, const std::vector<Complex>& delta,
                        double scale) {
  CharFunGrid out = base;
  for (std::size_t k = 0; k <= base.center(); ++k)
    out.set_nonnegative_half(k, base.value(base.center() + k) + scale * delta[k]);
  return out;
}

}  // namespace

EvolveTrajectory meanfield_evolve(const CharFunGrid& initial, const NoiseLaw& g,
                                  const EvolveOptions& options) {
  if (!(options.dt > 0.0) || options.dt > 0.05)
    throw std::invalid_argument("meanfield_evolve: require 0 < dt <= 0.05");
  if (initial.interpolation_error_estimate() > 1e-6)
    throw std::invalid_argument("meanfield_evolve: grid too coarse");

  CharFunGrid grid = initial;
  EvolveTrajectory traj;
  traj.final_grid = grid;
  const auto record = [&](double t) {
    traj.times.push_back(t);
    traj.second_moments.push_back(grid.second_moment());
    traj.fixed_point_residuals.push_back(fixed_point_residual(grid, g));
  };

  double t = 0.0;
  record(t);
  double next_snapshot = options.snapshot_interval;
  const std::size_t n_steps =
      static_cast<std::size_t>(std::ceil(options.horizon / options.dt - 1e-9));
  for (std::size_t step = 0; step < n_steps; ++step) {
    const double h = std::min(options.dt, options.horizon - t);
    const auto k1 = evolve_rhs(grid, g);
    const auto k2 = evolve_rhs(apply_delta(grid, k1, 0.5 * h), g);
    const auto k3 = evolve_rhs(apply_delta(grid, k2, 0.5 * h), g);
    const auto k4 = evolve_rhs(apply_delta(grid, k3, h), g);
    for (std::size_t k = 0; k <= grid.center(); ++k) {
      const Complex incr = (k1[k] + 2.0 * k2[k] + 2.0 * k3[k] + k4[k]) / 6.0;
      grid.set_nonnegative_half(k, grid.value(grid.center() + k) + h * incr);
    }
    t += h;
    if (grid.hermitian_violation() > 1e-12)
      throw std::runtime_error("meanfield_evolve: symmetry violated");
    if (grid.max_modulus() > 1.0 + 1e-9)
      throw std::runtime_error("meanfield_evolve: |f_hat| exceeded 1");
    if (t >= next_snapshot - 1e-12 || step + 1 == n_steps) {
      record(t);
      next_snapshot += options.snapshot_interval;
    }
  }
  traj.final_grid = grid;
  return traj;
}

void meanfield_particles_step(std::vector<double>& xs, const NoiseLaw& g,
                              double dt, RngStream& rng) {
  if (!(dt > 0.0) || dt > 0.1)
    throw std::invalid_argument("meanfield_particles_step: require dt <= 0.1");
  const std::size_t m = xs.size();
  std::vector<double> next(xs);
  for (std::size_t i = 0; i < m; ++i) {
    if (rng.uniform01() >= dt) continue;
    const double w = xs[rng.below(m)];
    next[i] = 0.5 * (xs[i] + w) + g.sample(rng);
  }
  xs = std::move(next);
}

void meanfield_particles_exact(std::vector<double>& xs, const NoiseLaw& g,
                               double horizon, RngStream& rng) {
  const std::size_t m = xs.size();
  const double total_rate = static_cast<double>(m);
  double t = 0.0;
  for (;;) {
    const double wait = rng.exponential(total_rate);
    if (t + wait > horizon) break;
    t += wait;
    const std::size_t i = rng.below(m);
    const double w = xs[rng.below(m)];
    xs[i] = 0.5 * (xs[i] + w) + g.sample(rng);
  }
}

namespace {

// CDF of the Normal(0, 1/2) pair midpoint of two standard normal parents.
double midpoint_cdf(double m) { return normal_cdf(m, 0.0, 0.5); }

// P(pair-midpoint-shifted noise lands in [a, b)) for standard normal
// parents: integrate the Normal(0, 1/2) midpoint against the noise CDF.
// The atomic family is handled in closed form (its CDF jumps would spoil
// the quadrature); the other families have continuous integrands.
double replaced_bin_mass(const NoiseLaw& g, double a, double b) {
  if (g.family == NoiseLaw::Family::kTwoPoint) {
    const double t = g.param;
    return 0.5 * (midpoint_cdf(b - t) - midpoint_cdf(a - t)) +
           0.5 * (midpoint_cdf(b + t) - midpoint_cdf(a + t));
  }
  const double sigma_m = std::sqrt(0.5);
  const double lo = -10.0 * sigma_m, hi = 10.0 * sigma_m;
  const int n = 4000;
  const double h = (hi - lo) / n;
  double sum = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double m = lo + i * h;
    const double density =
        std::exp(-m * m / (2.0 * sigma_m * sigma_m)) / (sigma_m * std::sqrt(2.0 * M_PI));
    const double weight = (i == 0 || i == n) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
    sum += weight * density * (g.cdf(b - m) - g.cdf(a - m));
  }
  return sum * h / 3.0;
}

double replaced_bin_mass_2d(const NoiseLaw& g, double ax, double bx, double ay,
                            double by) {
  if (g.family == NoiseLaw::Family::kTwoPoint) {
    // Condition on the two atoms independently and intersect the midpoint
    // intervals they induce.
    const double t = g.param;
    double total = 0.0;
    for (double sx : {+t, -t}) {
      for (double sy : {+t, -t}) {
        const double lo = std::max(ax - sx, ay - sy);
        const double hi = std::min(bx - sx, by - sy);
        if (hi > lo) total += 0.25 * (midpoint_cdf(hi) - midpoint_cdf(lo));
      }
    }
    return total;
  }
  const double sigma_m = std::sqrt(0.5);
  const double lo = -10.0 * sigma_m, hi = 10.0 * sigma_m;
  const int n = 4000;
  const double h = (hi - lo) / n;
  double sum = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double m = lo + i * h;
    const double density =
        std::exp(-m * m / (2.0 * sigma_m * sigma_m)) / (sigma_m * std::sqrt(2.0 * M_PI));
    const double weight = (i == 0 || i == n) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
    sum += weight * density * (g.cdf(bx - m) - g.cdf(ax - m)) *
           (g.cdf(by - m) - g.cdf(ay - m));
  }
  return sum * h / 3.0;
}

double std_normal_mass(double a, double b) { return normal_cdf(b) - normal_cdf(a); }

// Pearson chi-squared with the usual pooling of low-expectation bins; the
// bin layout cannot anticipate how much mass the pair correlation drains
// from the off-diagonal cells, so cells under 5 expected counts merge into
// one pooled cell. Throws when too few informative cells survive.
double chi2_pooled(const std::vector<std::uint64_t>& observed,
                   const std::vector<double>& expected) {
  std::vector<std::uint64_t> obs;
  std::vector<double> exp_counts;
  std::uint64_t pooled_obs = 0;
  double pooled_exp = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    if (expected[i] >= 5.0) {
      obs.push_back(observed[i]);
      exp_counts.push_back(expected[i]);
    } else {
      pooled_obs += observed[i];
      pooled_exp += expected[i];
    }
  }
  if (obs.size() < 6)
    throw std::runtime_error("marginal_recursion_check: bin resolution insufficient");
  if (pooled_exp >= 5.0) {
    obs.push_back(pooled_obs);
    exp_counts.push_back(pooled_exp);
  } else if (pooled_exp > 0.0) {
    // Fold the remainder into the smallest regular cell.
    std::size_t smallest = 0;
    for (std::size_t i = 1; i < exp_counts.size(); ++i)
      if (exp_counts[i] < exp_counts[smallest]) smallest = i;
    obs[smallest] += pooled_obs;
    exp_counts[smallest] += pooled_exp;
  }
  return chi2_pvalue(obs, exp_counts);
}

}  // namespace

RecursionCheckReport marginal_recursion_check(std::size_t n_particles,
                                              std::size_t replicas,
                                              const NoiseLaw& g,
                                              std::uint64_t seed) {
  if (n_particles < 2 || n_particles > 8)
    throw std::invalid_argument("marginal_recursion_check: N must be in [2, 8]");
  if (replicas < 1000)
    throw std::invalid_argument("marginal_recursion_check: too few replicas");
  const double nd = static_cast<double>(n_particles);

  // Interior bins over +-span; the edge bins are unbounded so every bin
  // keeps a healthy expected count.
  const double span = 3.2;
  const int n_bins = 16;
  std::vector<double> edges(n_bins + 1);
  for (int i = 0; i <= n_bins; ++i)
    edges[i] = -span + 2.0 * span * static_cast<double>(i) / n_bins;
  auto bin_of = [&](double x) {
    if (x < edges.front()) return 0;
    if (x >= edges.back()) return n_bins - 1;
    int b = static_cast<int>((x - edges.front()) / (2.0 * span / n_bins));
    return std::clamp(b, 0, n_bins - 1);
  };
  auto edge_lo = [&](int b) { return b == 0 ? -1e9 : edges[b]; };
  auto edge_hi = [&](int b) { return b == n_bins - 1 ? 1e9 : edges[b + 1]; };

  // Simulate one replacement per replica; histogram x1 and (x1, x2).
  std::vector<std::uint64_t> hist1(n_bins, 0);
  const int coarse = 6;  // 2-D histogram uses coarser bins
  std::vector<std::uint64_t> hist2(coarse * coarse, 0);
  std::vector<double> coarse_edges(coarse + 1);
  for (int i = 0; i <= coarse; ++i)
    coarse_edges[i] = -span + 2.0 * span * static_cast<double>(i) / coarse;
  auto coarse_bin = [&](double x) {
    if (x < coarse_edges.front()) return 0;
    if (x >= coarse_edges.back()) return coarse - 1;
    int b = static_cast<int>((x - coarse_edges.front()) / (2.0 * span / coarse));
    return std::clamp(b, 0, coarse - 1);
  };
  auto coarse_lo = [&](int b) { return b == 0 ? -1e9 : coarse_edges[b]; };
  auto coarse_hi = [&](int b) { return b == coarse - 1 ? 1e9 : coarse_edges[b + 1]; };

  for (std::size_t r = 0; r < replicas; ++r) {
    RngStream rng(seed, r);
    std::vector<double> x(n_particles);
    for (auto& xi : x) xi = rng.gaussian();
    AveragingEnsemble ens(x);
    averaging_step(ens, g, rng);
    ++hist1[static_cast<std::size_t>(bin_of(ens.positions[0]))];
    ++hist2[static_cast<std::size_t>(coarse_bin(ens.positions[0]) * coarse +
                                     coarse_bin(ens.positions[1]))];
  }

  // Expected masses from the explicit recursion formulas.
  const double w1_keep = (1.0 - 1.0 / nd) * (1.0 - 1.0 / (nd - 1.0));
  const double w1_repl = 2.0 / nd;
  std::vector<double> expected1(n_bins);
  for (int b = 0; b < n_bins; ++b) {
    expected1[b] = static_cast<double>(replicas) *
                   (w1_keep * std_normal_mass(edge_lo(b), edge_hi(b)) +
                    w1_repl * replaced_bin_mass(g, edge_lo(b), edge_hi(b)));
  }

  const double w2_keep = (1.0 - 2.0 / nd) * (1.0 - 2.0 / (nd - 1.0));
  const double w2_one = 2.0 * (nd - 2.0) / (nd * (nd - 1.0));
  const double w2_both = 2.0 / (nd * (nd - 1.0));
  std::vector<double> expected2(coarse * coarse);
  for (int bx = 0; bx < coarse; ++bx) {
    const double axm = coarse_lo(bx), bxm = coarse_hi(bx);
    const double keep_x = std_normal_mass(axm, bxm);
    const double repl_x = replaced_bin_mass(g, axm, bxm);
    for (int by = 0; by < coarse; ++by) {
      const double aym = coarse_lo(by), bym = coarse_hi(by);
      const double keep_y = std_normal_mass(aym, bym);
      const double repl_y = replaced_bin_mass(g, aym, bym);
      expected2[static_cast<std::size_t>(bx * coarse + by)] =
          static_cast<double>(replicas) *
          (w2_keep * keep_x * keep_y + w2_one * keep_x * repl_y +
           w2_one * repl_x * keep_y +
           w2_both * replaced_bin_mass_2d(g, axm, bxm, aym, bym));
    }
  }

  RecursionCheckReport report;
  report.n_particles = n_particles;
  report.replicas = replicas;
  report.p_value_marginal1 = chi2_pooled(hist1, expected1);
  report.p_value_marginal2 = chi2_pooled(hist2, expected2);
  return report;
}

}  // namespace pocsim::averaging
