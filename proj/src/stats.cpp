#include "pocsim/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pocsim {

double pairwise_sum(std::span<const double> xs) {
  const std::size_t n = xs.size();
  if (n == 0) return 0.0;
  if (n <= 8) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

double mean(std::span<const double> xs) {
  if (xs.empty()) throw std::invalid_argument("mean: empty input");
  return pairwise_sum(xs) / static_cast<double>(xs.size());
}

double variance(std::span<const double> xs) {
  if (xs.size() < 2) throw std::invalid_argument("variance: need >= 2 samples");
  const double m = mean(xs);
  std::vector<double> sq(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) sq[i] = (xs[i] - m) * (xs[i] - m);
  return pairwise_sum(sq) / static_cast<double>(xs.size() - 1);
}

double standard_error(std::span<const double> xs) {
  return std::sqrt(variance(xs) / static_cast<double>(xs.size()));
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double normal_cdf(double x, double mu, double sigma2) {
  return normal_cdf((x - mu) / std::sqrt(sigma2));
}

namespace {

// Series expansion of P(a, x), valid for x < a + 1.
double gamma_p_series(double a, double x) {
  double term = 1.0 / a;
  double sum = term;
  for (int n = 1; n < 500; ++n) {
    term *= x / (a + n);
    sum += term;
    if (std::fabs(term) < std::fabs(sum) * 1e-16) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Continued fraction for Q(a, x), valid for x >= a + 1 (Lentz).
double gamma_q_cf(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 500; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < 1e-16) break;
  }
  return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

}  // namespace

double gamma_p(double a, double x) {
  if (!(a > 0.0) || x < 0.0) throw std::invalid_argument("gamma_p: bad arguments");
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) return gamma_p_series(a, x);
  return 1.0 - gamma_q_cf(a, x);
}

double chi2_sf(double x, int dof) {
  if (dof < 1) throw std::invalid_argument("chi2_sf: dof must be >= 1");
  if (x <= 0.0) return 1.0;
  return 1.0 - gamma_p(0.5 * dof, 0.5 * x);
}

double chi2_pvalue(std::span<const std::uint64_t> observed,
                   std::span<const double> expected, int dof_delta) {
  if (observed.size() != expected.size() || observed.empty())
    throw std::invalid_argument("chi2_pvalue: size mismatch");
  double stat = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    if (!(expected[i] > 0.0))
      throw std::invalid_argument("chi2_pvalue: expected counts must be positive");
    const double diff = static_cast<double>(observed[i]) - expected[i];
    stat += diff * diff / expected[i];
  }
  const int dof = static_cast<int>(observed.size()) - dof_delta;
  if (dof < 1) throw std::invalid_argument("chi2_pvalue: nonpositive dof");
  return chi2_sf(stat, dof);
}

double chi2_two_sample_pvalue(std::span<const std::uint64_t> a,
                              std::span<const std::uint64_t> b) {
  if (a.size() != b.size() || a.empty())
    throw std::invalid_argument("chi2_two_sample_pvalue: size mismatch");
  double stat = 0.0;
  int nonempty = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double total = static_cast<double>(a[i]) + static_cast<double>(b[i]);
    if (total == 0.0) continue;
    ++nonempty;
    const double diff = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    stat += diff * diff / total;
  }
  if (nonempty < 2) throw std::invalid_argument("chi2_two_sample_pvalue: degenerate");
  return chi2_sf(stat, nonempty - 1);
}

double ks_statistic(std::span<const double> samples,
                    const std::function<double(double)>& cdf) {
  if (samples.empty()) throw std::invalid_argument("ks_statistic: empty sample");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  double sup = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = cdf(sorted[i]);
    const double lo = static_cast<double>(i) / n;
    const double hi = static_cast<double>(i + 1) / n;
    sup = std::max(sup, std::max(std::fabs(f - lo), std::fabs(f - hi)));
  }
  return sup;
}

double kolmogorov_sf(double x) {
  if (x <= 0.0) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * x * x);
    sum += (k % 2 == 1 ? 2.0 : -2.0) * term;
    if (term < 1e-16) break;
  }
  return std::clamp(sum, 0.0, 1.0);
}

double anderson_darling(std::span<const double> samples,
                        const std::function<double(double)>& cdf) {
  if (samples.empty()) throw std::invalid_argument("anderson_darling: empty sample");
  std::vector<double> u(samples.size());
  std::transform(samples.begin(), samples.end(), u.begin(), cdf);
  std::sort(u.begin(), u.end());
  const std::size_t n = u.size();
  const double eps = 1e-12;
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double ui = std::clamp(u[i], eps, 1.0 - eps);
    const double uj = std::clamp(u[n - 1 - i], eps, 1.0 - eps);
    s += (2.0 * (i + 1) - 1.0) * (std::log(ui) + std::log1p(-uj));
  }
  return -static_cast<double>(n) - s / static_cast<double>(n);
}

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 3)
    throw std::invalid_argument("fit_line: need >= 3 points");
  const double n = static_cast<double>(x.size());
  const double mx = mean(x);
  const double my = mean(y);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("fit_line: degenerate abscissae");
  LineFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (fit.intercept + fit.slope * x[i]);
    ss_res += r * r;
  }
  fit.residual_rms = std::sqrt(ss_res / n);
  if (x.size() > 2)
    fit.slope_stderr = std::sqrt(ss_res / (n - 2.0) / sxx);
  return fit;
}

}  // namespace pocsim
