#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace pocsim {

/// Neumaier-compensated running sum; used where long event streams must
/// accumulate without drift (energy audits and the like).
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// Order-fixed pairwise (tree) reduction. Deterministic for a fixed input
/// order regardless of how the inputs were produced.
double pairwise_sum(std::span<const double> xs);

double mean(std::span<const double> xs);

/// Unbiased sample variance (n-1 denominator).
double variance(std::span<const double> xs);

/// Standard error of the mean.
double standard_error(std::span<const double> xs);

/// Standard normal cumulative distribution function.
double normal_cdf(double x);

/// CDF of the Normal(mu, sigma^2) law.
double normal_cdf(double x, double mu, double sigma2);

/// Regularized lower incomplete gamma P(a, x).
double gamma_p(double a, double x);

/// Upper tail of the chi-squared distribution with k degrees of freedom.
double chi2_sf(double x, int dof);

/// Pearson chi-squared p-value for observed counts against expected counts.
/// Expected counts must be positive; dof defaults to bins - 1.
double chi2_pvalue(std::span<const std::uint64_t> observed,
                   std::span<const double> expected, int dof_delta = 1);

/// Two-sample chi-squared homogeneity test for histograms with equal
/// totals: sum (a_i - b_i)^2 / (a_i + b_i), dof = nonempty bins - 1.
double chi2_two_sample_pvalue(std::span<const std::uint64_t> a,
                              std::span<const std::uint64_t> b);

/// Kolmogorov-Smirnov sup distance between the empirical CDF of `samples`
/// and a reference CDF. Samples are copied and sorted internally.
double ks_statistic(std::span<const double> samples,
                    const std::function<double(double)>& cdf);

/// Asymptotic Kolmogorov distribution tail: P(sqrt(n) D_n > x).
double kolmogorov_sf(double x);

/// Anderson-Darling A^2 statistic against a fully specified CDF.
double anderson_darling(std::span<const double> samples,
                        const std::function<double(double)>& cdf);

/// Ordinary least squares fit y = slope * x + intercept.
struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  double residual_rms = 0.0;
};
LineFit fit_line(std::span<const double> x, std::span<const double> y);

}  // namespace pocsim
