// Small statistics toolbox: confidence intervals, ratio estimators, least
// squares, and a Kolmogorov-Smirnov uniformity test.
#pragma once

#include <cstdint>
#include <vector>

namespace forksim {

double mean(const std::vector<double>& xs);
double sample_variance(const std::vector<double>& xs);  // unbiased, n >= 2

// Two-sided standard normal quantile for a confidence level in (0, 1),
// e.g. 0.95 -> 1.959964.
double normal_quantile_two_sided(double level);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

// Wilson score interval for a binomial proportion.
Interval wilson_interval(std::int64_t successes, std::int64_t n, double level);

// Renewal-ratio estimate sum(scores)/sum(times) with a delta-method standard
// error.  Requires equal nonzero lengths; throws InsufficientData otherwise.
struct RatioEstimate {
  double value = 0.0;
  double stderr_ = 0.0;
  std::int64_t n = 0;
};
RatioEstimate ratio_estimate(const std::vector<double>& scores,
                             const std::vector<double>& times);

// Ordinary least squares fit y = intercept + slope * x.
struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  double slope_stderr = 0.0;
};
LinearFit ols_fit(const std::vector<double>& xs, const std::vector<double>& ys);

// One-sample KS test of `sample` against U(0,1); returns the asymptotic
// p-value.  The sample need not be sorted.
double ks_uniform_pvalue(std::vector<double> sample);

}  // namespace forksim
