#include "forksim/stats.hpp"

#include <algorithm>
#include <cmath>

#include "forksim/errors.hpp"

namespace forksim {

double mean(const std::vector<double>& xs) {
  if (xs.empty()) throw InsufficientData("mean of an empty sample");
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

double sample_variance(const std::vector<double>& xs) {
  if (xs.size() < 2) throw InsufficientData("variance needs at least two observations");
  const double m = mean(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return s / static_cast<double>(xs.size() - 1);
}

namespace {

// Acklam's rational approximation to the standard normal quantile,
// refined with one Halley step; good to ~1e-15 over (0, 1).
double normal_quantile(double p) {
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;
  double x;
  if (p < plow) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - plow) {
    const double q = p - 0.5, r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  // One Halley refinement against the exact CDF.
  const double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
  const double u = e * 2.5066282746310002 * std::exp(x * x / 2.0);  // sqrt(2*pi)
  return x - u / (1.0 + x * u / 2.0);
}

}  // namespace

double normal_quantile_two_sided(double level) {
  if (!(level > 0.0 && level < 1.0))
    throw InvalidParameter("confidence level must lie in (0, 1)");
  return normal_quantile(0.5 + level / 2.0);
}

Interval wilson_interval(std::int64_t successes, std::int64_t n, double level) {
  if (n <= 0) throw InsufficientData("interval needs at least one trial");
  if (successes < 0 || successes > n)
    throw InvalidParameter("successes must lie in [0, n]");
  const double z = normal_quantile_two_sided(level);
  const double z2 = z * z;
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(successes) / nn;
  const double denom = 1.0 + z2 / nn;
  const double center = (p + z2 / (2.0 * nn)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

RatioEstimate ratio_estimate(const std::vector<double>& scores,
                             const std::vector<double>& times) {
  if (scores.size() != times.size())
    throw InvalidParameter("ratio estimate needs paired samples");
  if (scores.size() < 2) throw InsufficientData("ratio estimate needs at least two pairs");
  const std::int64_t n = static_cast<std::int64_t>(scores.size());
  const double nn = static_cast<double>(n);
  const double ms = mean(scores), mt = mean(times);
  if (!(mt > 0.0)) throw InsufficientData("ratio estimate needs positive mean duration");
  const double r = ms / mt;
  // Delta method: var(r) ~ E[(S - r T)^2] / (n * E[T]^2).
  double s2 = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double d = scores[i] - r * times[i];
    s2 += d * d;
  }
  s2 /= (nn - 1.0);
  return {r, std::sqrt(s2 / nn) / mt, n};
}

LinearFit ols_fit(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size()) throw InvalidParameter("least squares needs paired samples");
  const std::size_t n = xs.size();
  if (n < 3) throw InsufficientData("least squares needs at least three points");
  const double mx = mean(xs), my = mean(ys);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (!(sxx > 0.0)) throw InsufficientData("least squares needs varying abscissae");
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double sse = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = ys[i] - (fit.intercept + fit.slope * xs[i]);
    sse += e * e;
  }
  fit.r_squared = syy > 0.0 ? 1.0 - sse / syy : 1.0;
  fit.slope_stderr = std::sqrt(sse / (static_cast<double>(n) - 2.0) / sxx);
  return fit;
}

double ks_uniform_pvalue(std::vector<double> sample) {
  if (sample.empty()) throw InsufficientData("uniformity test on an empty sample");
  for (double x : sample)
    if (!(x >= 0.0 && x <= 1.0))
      throw InvalidParameter("uniformity test sample must lie in [0, 1]");
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double dmax = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double x = sample[i];
    dmax = std::max(dmax, (static_cast<double>(i) + 1.0) / n - x);
    dmax = std::max(dmax, x - static_cast<double>(i) / n);
  }
  // Asymptotic Kolmogorov distribution with the standard finite-n tweak.
  const double t = (std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n)) * dmax;
  double p = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = 2.0 * std::pow(-1.0, k - 1) * std::exp(-2.0 * k * k * t * t);
    p += term;
    if (std::abs(term) < 1e-12) break;
  }
  return std::min(1.0, std::max(0.0, p));
}

}  // namespace forksim
