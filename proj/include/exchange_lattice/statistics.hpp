#pragma once

// Sample statistics, regression, Kolmogorov-Smirnov and quadrature helpers
// shared by the measures and spectral modules.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>

namespace exchange_lattice {

struct MeanEstimate {
  double mean = 0.0;
  double std_error = 0.0;
};

inline MeanEstimate mean_with_error(std::span<const double> xs) {
  const double n = static_cast<double>(xs.size());
  if (xs.size() < 2) throw std::invalid_argument("mean_with_error: need >= 2 samples");
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / (n - 1.0) / n)};
}

/// Sample mean of x^k with its standard error.
inline MeanEstimate raw_moment(std::span<const double> xs, int k) {
  std::vector<double> powers(xs.size());
  std::transform(xs.begin(), xs.end(), powers.begin(), [k](double x) { return std::pow(x, k); });
  return mean_with_error(powers);
}

inline double sample_variance(std::span<const double> xs) {
  const double n = static_cast<double>(xs.size());
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return ss / (n - 1.0);
}

inline double correlation(std::span<const double> xs, std::span<const double> ys) {
  const double n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_std_error = 0.0;
};

/// Weighted least squares y = intercept + slope * x. With unit weights the
/// slope error comes from the residual scatter; with inverse-variance weights
/// pass `weights_are_inverse_variance` to use them directly.
inline LinearFit linear_fit(std::span<const double> x, std::span<const double> y,
                            std::span<const double> w = {},
                            bool weights_are_inverse_variance = false) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n || (!w.empty() && w.size() != n)) {
    throw std::invalid_argument("linear_fit: need >= 2 matching points");
  }
  auto weight = [&](std::size_t i) { return w.empty() ? 1.0 : w[i]; };
  double sw = 0.0, sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sw += weight(i);
    sx += weight(i) * x[i];
    sy += weight(i) * y[i];
  }
  const double mx = sx / sw, my = sy / sw;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += weight(i) * (x[i] - mx) * (x[i] - mx);
    sxy += weight(i) * (x[i] - mx) * (y[i] - my);
  }
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  if (weights_are_inverse_variance) {
    fit.slope_std_error = std::sqrt(1.0 / sxx);
  } else if (n > 2) {
    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = y[i] - fit.intercept - fit.slope * x[i];
      rss += weight(i) * r * r;
    }
    fit.slope_std_error = std::sqrt(rss / static_cast<double>(n - 2) / sxx);
  }
  return fit;
}

/// One-sample Kolmogorov-Smirnov statistic sup |F_n - F|.
inline double ks_statistic(std::vector<double> xs, const std::function<double(double)>& cdf) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = cdf(xs[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

/// Asymptotic 1% critical value of the one-sample KS statistic,
/// sqrt(-ln(0.005)/2) / sqrt(n) with the small-sample correction of Stephens.
inline double ks_critical_1pct(std::size_t n) {
  const double sn = std::sqrt(static_cast<double>(n));
  return std::sqrt(-0.5 * std::log(0.005)) / (sn + 0.12 + 0.11 / sn);
}

inline double beta_cdf(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  return boost::math::ibeta(a, b, x);
}

inline double gamma_cdf(double shape, double scale, double x) {
  if (x <= 0.0) return 0.0;
  return boost::math::gamma_p(shape, x / scale);
}

/// Tanh-sinh integral of f over [a, b], split at `breaks` (kinks of the
/// integrand) so each piece is smooth inside; square-root behaviour at the
/// piece ends is fine.
inline double integrate(const std::function<double(double)>& f, double a, double b,
                        std::vector<double> breaks = {}, double tol = 1e-10) {
  thread_local boost::math::quadrature::tanh_sinh<double> rule;
  breaks.push_back(a);
  breaks.push_back(b);
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    if (breaks[i] < a || breaks[i + 1] > b) continue;
    total += rule.integrate(f, breaks[i], breaks[i + 1], tol);
  }
  return total;
}

}  // namespace exchange_lattice
