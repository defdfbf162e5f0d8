#pragma once

// Reversible Gamma-product measures, their micro-canonical restrictions to a
// simplex, the associated sum/ratio laws, and reversibility / stationarity
// checks for concrete models.

#include <cmath>
#include <algorithm>
#include <cstdint>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "kernels.hpp"
#include "random.hpp"
#include "simulator.hpp"
#include "state_space.hpp"
#include "statistics.hpp"

namespace exchange_lattice {

/// Product of iid Gamma(dim_d/2, scale_eps) site laws. `scale_eps` is the
/// Gamma scale; the per-site mean is (dim_d/2) * scale_eps.
struct GammaProductSpec {
  double dim_d = 3.0;
  double scale_eps = 1.0;

  void validate() const {
    if (!(dim_d > 0.0) || !(scale_eps > 0.0)) {
      throw std::invalid_argument("GammaProductSpec: dim_d and scale_eps must be > 0");
    }
  }
};

/// A Gamma product conditioned on the simplex with mean energy `epsilon`
/// per site.
struct MicrocanonicalSpec {
  double dim_d = 3.0;
  double epsilon = 1.0;
  std::size_t n_sites = 2;

  void validate() const {
    if (!(dim_d > 0.0) || !(epsilon > 0.0) || n_sites < 2) {
      throw std::invalid_argument("MicrocanonicalSpec: need dim_d > 0, epsilon > 0, n_sites >= 2");
    }
  }
  double total() const { return epsilon * static_cast<double>(n_sites); }
};

inline EnergyState sample_gamma_product(const GammaProductSpec& spec, std::size_t n_sites,
                                        Rng& rng) {
  spec.validate();
  std::vector<double> x(n_sites);
  for (auto& e : x) e = sample_gamma(rng, 0.5 * spec.dim_d, spec.scale_eps);
  return EnergyState(std::move(x));
}

/// Draw from the conditioned law: a symmetric Dirichlet(dim_d/2) vector
/// scaled to total N * epsilon and rounded to the energy grid of that total,
/// so the energies add up to N * epsilon exactly.
inline EnergyState sample_microcanonical(const MicrocanonicalSpec& spec, Rng& rng) {
  spec.validate();
  std::vector<double> x(spec.n_sites);
  for (auto& e : x) e = sample_gamma(rng, 0.5 * spec.dim_d, 1.0);
  const double scale = spec.total() / exact_sum(x);
  for (auto& e : x) e *= scale;
  detail::snap_in_place(x, spec.total());
  return EnergyState(std::move(x));
}

/// Closed-form laws of the pair sum and pair ratio under a Gamma product,
/// and the ratio law p tilted by the ratio rate.
class RatioLaw {
 public:
  RatioLaw(double dim_d, double scale_eps, RatioRate lambda_r = UnitRatioRate{})
      : dim_d_(dim_d), scale_eps_(scale_eps), lambda_r_(lambda_r) {
    GammaProductSpec{dim_d, scale_eps}.validate();
    const double a = 0.5 * dim_d_;
    log_beta_norm_ = std::lgamma(2.0 * a) - 2.0 * std::lgamma(a);
    z_ = integrate([this](double b) { return nu_r(b) * ratio_rate(b); }, 0.0, 1.0, {0.5});
  }

  /// Gamma(dim_d, scale) density of the pair sum.
  double nu_s(double sigma) const {
    if (sigma <= 0.0) return 0.0;
    const double t = sigma / scale_eps_;
    return std::exp((dim_d_ - 1.0) * std::log(t) - t - std::lgamma(dim_d_)) / scale_eps_;
  }

  /// Beta(dim_d/2, dim_d/2) density of the pair ratio.
  double nu_r(double beta) const {
    if (beta <= 0.0 || beta >= 1.0) return dim_d_ == 2.0 ? 1.0 : (dim_d_ > 2.0 ? 0.0 : std::numeric_limits<double>::infinity());
    return std::exp(log_beta_norm_ + (0.5 * dim_d_ - 1.0) * std::log(beta * (1.0 - beta)));
  }

  double ratio_rate(double beta) const {
    return std::holds_alternative<UnitRatioRate>(lambda_r_) ? 1.0 : gg_lambda_r(beta);
  }

  /// Invariant law of the ratio chain: nu_r * Lambda_r / Z.
  double p(double beta) const { return nu_r(beta) * ratio_rate(beta) / z_; }
  double normalizer() const { return z_; }
  double dim_d() const { return dim_d_; }

 private:
  double dim_d_;
  double scale_eps_;
  RatioRate lambda_r_;
  double log_beta_norm_ = 0.0;
  double z_ = 1.0;
};

/// Largest asymmetry max |F(b,a) - F(a,b)| of the ratio flux
/// F(b,a) = [b(1-b)]^{d/2-1} Lambda_r(b) density(b,a) on a grid j/(n-1).
/// Zero (to rounding) means nu_r * Lambda_r is reversible for the kernel.
inline double detailed_balance_residual(const AlphaKernel& kernel, const RatioRate& lambda_r,
                                        std::size_t grid_size, double dim_d = 3.0) {
  if (!kernel.has_density()) {
    throw std::domain_error("detailed_balance_residual: kernel has no density");
  }
  if (grid_size < 2) throw std::invalid_argument("detailed_balance_residual: grid_size >= 2");
  const RateSpec ratio_only{ConstantSumRate{1.0}, lambda_r};
  const double exponent = 0.5 * dim_d - 1.0;
  auto flux = [&](double b, double a) {
    const double weight = exponent == 0.0 ? 1.0 : std::pow(b * (1.0 - b), exponent);
    return weight * ratio_only.ratio_part(b) * *kernel.density(b, a);
  };
  const double h = 1.0 / static_cast<double>(grid_size - 1);
  double worst = 0.0;
  for (std::size_t i = 0; i < grid_size; ++i) {
    const double b = static_cast<double>(i) * h;
    for (std::size_t j = i + 1; j < grid_size; ++j) {
      const double a = static_cast<double>(j) * h;
      worst = std::max(worst, std::abs(flux(b, a) - flux(a, b)));
    }
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Stationarity

/// One statistical comparison; serialized as {test, n, statistic, threshold, pass}.
struct TestResult {
  std::string test;
  std::size_t n = 0;
  double statistic = 0.0;
  double threshold = 0.0;
  bool pass = false;
};

inline void to_json(nlohmann::json& j, const TestResult& r) {
  j = nlohmann::json{{"test", r.test},
                     {"n", r.n},
                     {"statistic", r.statistic},
                     {"threshold", r.threshold},
                     {"pass", r.pass}};
}

struct StationarityReport {
  std::vector<TestResult> results;
  bool pass() const {
    return std::all_of(results.begin(), results.end(), [](const auto& r) { return r.pass; });
  }
};

namespace detail {

/// Raw moments E[B^k], k = 1..4, of Beta(a, b) scaled by `scale`.
inline std::vector<double> beta_raw_moments(double a, double b, double scale) {
  std::vector<double> m;
  double acc = 1.0;
  for (int k = 0; k < 4; ++k) {
    acc *= (a + k) / (a + b + k) * scale;
    m.push_back(acc);
  }
  return m;
}

inline void compare_with_beta(const std::string& label, const std::vector<double>& xs, double a,
                              double b, double scale, std::vector<TestResult>& out) {
  const auto expected = beta_raw_moments(a, b, scale);
  for (int k = 1; k <= 4; ++k) {
    const auto est = raw_moment(xs, k);
    const double z = std::abs(est.mean - expected[k - 1]) / est.std_error;
    out.push_back({label + "_moment" + std::to_string(k), xs.size(), z, 3.0, z <= 3.0});
  }
  const double d = ks_statistic(xs, [&](double v) { return beta_cdf(a, b, v / scale); });
  const double crit = ks_critical_1pct(xs.size());
  out.push_back({label + "_ks", xs.size(), d, crit, d <= crit});
}

}  // namespace detail

/// Starts replicas from the claimed micro-canonical law, runs the model to
/// `horizon` and compares the time-horizon laws of x_1 and of the bond-1
/// ratio with the claimed ones: first four moments within 3 standard
/// errors, KS statistic below the 1% critical value.
inline StationarityReport stationarity_test(const Model& model, const MicrocanonicalSpec& spec,
                                            double horizon, std::size_t n_replicas,
                                            std::uint64_t seed, std::size_t threads = 1) {
  spec.validate();
  std::vector<double> site(n_replicas), ratio(n_replicas);
  parallel_for(n_replicas, threads, [&](std::size_t r) {
    Rng rng = substream(seed, r);
    ExchangeProcess process(model, sample_microcanonical(spec, rng));
    process.advance_to(horizon, rng);
    const auto x = process.energies();
    site[r] = x[0];
    ratio[r] = detail::left_fraction(x[0], x[1]);
  });
  const double a = 0.5 * spec.dim_d;
  StationarityReport report;
  detail::compare_with_beta("x1", site, a, a * static_cast<double>(spec.n_sites - 1), spec.total(),
                            report.results);
  detail::compare_with_beta("ratio1", ratio, a, a, 1.0, report.results);
  return report;
}

}  // namespace exchange_lattice
