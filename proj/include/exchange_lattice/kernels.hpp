#pragma once

// Splitting-fraction kernels P(beta, d alpha), the factorized exchange rate
// Lambda(x_i, x_{i+1}) = Lambda_s(sum) * Lambda_r(ratio), and the
// three-dimensional billiard-lattice (Gaspard-Gilbert) kernel and ratio rate.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "random.hpp"

namespace exchange_lattice {

// ---------------------------------------------------------------------------
// Gaspard-Gilbert closed forms

/// Transition density of the 3-D billiard kernel. At beta in {0,1} the
/// min-term takes its limiting value 1, so the density stays in (0, 3/2].
inline double gg_density(double beta, double alpha) {
  if (!(beta >= 0.0 && beta <= 1.0) || !(alpha >= 0.0 && alpha <= 1.0)) {
    throw std::invalid_argument("gg_density: arguments must lie in [0,1]");
  }
  const double beta_min = std::min(beta, 1.0 - beta);
  const double beta_max = 1.0 - beta_min;
  const double alpha_min = std::min(alpha, 1.0 - alpha);
  const double cap = beta_min > 0.0 ? std::min(1.0, std::sqrt(alpha_min / beta_min)) : 1.0;
  return 1.5 * cap / (0.5 + beta_max);
}

/// Ratio part of the billiard exchange rate; ranges over
/// [sqrt(pi)/3, sqrt(2 pi)/4] with the extremes at beta = 1/2 and beta in {0,1}.
inline double gg_lambda_r(double beta) {
  if (!(beta >= 0.0 && beta <= 1.0)) {
    throw std::invalid_argument("gg_lambda_r: beta must lie in [0,1]");
  }
  const double beta_max = std::max(beta, 1.0 - beta);
  return std::sqrt(2.0 * std::numbers::pi) / 6.0 * (0.5 + beta_max) / std::sqrt(beta_max);
}

inline constexpr double kGgDensityEnvelope = 1.5;

/// Density of the Beta(3/2,3/2) law, (8/pi) sqrt(a(1-a)); the reference
/// measure for the billiard minorization.
inline double beta32_density(double alpha) {
  return 8.0 / std::numbers::pi * std::sqrt(alpha * (1.0 - alpha));
}

// ---------------------------------------------------------------------------
// Kernels

struct UniformKernel {};

/// Beta(d/2, d/2) splitting law.
struct SymmetricBetaKernel {
  double d = 3.0;
};

/// Deterministic even split; the atomic kernel of the degenerate model.
struct PointMassHalfKernel {};

struct GaspardGilbertKernel {};

/// Plug-in kernel given by a density on [0,1] bounded by `envelope`.
/// Sampled by rejection from the uniform proposal.
struct DensityKernel {
  std::function<double(double beta, double alpha)> density;
  double envelope = 1.0;
  bool state_independent = true;
  std::string name = "custom";
};

class AlphaKernel {
 public:
  using Variant = std::variant<UniformKernel, SymmetricBetaKernel, PointMassHalfKernel,
                               GaspardGilbertKernel, DensityKernel>;

  AlphaKernel() : v_(UniformKernel{}) {}
  AlphaKernel(Variant v) : v_(std::move(v)) {  // NOLINT(google-explicit-constructor)
    if (const auto* b = std::get_if<SymmetricBetaKernel>(&v_); b && !(b->d > 0.0)) {
      throw std::invalid_argument("SymmetricBeta kernel needs d > 0");
    }
    if (const auto* c = std::get_if<DensityKernel>(&v_)) {
      if (!c->density || !(c->envelope > 0.0)) {
        throw std::invalid_argument("density kernel needs a density and a positive envelope");
      }
    }
  }

  static AlphaKernel uniform() { return {UniformKernel{}}; }
  static AlphaKernel symmetric_beta(double d) { return {SymmetricBetaKernel{d}}; }
  static AlphaKernel point_half() { return {PointMassHalfKernel{}}; }
  static AlphaKernel gaspard_gilbert() { return {GaspardGilbertKernel{}}; }

  const Variant& variant() const { return v_; }

  bool state_independent() const {
    if (const auto* c = std::get_if<DensityKernel>(&v_)) return c->state_independent;
    return !std::holds_alternative<GaspardGilbertKernel>(v_);
  }

  bool has_density() const { return !std::holds_alternative<PointMassHalfKernel>(v_); }

  /// Density of P(beta, .) at alpha; empty for atomic kernels.
  std::optional<double> density(double beta, double alpha) const {
    return std::visit(
        [&](const auto& k) -> std::optional<double> {
          using K = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<K, UniformKernel>) {
            return 1.0;
          } else if constexpr (std::is_same_v<K, SymmetricBetaKernel>) {
            const double a = 0.5 * k.d;
            if (a == 1.0) return 1.0;
            const double log_norm = std::lgamma(2.0 * a) - 2.0 * std::lgamma(a);
            return std::exp(log_norm + (a - 1.0) * std::log(alpha * (1.0 - alpha)));
          } else if constexpr (std::is_same_v<K, PointMassHalfKernel>) {
            return std::nullopt;
          } else if constexpr (std::is_same_v<K, GaspardGilbertKernel>) {
            return gg_density(beta, alpha);
          } else {
            return k.density(beta, alpha);
          }
        },
        v_);
  }

  /// Draws the new left fraction given the current left fraction `beta`.
  double sample(double beta, Rng& rng) const {
    return std::visit(
        [&](const auto& k) -> double {
          using K = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<K, UniformKernel>) {
            return uniform01(rng);
          } else if constexpr (std::is_same_v<K, SymmetricBetaKernel>) {
            const double g1 = sample_gamma(rng, 0.5 * k.d, 1.0);
            const double g2 = sample_gamma(rng, 0.5 * k.d, 1.0);
            const double s = g1 + g2;
            return s > 0.0 ? g1 / s : 0.5;
          } else if constexpr (std::is_same_v<K, PointMassHalfKernel>) {
            return 0.5;
          } else if constexpr (std::is_same_v<K, GaspardGilbertKernel>) {
            for (;;) {
              const double alpha = uniform01(rng);
              if (kGgDensityEnvelope * uniform01(rng) < gg_density(beta, alpha)) return alpha;
            }
          } else {
            for (;;) {
              const double alpha = uniform01(rng);
              if (k.envelope * uniform01(rng) < k.density(beta, alpha)) return alpha;
            }
          }
        },
        v_);
  }

  std::string name() const {
    return std::visit(
        [](const auto& k) -> std::string {
          using K = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<K, UniformKernel>) return "uniform";
          else if constexpr (std::is_same_v<K, SymmetricBetaKernel>) return "beta(d=" + std::to_string(k.d) + ")";
          else if constexpr (std::is_same_v<K, PointMassHalfKernel>) return "point_half";
          else if constexpr (std::is_same_v<K, GaspardGilbertKernel>) return "gg";
          else return k.name;
        },
        v_);
  }

 private:
  Variant v_;
};

inline double sample_kernel(const AlphaKernel& k, double beta, Rng& rng) {
  return k.sample(beta, rng);
}

struct MonteCarloValue {
  double value = 0.0;
  double std_error = 0.0;
};

/// Monte-Carlo variance of a state-independent kernel, with standard error
/// (delta method on the second central moment).
inline MonteCarloValue kernel_variance_mc(const AlphaKernel& k, std::size_t draws, Rng& rng) {
  if (!k.state_independent()) {
    throw std::domain_error("kernel variance is defined only for state-independent kernels");
  }
  double mean = 0.0, m2 = 0.0, m4 = 0.0;
  std::vector<double> xs(draws);
  for (auto& x : xs) {
    x = k.sample(0.5, rng);
    mean += x;
  }
  mean /= static_cast<double>(draws);
  for (double x : xs) {
    const double c = x - mean;
    m2 += c * c;
    m4 += c * c * c * c;
  }
  const double n = static_cast<double>(draws);
  m2 /= n;
  m4 /= n;
  return {m2, std::sqrt(std::max(0.0, m4 - m2 * m2) / n)};
}

/// sigma_P^2: exact for the built-in kernels, Monte-Carlo (10^6 draws,
/// fixed stream) for plug-in ones.
inline double kernel_variance(const AlphaKernel& k) {
  if (!k.state_independent()) {
    throw std::domain_error("kernel variance is defined only for state-independent kernels");
  }
  const auto& v = k.variant();
  if (std::holds_alternative<UniformKernel>(v)) return 1.0 / 12.0;
  if (const auto* b = std::get_if<SymmetricBetaKernel>(&v)) return 1.0 / (4.0 * (b->d + 1.0));
  if (std::holds_alternative<PointMassHalfKernel>(v)) return 0.0;
  Rng rng = substream(0x5eedULL, 0);
  return kernel_variance_mc(k, 1'000'000, rng).value;
}

/// min over a (beta, alpha) grid of density(beta, alpha) / nu_r(alpha), where
/// nu_r is the Beta(3/2,3/2) density. Grid nodes are j/(grid_size-1); alpha
/// nodes where nu_r vanishes are skipped (the ratio is unbounded there).
inline double minorization_ratio(const AlphaKernel& k, std::size_t grid_size) {
  if (!k.has_density()) throw std::domain_error("minorization_ratio: kernel has no density");
  if (grid_size < 100) throw std::invalid_argument("minorization_ratio: grid_size must be >= 100");
  const double h = 1.0 / static_cast<double>(grid_size - 1);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t a = 1; a + 1 < grid_size; ++a) {
    const double alpha = static_cast<double>(a) * h;
    const double reference = beta32_density(alpha);
    for (std::size_t b = 0; b < grid_size; ++b) {
      const double beta = static_cast<double>(b) * h;
      best = std::min(best, *k.density(beta, alpha) / reference);
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Rates

struct ConstantSumRate {
  double lambda = 1.0;
};
/// max(sqrt(s), lambda_min): the billiard rate with a floor.
struct SqrtCutoffSumRate {
  double lambda_min = 0.1;
};
/// sqrt(s) without a floor; exploratory use only.
struct SqrtSumRate {};

struct UnitRatioRate {};
struct GaspardGilbertRatioRate {};

using SumRate = std::variant<ConstantSumRate, SqrtCutoffSumRate, SqrtSumRate>;
using RatioRate = std::variant<UnitRatioRate, GaspardGilbertRatioRate>;

struct RateSpec {
  SumRate lambda_s = ConstantSumRate{};
  RatioRate lambda_r = UnitRatioRate{};

  static RateSpec constant(double lambda) {
    if (!(lambda > 0.0)) throw std::invalid_argument("constant rate must be > 0");
    return {ConstantSumRate{lambda}, UnitRatioRate{}};
  }

  double sum_part(double s) const {
    return std::visit(
        [s](const auto& r) -> double {
          using R = std::decay_t<decltype(r)>;
          if constexpr (std::is_same_v<R, ConstantSumRate>) return r.lambda;
          else if constexpr (std::is_same_v<R, SqrtCutoffSumRate>) return std::max(std::sqrt(s), r.lambda_min);
          else return std::sqrt(s);
        },
        lambda_s);
  }

  double ratio_part(double beta) const {
    return std::holds_alternative<UnitRatioRate>(lambda_r) ? 1.0 : gg_lambda_r(beta);
  }

  bool is_constant() const {
    return std::holds_alternative<ConstantSumRate>(lambda_s) &&
           std::holds_alternative<UnitRatioRate>(lambda_r);
  }

  /// Uniform lower bound of Lambda over the state space (0 when there is none).
  double floor() const {
    const double ratio_floor =
        std::holds_alternative<UnitRatioRate>(lambda_r) ? 1.0 : std::sqrt(std::numbers::pi) / 3.0;
    return std::visit(
        [&](const auto& r) -> double {
          using R = std::decay_t<decltype(r)>;
          if constexpr (std::is_same_v<R, ConstantSumRate>) return r.lambda * ratio_floor;
          else if constexpr (std::is_same_v<R, SqrtCutoffSumRate>) return r.lambda_min * ratio_floor;
          else return 0.0;
        },
        lambda_s);
  }

  std::string name() const {
    std::string s = std::visit(
        [](const auto& r) -> std::string {
          using R = std::decay_t<decltype(r)>;
          if constexpr (std::is_same_v<R, ConstantSumRate>) return "constant(" + std::to_string(r.lambda) + ")";
          else if constexpr (std::is_same_v<R, SqrtCutoffSumRate>) return "sqrt_cutoff(" + std::to_string(r.lambda_min) + ")";
          else return "sqrt";
        },
        lambda_s);
    if (std::holds_alternative<GaspardGilbertRatioRate>(lambda_r)) s += "*gg_ratio";
    return s;
  }
};

/// Lambda(e_left, e_right) = Lambda_s(sum) * Lambda_r(ratio). At the origin
/// the ratio part is evaluated at beta = 1/2, and the unfloored sqrt rate is 0.
inline double rate(const RateSpec& spec, double e_left, double e_right) {
  if (!(e_left >= 0.0) || !(e_right >= 0.0)) {
    throw std::invalid_argument("rate: energies must be >= 0");
  }
  const double s = e_left + e_right;
  const double beta = s > 0.0 ? e_left / s : 0.5;
  return spec.sum_part(s) * spec.ratio_part(beta);
}

/// A concrete exchange model: rate factorization plus splitting kernel.
struct Model {
  RateSpec rate;
  AlphaKernel kernel;

  /// Constant rate with a state-independent kernel.
  bool is_reference() const { return rate.is_constant() && kernel.state_independent(); }

  double constant_rate() const {
    if (!rate.is_constant()) throw std::domain_error("model rate is state dependent");
    return std::get<ConstantSumRate>(rate.lambda_s).lambda;
  }

  std::string name() const { return "rate=" + rate.name() + ",kernel=" + kernel.name(); }
};

/// Reference model: constant rate lambda, state-independent kernel.
inline Model reference_model(double lambda, AlphaKernel kernel) {
  return {RateSpec::constant(lambda), std::move(kernel)};
}

/// Billiard-lattice model with GG kernel and ratio rate and the given sum rate.
inline Model gaspard_gilbert_model(SumRate sum_rate) {
  return {RateSpec{std::move(sum_rate), GaspardGilbertRatioRate{}}, AlphaKernel::gaspard_gilbert()};
}

}  // namespace exchange_lattice
