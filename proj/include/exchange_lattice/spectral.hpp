#pragma once

// Contraction matrix and its spectrum, closed-form contraction and
// spectral-gap bounds, and empirical gap estimators (coupled-distance decay,
// autocorrelation decay, Rayleigh quotients of the Dirichlet form).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "kernels.hpp"
#include "measures.hpp"
#include "random.hpp"
#include "simulator.hpp"
#include "state_space.hpp"
#include "statistics.hpp"

namespace exchange_lattice {

// ---------------------------------------------------------------------------
// Contraction matrix

/// Symmetric m x m matrix with 2 on the diagonal and -1 two places off it.
/// Governs the expected decay of the coupled squared distance for N = m + 1.
class ContractionMatrix {
 public:
  explicit ContractionMatrix(std::size_t size) : m_(size), a_(size * size, 0.0) {
    if (size < 1) throw std::invalid_argument("ContractionMatrix: size must be >= 1");
    for (std::size_t i = 0; i < m_; ++i) {
      at(i, i) = 2.0;
      if (i + 2 < m_) {
        at(i, i + 2) = -1.0;
        at(i + 2, i) = -1.0;
      }
    }
  }

  static ContractionMatrix for_sites(std::size_t n_sites) {
    if (n_sites < 2) throw std::invalid_argument("ContractionMatrix: N must be >= 2");
    return ContractionMatrix(n_sites - 1);
  }

  std::size_t size() const { return m_; }
  double operator()(std::size_t i, std::size_t j) const { return a_[i * m_ + j]; }

 private:
  double& at(std::size_t i, std::size_t j) { return a_[i * m_ + j]; }

  std::size_t m_;
  std::vector<double> a_;
};

/// Spectrum of the (N-1) x (N-1) contraction matrix, ascending.
inline std::vector<double> eigenvalues_closed_form(std::size_t n_sites) {
  if (n_sites < 2) throw std::invalid_argument("eigenvalues_closed_form: N must be >= 2");
  auto four_sin2 = [](double k, double denom) {
    const double s = std::sin(std::numbers::pi * k / denom);
    return 4.0 * s * s;
  };
  const double n = static_cast<double>(n_sites);
  std::vector<double> out;
  if (n_sites % 2 == 1) {
    for (std::size_t k = 1; k <= (n_sites - 1) / 2; ++k) {
      out.push_back(four_sin2(static_cast<double>(k), n + 1.0));
      out.push_back(four_sin2(static_cast<double>(k), n + 1.0));
    }
  } else {
    for (std::size_t k = 1; k + 1 <= n_sites / 2; ++k) out.push_back(four_sin2(static_cast<double>(k), n));
    for (std::size_t k = 1; k <= n_sites / 2; ++k) out.push_back(four_sin2(static_cast<double>(k), n + 2.0));
  }
  std::sort(out.begin(), out.end());
  return out;
}

namespace detail {

/// Number of eigenvalues of the symmetric tridiagonal (diag, off) below x
/// (Sturm sequence count via the LDL^T pivots).
inline std::size_t sturm_count(const std::vector<double>& diag, const std::vector<double>& off,
                               double x) {
  std::size_t count = 0;
  double q = 1.0;
  for (std::size_t i = 0; i < diag.size(); ++i) {
    const double e2 = i == 0 ? 0.0 : off[i - 1] * off[i - 1];
    q = diag[i] - x - (i == 0 ? 0.0 : e2 / q);
    if (q == 0.0) q = -std::numeric_limits<double>::epsilon() * (std::abs(x) + 1.0);
    if (q < 0.0) ++count;
  }
  return count;
}

/// All eigenvalues of a symmetric tridiagonal matrix by bisection.
inline std::vector<double> tridiagonal_eigenvalues(const std::vector<double>& diag,
                                                   const std::vector<double>& off) {
  const std::size_t n = diag.size();
  if (n == 0) return {};
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = (i > 0 ? std::abs(off[i - 1]) : 0.0) + (i + 1 < n ? std::abs(off[i]) : 0.0);
    lo = std::min(lo, diag[i] - r);
    hi = std::max(hi, diag[i] + r);
  }
  std::vector<double> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    double a = lo, b = hi;  // invariant: count(a) <= k < count(b)
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (a + b);
      if (mid <= a || mid >= b) break;
      if (sturm_count(diag, off, mid) > k) {
        b = mid;
      } else {
        a = mid;
      }
    }
    out[k] = 0.5 * (a + b);
  }
  return out;
}

}  // namespace detail

/// Numerical spectrum: entries with odd and even index never couple, so the
/// matrix splits into two tridiagonal blocks, each solved by Sturm bisection.
inline std::vector<double> eigenvalues_numeric(const ContractionMatrix& m) {
  const std::size_t n = m.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const bool band = i == j || i + 2 == j || j + 2 == i;
      if (!band && m(i, j) != 0.0) {
        throw std::invalid_argument("eigenvalues_numeric: matrix is not parity-split banded");
      }
    }
  }
  std::vector<double> out;
  for (std::size_t parity = 0; parity < 2; ++parity) {
    std::vector<double> diag, off;
    for (std::size_t i = parity; i < n; i += 2) {
      diag.push_back(m(i, i));
      if (i + 2 < n) off.push_back(m(i, i + 2));
    }
    const auto block = detail::tridiagonal_eigenvalues(diag, off);
    out.insert(out.end(), block.begin(), block.end());
  }
  std::sort(out.begin(), out.end());
  return out;
}

// ---------------------------------------------------------------------------
// Closed-form bounds

/// Exponential rate of Wasserstein-2 decay, (1/2) lambda (1 - 4 sigma^2)
/// sin^2(pi/(N+2)); the rate for the mean squared coupled distance is twice
/// this. Also the lower bound on the L2 gap of a reversible reference model.
inline double contraction_rate_bound(double lambda, double sigma_sq, std::size_t n_sites) {
  if (!(lambda > 0.0)) throw std::invalid_argument("contraction_rate_bound: lambda must be > 0");
  if (!(sigma_sq >= 0.0) || sigma_sq > 0.25) {
    throw std::invalid_argument("contraction_rate_bound: kernel variance must lie in [0, 1/4]");
  }
  if (n_sites < 2) throw std::invalid_argument("contraction_rate_bound: N must be >= 2");
  const double s = std::sin(std::numbers::pi / (static_cast<double>(n_sites) + 2.0));
  return 0.5 * lambda * (1.0 - 4.0 * sigma_sq) * s * s;
}

/// Constants of the comparison with a reversible reference model.
struct ComparisonInputs {
  double b_min = 1.0;        // minorization constant P >= b_min P*
  double c_minus = 1.0;      // lower Radon-Nikodym bound between stationary laws
  double c_plus = 1.0;       // upper Radon-Nikodym bound
  double lambda_star = 1.0;  // rate floor
  double sigma_star_sq = 0.0;

  void validate() const {
    if (!(b_min > 0.0 && b_min <= 1.0)) throw std::invalid_argument("b_min must lie in (0,1]");
    if (!(c_minus > 0.0) || !(c_plus >= c_minus)) {
      throw std::invalid_argument("need 0 < c_minus <= c_plus");
    }
    if (!(lambda_star > 0.0)) throw std::invalid_argument("lambda_star must be > 0");
    if (!(sigma_star_sq >= 0.0 && sigma_star_sq < 0.25)) {
      throw std::invalid_argument("sigma_star_sq must lie in [0, 1/4)");
    }
  }
};

inline double composite_gap_bound(const ComparisonInputs& in, std::size_t n_sites) {
  in.validate();
  return in.b_min * (in.c_minus / in.c_plus) *
         contraction_rate_bound(in.lambda_star, in.sigma_star_sq, n_sites);
}

/// Comparison constants for the billiard model with rate floor lambda_min:
/// minorization pi/4 against Beta(3/2,3/2), Lambda_r >= sqrt(pi)/3, equal
/// stationary laws.
inline ComparisonInputs gg_comparison_inputs(double lambda_min) {
  return {std::numbers::pi / 4.0, 1.0, 1.0, lambda_min * std::sqrt(std::numbers::pi) / 3.0,
          1.0 / 16.0};
}

/// Best available closed-form lower bound on the spectral gap of `model`:
/// the reference-model bound, the comparison bound for the floored billiard
/// model, or nothing when no uniform rate floor exists.
inline std::optional<double> closed_form_lower_bound(const Model& model, std::size_t n_sites) {
  if (model.is_reference()) {
    return contraction_rate_bound(model.constant_rate(), kernel_variance(model.kernel), n_sites);
  }
  const auto* cutoff = std::get_if<SqrtCutoffSumRate>(&model.rate.lambda_s);
  if (cutoff && std::holds_alternative<GaspardGilbertKernel>(model.kernel.variant()) &&
      std::holds_alternative<GaspardGilbertRatioRate>(model.rate.lambda_r)) {
    return composite_gap_bound(gg_comparison_inputs(cutoff->lambda_min), n_sites);
  }
  return std::nullopt;
}

/// Shape parameter d of the product measure that is reversible for the
/// model's kernel and ratio rate, when one exists among the built-ins.
inline std::optional<double> stationary_dim_d(const Model& model) {
  const auto& v = model.kernel.variant();
  const bool unit_ratio = std::holds_alternative<UnitRatioRate>(model.rate.lambda_r);
  if (unit_ratio && std::holds_alternative<UniformKernel>(v)) return 2.0;
  if (const auto* b = std::get_if<SymmetricBetaKernel>(&v); b && unit_ratio) return b->d;
  if (!unit_ratio && std::holds_alternative<GaspardGilbertKernel>(v)) return 3.0;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Estimators

enum class GapMethod { autocorrelation, coupling_decay, rayleigh_upper, closed_form_lower };

inline std::string to_string(GapMethod m) {
  switch (m) {
    case GapMethod::autocorrelation: return "autocorrelation";
    case GapMethod::coupling_decay: return "coupling_decay";
    case GapMethod::rayleigh_upper: return "rayleigh_upper";
    case GapMethod::closed_form_lower: return "closed_form_lower";
  }
  return "unknown";
}

enum class EstimateStatus { ok, noisy, degenerate };

struct GapEstimate {
  double value = std::numeric_limits<double>::quiet_NaN();
  double std_error = 0.0;
  GapMethod method = GapMethod::autocorrelation;
  std::string model;
  std::size_t n_sites = 0;
  EstimateStatus status = EstimateStatus::ok;

  bool ok() const { return status == EstimateStatus::ok; }
};

struct EstimatorConfig {
  std::size_t n_replicas = 10'000;
  std::size_t n_samples = 100;  // grid intervals over the horizon
  std::uint64_t seed = 1;
  std::size_t threads = 1;
  std::size_t bootstrap = 200;
  double window_low = 0.05;
  double window_high = 0.8;
};

namespace detail {

inline std::size_t bootstrap_stream_index(std::size_t b) { return (1ULL << 48) + b; }

/// Decay rate of the normalized autocorrelation over the replicas listed in
/// `rows`: weighted log-linear fit over the leading stretch with rho in
/// [low, high]. NaN when fewer than three points qualify.
inline double autocorr_rate(const std::vector<std::vector<double>>& paths,
                            const std::vector<std::size_t>& rows, std::span<const double> times,
                            double low, double high, double* c0_out = nullptr) {
  const std::size_t nt = times.size();
  double mean = 0.0;
  for (std::size_t r : rows) {
    for (double v : paths[r]) mean += v;
  }
  mean /= static_cast<double>(rows.size() * nt);
  std::vector<double> cov(nt, 0.0);
  for (std::size_t r : rows) {
    const auto& p = paths[r];
    const double a0 = p[0] - mean;
    for (std::size_t t = 0; t < nt; ++t) cov[t] += a0 * (p[t] - mean);
  }
  if (c0_out) *c0_out = cov[0] / static_cast<double>(rows.size());
  if (!(cov[0] > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  std::vector<double> xs, ys, ws;
  for (std::size_t t = 1; t < nt; ++t) {
    const double rho = cov[t] / cov[0];
    if (!(rho >= low)) break;
    if (rho > high) continue;
    xs.push_back(times[t]);
    ys.push_back(std::log(rho));
    ws.push_back(rho * rho / (1.0 + rho * rho));  // var(log rho) ~ (1 + rho^2) / (n rho^2)
  }
  if (xs.size() < 3) return std::numeric_limits<double>::quiet_NaN();
  return -linear_fit(xs, ys, ws).slope;
}

inline double std_dev(const std::vector<double>& xs) {
  return xs.size() < 2 ? 0.0 : std::sqrt(sample_variance(xs));
}

}  // namespace detail

/// Relaxation rate of `observable` from stationary-start replicas: the
/// normalized autocorrelation rho(t) is fitted by a weighted log-linear
/// model where rho lies in the configured window, with a bootstrap over
/// replicas for the standard error.
inline GapEstimate estimate_gap_autocorr(const Model& model, const MicrocanonicalSpec& spec,
                                         const Observable& observable, double horizon,
                                         const EstimatorConfig& cfg) {
  GapEstimate est;
  est.method = GapMethod::autocorrelation;
  est.model = model.name();
  est.n_sites = spec.n_sites;
  const auto times = uniform_grid(horizon, cfg.n_samples);
  const auto paths = ensemble_observable(
      model, [&](Rng& rng) { return sample_microcanonical(spec, rng); }, observable, times,
      cfg.n_replicas, cfg.seed, cfg.threads);

  std::vector<std::size_t> all(cfg.n_replicas);
  for (std::size_t r = 0; r < all.size(); ++r) all[r] = r;
  double c0 = 0.0;
  est.value = detail::autocorr_rate(paths, all, times, cfg.window_low, cfg.window_high, &c0);
  double scale = 0.0;
  for (const auto& p : paths) scale = std::max(scale, std::abs(p[0]));
  if (!(c0 > 1e-20 * std::max(1.0, scale * scale))) {
    est.status = EstimateStatus::degenerate;
    est.value = std::numeric_limits<double>::quiet_NaN();
    return est;
  }
  std::vector<double> boot;
  Rng rng = substream(cfg.seed, detail::bootstrap_stream_index(0));
  std::vector<std::size_t> rows(cfg.n_replicas);
  for (std::size_t b = 0; b < cfg.bootstrap; ++b) {
    for (auto& r : rows) r = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(cfg.n_replicas));
    const double v = detail::autocorr_rate(paths, rows, times, cfg.window_low, cfg.window_high);
    if (std::isfinite(v)) boot.push_back(v);
  }
  est.std_error = detail::std_dev(boot);
  if (!std::isfinite(est.value) || boot.size() < cfg.bootstrap / 2 || est.std_error > est.value) {
    est.status = EstimateStatus::noisy;
  }
  return est;
}

/// Monte-Carlo Rayleigh quotient D(A) / Var(A) of the Dirichlet form
/// D(A) = 1/2 sum_i E[Lambda_i int P(d alpha) (A(T_{i,alpha} x) - A(x))^2]
/// under the stationary law; an upper bound on the gap up to sampling error.
inline GapEstimate rayleigh_quotient_upper(const Model& model, const MicrocanonicalSpec& spec,
                                           const Observable& trial, std::size_t n_samples,
                                           std::size_t inner_alpha_draws, std::uint64_t seed,
                                           std::size_t threads = 1) {
  if (n_samples < 2 || inner_alpha_draws < 1) {
    throw std::invalid_argument("rayleigh_quotient_upper: need >= 2 samples and >= 1 inner draw");
  }
  std::vector<double> values(n_samples), dirichlet(n_samples);
  parallel_for(n_samples, threads, [&](std::size_t j) {
    Rng rng = substream(seed, j);
    const EnergyState x = sample_microcanonical(spec, rng);
    std::vector<double> work(x.energies().begin(), x.energies().end());
    const double quantum = energy_quantum(x.total());
    const double a = trial(work);
    double acc = 0.0;
    for (std::size_t b0 = 0; b0 + 1 < work.size(); ++b0) {
      const double left = work[b0], right = work[b0 + 1];
      const double lam = rate(model.rate, left, right);
      const double beta = detail::left_fraction(left, right);
      double inner = 0.0;
      for (std::size_t k = 0; k < inner_alpha_draws; ++k) {
        detail::exchange_in_place(work, b0 + 1, model.kernel.sample(beta, rng), quantum);
        const double diff = trial(work) - a;
        inner += diff * diff;
        work[b0] = left;
        work[b0 + 1] = right;
      }
      acc += lam * inner / static_cast<double>(inner_alpha_draws);
    }
    values[j] = a;
    dirichlet[j] = 0.5 * acc;
  });

  const double n = static_cast<double>(n_samples);
  const double mean_a = std::accumulate(values.begin(), values.end(), 0.0) / n;
  std::vector<double> sq(n_samples);
  double var = 0.0, scale = 0.0;
  for (std::size_t j = 0; j < n_samples; ++j) {
    sq[j] = (values[j] - mean_a) * (values[j] - mean_a);
    var += sq[j];
    scale = std::max(scale, std::abs(values[j]));
  }
  var /= n;
  if (!(var > 1e-20 * std::max(1.0, scale * scale))) {
    throw std::domain_error("rayleigh_quotient_upper: trial observable has zero variance");
  }
  const double mean_d = std::accumulate(dirichlet.begin(), dirichlet.end(), 0.0) / n;
  const double ratio = mean_d / var;
  // Delta method for a ratio of means.
  std::vector<double> lin(n_samples);
  for (std::size_t j = 0; j < n_samples; ++j) lin[j] = dirichlet[j] - ratio * sq[j];
  GapEstimate est;
  est.method = GapMethod::rayleigh_upper;
  est.model = model.name();
  est.n_sites = spec.n_sites;
  est.value = ratio;
  est.std_error = std::sqrt(sample_variance(lin) / n) / var;
  return est;
}

/// Mean squared coupled distance over replicas and its fitted decay rate.
struct CouplingDecay {
  std::vector<double> times;
  std::vector<double> mean_d2;
  std::vector<double> std_error;
  double rate = 0.0;  // -slope of log mean d^2 over the grid
  double rate_std_error = 0.0;
};

namespace detail {
inline double log_mean_slope(const std::vector<std::vector<double>>& d2,
                             const std::vector<std::size_t>& rows, std::span<const double> times) {
  std::vector<double> xs, ys;
  for (std::size_t t = 0; t < times.size(); ++t) {
    double m = 0.0;
    for (std::size_t r : rows) m += d2[r][t];
    m /= static_cast<double>(rows.size());
    if (m > 0.0) {
      xs.push_back(times[t]);
      ys.push_back(std::log(m));
    }
  }
  if (xs.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  return -linear_fit(xs, ys).slope;
}
}  // namespace detail

inline CouplingDecay estimate_coupling_decay(const Model& model, const EnergyState& x0,
                                             const EnergyState& y0, double horizon,
                                             const EstimatorConfig& cfg) {
  CouplingDecay out;
  out.times = uniform_grid(horizon, cfg.n_samples);
  std::vector<std::vector<double>> d2(cfg.n_replicas);
  parallel_for(cfg.n_replicas, cfg.threads, [&](std::size_t r) {
    Rng rng = substream(cfg.seed, r);
    const auto samples = simulate_coupled(x0, y0, model, horizon, out.times, rng);
    d2[r].reserve(samples.size());
    for (const auto& s : samples) d2[r].push_back(s.d2);
  });
  std::vector<double> column(cfg.n_replicas);
  for (std::size_t t = 0; t < out.times.size(); ++t) {
    for (std::size_t r = 0; r < cfg.n_replicas; ++r) column[r] = d2[r][t];
    const auto m = mean_with_error(column);
    out.mean_d2.push_back(m.mean);
    out.std_error.push_back(m.std_error);
  }
  std::vector<std::size_t> rows(cfg.n_replicas);
  for (std::size_t r = 0; r < rows.size(); ++r) rows[r] = r;
  out.rate = detail::log_mean_slope(d2, rows, out.times);
  std::vector<double> boot;
  Rng rng = substream(cfg.seed, detail::bootstrap_stream_index(0));
  for (std::size_t b = 0; b < cfg.bootstrap; ++b) {
    for (auto& r : rows) r = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(cfg.n_replicas));
    const double v = detail::log_mean_slope(d2, rows, out.times);
    if (std::isfinite(v)) boot.push_back(v);
  }
  out.rate_std_error = detail::std_dev(boot);
  return out;
}

/// Starting pair at maximal distance: all energy on the first site versus
/// all energy on the last site.
inline std::pair<EnergyState, EnergyState> extreme_pair(std::size_t n_sites, double epsilon) {
  std::vector<double> a(n_sites, 0.0), b(n_sites, 0.0);
  a.front() = epsilon * static_cast<double>(n_sites);
  b.back() = epsilon * static_cast<double>(n_sites);
  return {EnergyState(std::move(a)), EnergyState(std::move(b))};
}

// ---------------------------------------------------------------------------
// Gap scan

struct GapScanConfig {
  EstimatorConfig estimator;
  double epsilon = 1.0;
  std::optional<double> dim_d;  // defaults to stationary_dim_d(model)
  double horizon_factor = 1.0;  // horizon = factor * N^2 / Lambda(eps, eps)
  std::size_t rayleigh_samples = 20'000;
  std::size_t inner_alpha_draws = 4;
};

struct GapScanRow {
  std::size_t n_sites = 0;
  double bound_lower = std::numeric_limits<double>::quiet_NaN();
  GapEstimate estimate;
  GapEstimate upper;
  double horizon = 0.0;
};

struct GapScanResult {
  std::vector<GapScanRow> rows;
  double slope = std::numeric_limits<double>::quiet_NaN();
  double slope_std_error = std::numeric_limits<double>::quiet_NaN();
  double ci_low = std::numeric_limits<double>::quiet_NaN();
  double ci_high = std::numeric_limits<double>::quiet_NaN();
};

/// Per-N gap estimates (k = 1 Fourier mode), closed-form lower bounds and
/// Rayleigh upper bounds, plus the log-log slope of estimate versus N with a
/// 95% confidence interval.
inline GapScanResult gap_scan(const Model& model, const std::vector<std::size_t>& n_list,
                              const GapScanConfig& cfg) {
  if (n_list.size() < 3) throw std::invalid_argument("gap_scan: need at least 3 lattice sizes");
  const auto dim_d = cfg.dim_d ? cfg.dim_d : stationary_dim_d(model);
  if (!dim_d) throw std::invalid_argument("gap_scan: model has no known stationary product law");
  GapScanResult out;
  const double typical_rate = rate(model.rate, cfg.epsilon, cfg.epsilon);
  for (std::size_t idx = 0; idx < n_list.size(); ++idx) {
    const std::size_t n = n_list[idx];
    GapScanRow row;
    row.n_sites = n;
    if (auto lb = closed_form_lower_bound(model, n)) row.bound_lower = *lb;
    const MicrocanonicalSpec spec{*dim_d, cfg.epsilon, n};
    const auto mode = fourier_mode(1, n);
    row.horizon = cfg.horizon_factor * static_cast<double>(n * n) / typical_rate;
    EstimatorConfig ec = cfg.estimator;
    ec.seed = splitmix64(cfg.estimator.seed + 0x1000 * (idx + 1));
    row.estimate = estimate_gap_autocorr(model, spec, mode, row.horizon, ec);
    row.upper = rayleigh_quotient_upper(model, spec, mode, cfg.rayleigh_samples,
                                        cfg.inner_alpha_draws, splitmix64(ec.seed), ec.threads);
    out.rows.push_back(std::move(row));
  }
  std::vector<double> xs, ys, ws;
  for (const auto& r : out.rows) {
    if (!(r.estimate.value > 0.0) || !(r.estimate.std_error > 0.0)) continue;
    xs.push_back(std::log(static_cast<double>(r.n_sites)));
    ys.push_back(std::log(r.estimate.value));
    const double rel = r.estimate.std_error / r.estimate.value;
    ws.push_back(1.0 / (rel * rel));
  }
  if (xs.size() >= 2) {
    const auto fit = linear_fit(xs, ys, ws, true);
    out.slope = fit.slope;
    out.slope_std_error = fit.slope_std_error;
    out.ci_low = fit.slope - 1.96 * fit.slope_std_error;
    out.ci_high = fit.slope + 1.96 * fit.slope_std_error;
  }
  return out;
}

}  // namespace exchange_lattice
