#pragma once

// Lattice energy configurations, the pairwise exchange map and the
// partial-sum (u) coordinates in which the contraction metric is Euclidean.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace exchange_lattice {

/// Correctly rounded sum of a sequence of doubles (Shewchuk partials with
/// the half-even fix-up used by Python's math.fsum). The result depends only
/// on the exact real sum of the inputs, not on their order.
inline double exact_sum(std::span<const double> values) {
  std::vector<double> partials;
  for (double x : values) {
    std::size_t used = 0;
    for (double y : partials) {
      if (std::abs(x) < std::abs(y)) std::swap(x, y);
      const double hi = x + y;
      const double lo = y - (hi - x);
      if (lo != 0.0) partials[used++] = lo;
      x = hi;
    }
    partials.resize(used);
    partials.push_back(x);
  }
  if (partials.empty()) return 0.0;

  std::size_t n = partials.size();
  double hi = partials[--n];
  double lo = 0.0;
  while (n > 0) {
    const double x = hi;
    const double y = partials[--n];
    hi = x + y;
    const double yr = hi - x;
    lo = y - yr;
    if (lo != 0.0) break;
  }
  // Round-half-even correction when the remaining partials tip a tie.
  if (n > 0 && ((lo < 0.0 && partials[n - 1] < 0.0) ||
                (lo > 0.0 && partials[n - 1] > 0.0))) {
    const double y = lo * 2.0;
    const double x = hi + y;
    const double yr = x - hi;
    if (y == yr) hi = x;
  }
  return hi;
}

/// Point of the closed positive orthant with N >= 2 sites and positive
/// total energy. Immutable once built.
class EnergyState {
 public:
  EnergyState() = default;

  explicit EnergyState(std::vector<double> energies) : energies_(std::move(energies)) {
    if (energies_.size() < 2) {
      throw std::invalid_argument("EnergyState: need at least 2 sites");
    }
    for (double e : energies_) {
      if (!(e >= 0.0) || !std::isfinite(e)) {
        throw std::invalid_argument("EnergyState: energies must be finite and >= 0");
      }
    }
    total_ = exact_sum(energies_);
    if (!(total_ > 0.0)) {
      throw std::invalid_argument("EnergyState: total energy must be > 0");
    }
  }

  /// Uniform profile with mean energy `epsilon` per site.
  static EnergyState uniform(std::size_t n_sites, double epsilon) {
    return EnergyState(std::vector<double>(n_sites, epsilon));
  }

  std::size_t n_sites() const { return energies_.size(); }
  std::span<const double> energies() const { return energies_; }
  const std::vector<double>& vector() const { return energies_; }
  /// 0-based site access.
  double operator[](std::size_t i) const { return energies_[i]; }

  double total() const { return total_; }
  double mean_energy() const { return total_ / static_cast<double>(energies_.size()); }

  friend bool operator==(const EnergyState& a, const EnergyState& b) {
    return a.energies_ == b.energies_;
  }

 private:
  std::vector<double> energies_;
  double total_ = 0.0;
};

/// Exchange across bond `bond` (1-based, bond i couples sites i and i+1)
/// that leaves a fraction `alpha` of the pair energy on the left site.
struct ExchangeMove {
  std::size_t bond = 1;
  double alpha = 0.5;
};

/// Partial-sum coordinates u_i = sum_{k<=i} (x_k - eps), i = 1..N-1.
/// u_0 = u_N = 0 are implicit.
struct UCoords {
  std::vector<double> u;
  double epsilon = 0.0;
  std::size_t n_sites = 0;
};

/// Energy grid for states with the given total: the unit in the last place
/// of the total. Every multiple of it up to the total is a double, so sums
/// of lattice energies never round.
inline double energy_quantum(double total) {
  if (!(total > 0.0) || !std::isfinite(total)) {
    throw std::invalid_argument("energy_quantum: total must be finite and > 0");
  }
  return std::ldexp(1.0, std::ilogb(total) - std::numeric_limits<double>::digits + 1);
}

namespace detail {

/// Rounds every entry to the grid of `total` and puts the leftover on the
/// largest entry, so the entries add up to `total` exactly.
inline void snap_in_place(std::vector<double>& x, double total) {
  const double q = energy_quantum(total);
  double sum = 0.0;
  for (double& e : x) {
    e = std::nearbyint(e / q) * q;
    sum += e;
  }
  auto largest = std::max_element(x.begin(), x.end());
  *largest += total - sum;
  if (*largest < 0.0) throw std::invalid_argument("snap: total far from the sum of energies");
}

/// Exchange across a 1-based bond on lattice energies with grid `quantum`.
/// The pair sum is exact and the left share is rounded to the grid, so the
/// pair (and hence the total) is conserved bitwise. No validation.
inline void exchange_in_place(std::span<double> x, std::size_t bond, double alpha,
                              double quantum) {
  double& lhs = x[bond - 1];
  double& rhs = x[bond];
  const double s = lhs + rhs;
  lhs = std::nearbyint(alpha * s / quantum) * quantum;
  rhs = s - lhs;
}

inline void check_move(std::size_t n_sites, const ExchangeMove& m) {
  if (m.bond < 1 || m.bond > n_sites - 1) {
    throw std::out_of_range("exchange bond " + std::to_string(m.bond) +
                            " outside 1.." + std::to_string(n_sites - 1));
  }
  if (!(m.alpha >= 0.0 && m.alpha <= 1.0)) {
    throw std::invalid_argument("exchange alpha outside [0,1]");
  }
}

}  // namespace detail

/// The same state with every energy on the grid of its total; the total is
/// unchanged and lattice states are returned as they are.
inline EnergyState snap_to_lattice(const EnergyState& x) {
  std::vector<double> out = x.vector();
  detail::snap_in_place(out, x.total());
  return EnergyState(std::move(out));
}

/// Applies the exchange to snap_to_lattice(x).
inline EnergyState apply_exchange(const EnergyState& x, const ExchangeMove& m) {
  detail::check_move(x.n_sites(), m);
  std::vector<double> out = x.vector();
  detail::snap_in_place(out, x.total());
  detail::exchange_in_place(out, m.bond, m.alpha, energy_quantum(x.total()));
  return EnergyState(std::move(out));
}

inline UCoords to_u(const EnergyState& x) {
  const std::size_t n = x.n_sites();
  UCoords out;
  out.epsilon = x.mean_energy();
  out.n_sites = n;
  out.u.resize(n - 1);
  double partial = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    partial += x[i];
    out.u[i] = partial - static_cast<double>(i + 1) * out.epsilon;
  }
  return out;
}

inline EnergyState from_u(const UCoords& c) {
  if (c.n_sites < 2 || c.u.size() != c.n_sites - 1) {
    throw std::invalid_argument("from_u: u must have n_sites-1 entries");
  }
  if (!(c.epsilon > 0.0)) throw std::invalid_argument("from_u: epsilon must be > 0");
  const std::size_t n = c.n_sites;
  // Rounding slack for states on the boundary of the simplex.
  const double slack = 1e-12 * c.epsilon * static_cast<double>(n);
  std::vector<double> x(n);
  double prev = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double next = i + 1 < n ? c.u[i] : 0.0;
    double e = c.epsilon + next - prev;
    if (e < 0.0) {
      if (e < -slack) {
        throw std::invalid_argument("from_u: u violates the simplex inequalities at site " +
                                    std::to_string(i + 1));
      }
      e = 0.0;
    }
    x[i] = e;
    prev = next;
  }
  return EnergyState(std::move(x));
}

namespace detail {
inline void check_same_simplex(const EnergyState& a, const EnergyState& b) {
  if (a.n_sites() != b.n_sites()) {
    throw std::invalid_argument("states have different numbers of sites");
  }
  const double scale = std::max(a.total(), b.total());
  if (std::abs(a.total() - b.total()) > 1e-12 * scale) {
    throw std::invalid_argument("states lie on different simplices (total energy differs)");
  }
}
}  // namespace detail

/// Squared contraction metric: sum_i (sum_{k<=i} (x_k - x'_k))^2.
inline double metric_squared(const EnergyState& a, const EnergyState& b) {
  detail::check_same_simplex(a, b);
  double partial = 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < a.n_sites(); ++i) {
    partial += a[i] - b[i];
    acc += partial * partial;
  }
  return acc;
}

inline double metric(const EnergyState& a, const EnergyState& b) {
  return std::sqrt(metric_squared(a, b));
}

/// Upper bound eps * N * sqrt(N-1) on the metric diameter of the simplex.
inline double diameter_bound(double epsilon, std::size_t n_sites) {
  if (!(epsilon > 0.0) || n_sites < 2) {
    throw std::invalid_argument("diameter_bound: need epsilon > 0 and N >= 2");
  }
  const double n = static_cast<double>(n_sites);
  return epsilon * n * std::sqrt(n - 1.0);
}

// Serialization: CSV rows and JSON arrays of site energies.

inline std::string to_csv_row(const EnergyState& x) {
  std::ostringstream os;
  os.precision(17);
  for (std::size_t i = 0; i < x.n_sites(); ++i) {
    if (i) os << ',';
    os << x[i];
  }
  return os.str();
}

inline EnergyState from_csv_row(const std::string& row) {
  std::vector<double> values;
  std::stringstream ss(row);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    std::size_t pos = 0;
    const double v = std::stod(cell, &pos);
    values.push_back(v);
  }
  return EnergyState(std::move(values));
}

inline void to_json(nlohmann::json& j, const EnergyState& x) { j = x.vector(); }

inline void from_json(const nlohmann::json& j, EnergyState& x) {
  x = EnergyState(j.get<std::vector<double>>());
}

}  // namespace exchange_lattice
