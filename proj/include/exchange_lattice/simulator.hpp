#pragma once

// Event-driven simulation of the exchange process, its embedded jump chain
// and the synchronous (same bond, same alpha) coupling of two copies.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "kernels.hpp"
#include "random.hpp"
#include "state_space.hpp"

namespace exchange_lattice {

struct JumpEvent {
  double time = 0.0;
  std::size_t bond = 1;  // 1-based
  double alpha = 0.5;
};

struct StateSample {
  double time = 0.0;
  EnergyState state;
};

struct Trajectory {
  EnergyState initial;
  std::vector<JumpEvent> events;  // filled only with event logging on
  std::vector<StateSample> samples;
  std::uint64_t seed = 0;
  std::size_t event_count = 0;
  bool absorbed = false;  // total rate hit zero before the horizon
  double absorbed_at = std::numeric_limits<double>::infinity();
};

struct SimulationOptions {
  bool log_events = false;
};

namespace detail {

/// Sum tree over bond rates. Internal nodes are recomputed from their
/// children on every update, so the total never accumulates drift.
class RateTree {
 public:
  explicit RateTree(std::size_t n_leaves) : size_(1) {
    while (size_ < n_leaves) size_ <<= 1;
    nodes_.assign(2 * size_, 0.0);
  }

  void set(std::size_t leaf, double value) {
    std::size_t i = leaf + size_;
    nodes_[i] = value;
    for (i >>= 1; i >= 1; i >>= 1) nodes_[i] = nodes_[2 * i] + nodes_[2 * i + 1];
  }

  double total() const { return nodes_[1]; }
  double leaf(std::size_t i) const { return nodes_[i + size_]; }

  /// Leaf index whose cumulative interval contains target in [0, total).
  std::size_t find(double target) const {
    std::size_t i = 1;
    while (i < size_) {
      if (target < nodes_[2 * i]) {
        i = 2 * i;
      } else {
        target -= nodes_[2 * i];
        i = 2 * i + 1;
      }
    }
    return i - size_;
  }

 private:
  std::size_t size_;
  std::vector<double> nodes_;
};

inline double left_fraction(double left, double right) {
  const double s = left + right;
  return s > 0.0 ? left / s : 0.5;
}

}  // namespace detail

/// Continuous-time exchange process. Holds the pending event time, so the
/// realized path does not depend on where the caller stops to look at it.
class ExchangeProcess {
 public:
  /// Starts from snap_to_lattice(x0).
  ExchangeProcess(Model model, const EnergyState& x0)
      : model_(std::move(model)),
        x_(snap_to_lattice(x0).vector()),
        quantum_(energy_quantum(x0.total())),
        constant_(model_.rate.is_constant()),
        tree_(x_.size() - 1) {
    if (constant_) {
      constant_total_ = model_.constant_rate() * static_cast<double>(x_.size() - 1);
    } else {
      for (std::size_t b = 0; b + 1 < x_.size(); ++b) tree_.set(b, bond_rate(b));
    }
  }

  double time() const { return time_; }
  std::span<const double> energies() const { return x_; }
  EnergyState state() const { return EnergyState(x_); }
  std::size_t event_count() const { return events_; }
  bool absorbed() const { return absorbed_; }
  double total_rate() const { return constant_ ? constant_total_ : tree_.total(); }

  /// Runs all events with time <= t_target, reporting each to on_event.
  template <typename OnEvent>
  void advance_to(double t_target, Rng& rng, OnEvent&& on_event) {
    for (;;) {
      if (next_time_ < 0.0) draw_next_time(rng);
      if (absorbed_ || next_time_ > t_target) break;
      time_ = next_time_;
      next_time_ = -1.0;
      const JumpEvent ev = fire(rng);
      ++events_;
      on_event(ev);
    }
    time_ = std::max(time_, t_target);
  }

  void advance_to(double t_target, Rng& rng) {
    advance_to(t_target, rng, [](const JumpEvent&) {});
  }

 private:
  double bond_rate(std::size_t b0) const { return rate(model_.rate, x_[b0], x_[b0 + 1]); }

  void draw_next_time(Rng& rng) {
    const double total = total_rate();
    if (!(total > 0.0)) {
      absorbed_ = true;
      next_time_ = std::numeric_limits<double>::infinity();
      return;
    }
    next_time_ = time_ + sample_exponential(rng, total);
  }

  JumpEvent fire(Rng& rng) {
    const std::size_t n_bonds = x_.size() - 1;
    std::size_t b0;
    if (constant_) {
      b0 = std::min(n_bonds - 1, static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n_bonds)));
    } else {
      do {
        b0 = std::min(n_bonds - 1, tree_.find(uniform01(rng) * tree_.total()));
      } while (tree_.leaf(b0) <= 0.0);
    }
    const double beta = detail::left_fraction(x_[b0], x_[b0 + 1]);
    const double alpha = model_.kernel.sample(beta, rng);
    detail::exchange_in_place(x_, b0 + 1, alpha, quantum_);
    if (!constant_) {
      const std::size_t lo = b0 == 0 ? 0 : b0 - 1;
      const std::size_t hi = std::min(n_bonds - 1, b0 + 1);
      for (std::size_t b = lo; b <= hi; ++b) tree_.set(b, bond_rate(b));
    }
    return {time_, b0 + 1, alpha};
  }

  Model model_;
  std::vector<double> x_;
  double quantum_;
  bool constant_;
  double constant_total_ = 0.0;
  detail::RateTree tree_;
  double time_ = 0.0;
  double next_time_ = -1.0;
  std::size_t events_ = 0;
  bool absorbed_ = false;
};

namespace detail {
inline void check_sample_times(std::span<const double> sample_times, double horizon) {
  if (!(horizon >= 0.0)) throw std::invalid_argument("horizon must be >= 0");
  for (std::size_t i = 0; i < sample_times.size(); ++i) {
    if (sample_times[i] < 0.0 || sample_times[i] > horizon ||
        (i > 0 && sample_times[i] < sample_times[i - 1])) {
      throw std::invalid_argument("sample times must be sorted and lie in [0, horizon]");
    }
  }
}
}  // namespace detail

/// Evenly spaced grid 0, h, ..., horizon with `count` intervals.
inline std::vector<double> uniform_grid(double horizon, std::size_t count) {
  std::vector<double> t(count + 1);
  for (std::size_t i = 0; i <= count; ++i) {
    t[i] = horizon * static_cast<double>(i) / static_cast<double>(count);
  }
  return t;
}

inline Trajectory simulate_ct(const EnergyState& x0, const Model& model, double horizon,
                              std::span<const double> sample_times, Rng& rng,
                              SimulationOptions options = {}) {
  detail::check_sample_times(sample_times, horizon);
  Trajectory traj;
  traj.initial = snap_to_lattice(x0);
  ExchangeProcess process(model, traj.initial);
  auto log = [&](const JumpEvent& ev) {
    if (options.log_events) traj.events.push_back(ev);
  };
  for (double t : sample_times) {
    process.advance_to(t, rng, log);
    traj.samples.push_back({t, process.state()});
  }
  process.advance_to(horizon, rng, log);
  traj.event_count = process.event_count();
  if (process.absorbed()) {
    traj.absorbed = true;
    traj.absorbed_at = process.time();
  }
  return traj;
}

/// Re-applies a logged event stream to the initial state and returns the
/// states at the given times.
inline std::vector<EnergyState> replay(const Trajectory& traj, std::span<const double> times) {
  std::vector<double> x = traj.initial.vector();
  const double quantum = energy_quantum(traj.initial.total());
  std::vector<EnergyState> out;
  std::size_t next = 0;
  for (double t : times) {
    while (next < traj.events.size() && traj.events[next].time <= t) {
      detail::exchange_in_place(x, traj.events[next].bond, traj.events[next].alpha, quantum);
      ++next;
    }
    out.emplace_back(x);
  }
  return out;
}

/// One step of the embedded jump chain from snap_to_lattice(x0): uniform
/// bond, alpha from the kernel.
inline EnergyState step_embedded(const EnergyState& x0, const Model& model, Rng& rng) {
  if (!model.rate.is_constant()) {
    throw std::domain_error("embedded chain is defined for constant-rate models only");
  }
  const EnergyState x = snap_to_lattice(x0);
  const std::size_t n_bonds = x.n_sites() - 1;
  const std::size_t b0 =
      std::min(n_bonds - 1, static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n_bonds)));
  const double beta = detail::left_fraction(x[b0], x[b0 + 1]);
  const double alpha = model.kernel.sample(beta, rng);
  std::vector<double> out = x.vector();
  detail::exchange_in_place(out, b0 + 1, alpha, energy_quantum(x.total()));
  return EnergyState(std::move(out));
}

// ---------------------------------------------------------------------------
// Coupling

struct CoupledSample {
  double time = 0.0;
  double d2 = 0.0;  // squared contraction metric between the two copies
};

/// Two copies on one simplex driven by a shared event stream. The
/// u-difference is carried along incrementally: an event at bond i maps
/// w_i -> (1-alpha) w_{i-1} + alpha w_{i+1}.
class CoupledPair {
 public:
  /// Both copies start from their snap_to_lattice images.
  CoupledPair(Model model, const EnergyState& x0, const EnergyState& y0)
      : model_(std::move(model)),
        x_(snap_to_lattice(x0).vector()),
        y_(snap_to_lattice(y0).vector()),
        qx_(energy_quantum(x0.total())),
        qy_(energy_quantum(y0.total())) {
    if (!model_.is_reference()) {
      throw std::domain_error(
          "the synchronous coupling needs a constant rate and a state-independent kernel");
    }
    detail::check_same_simplex(x0, y0);
    w_.assign(x_.size() + 1, 0.0);
    double partial = 0.0;
    for (std::size_t i = 0; i + 1 < x_.size(); ++i) {
      partial += x_[i] - y_[i];
      w_[i + 1] = partial;
    }
    total_rate_ = model_.constant_rate() * static_cast<double>(x_.size() - 1);
  }

  double time() const { return time_; }
  EnergyState first() const { return EnergyState(x_); }
  EnergyState second() const { return EnergyState(y_); }

  double distance_squared() const {
    double acc = 0.0;
    for (std::size_t i = 1; i + 1 < w_.size(); ++i) acc += w_[i] * w_[i];
    return acc;
  }

  void advance_to(double t_target, Rng& rng) {
    for (;;) {
      if (next_time_ < 0.0) next_time_ = time_ + sample_exponential(rng, total_rate_);
      if (next_time_ > t_target) break;
      fire(rng);
    }
    time_ = std::max(time_, t_target);
  }

  /// Runs exactly one shared event and returns it.
  JumpEvent step(Rng& rng) {
    if (next_time_ < 0.0) next_time_ = time_ + sample_exponential(rng, total_rate_);
    return fire(rng);
  }

  std::size_t event_count() const { return events_; }

 private:
  JumpEvent fire(Rng& rng) {
    const std::size_t n_bonds = x_.size() - 1;
    time_ = next_time_;
    next_time_ = -1.0;
    const std::size_t b0 =
        std::min(n_bonds - 1, static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n_bonds)));
    const double alpha = model_.kernel.sample(0.5, rng);
    detail::exchange_in_place(x_, b0 + 1, alpha, qx_);
    detail::exchange_in_place(y_, b0 + 1, alpha, qy_);
    w_[b0 + 1] = (1.0 - alpha) * w_[b0] + alpha * w_[b0 + 2];
    ++events_;
    return {time_, b0 + 1, alpha};
  }

  Model model_;
  std::vector<double> x_, y_;
  double qx_, qy_;
  std::vector<double> w_;  // w_0 .. w_N, ends pinned at zero
  double total_rate_ = 0.0;
  double time_ = 0.0;
  double next_time_ = -1.0;
  std::size_t events_ = 0;
};

inline std::vector<CoupledSample> simulate_coupled(const EnergyState& x0, const EnergyState& y0,
                                                   const Model& model, double horizon,
                                                   std::span<const double> sample_times, Rng& rng) {
  detail::check_sample_times(sample_times, horizon);
  CoupledPair pair(model, x0, y0);
  std::vector<CoupledSample> out;
  out.reserve(sample_times.size());
  for (double t : sample_times) {
    pair.advance_to(t, rng);
    out.push_back({t, pair.distance_squared()});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Observables

struct Observable {
  std::string name;
  std::function<double(std::span<const double>)> fn;

  double operator()(std::span<const double> x) const { return fn(x); }
  double operator()(const EnergyState& x) const { return fn(x.energies()); }
};

/// A_k(x) = sum_i cos(pi k (i - 1/2) / N) x_i; k = 1 is the slowest profile.
inline Observable fourier_mode(std::size_t k, std::size_t n_sites) {
  std::vector<double> c(n_sites);
  for (std::size_t i = 0; i < n_sites; ++i) {
    c[i] = std::cos(std::numbers::pi * static_cast<double>(k) * (static_cast<double>(i) + 0.5) /
                    static_cast<double>(n_sites));
  }
  return {"fourier_" + std::to_string(k), [c](std::span<const double> x) {
            double acc = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i) acc += c[i] * x[i];
            return acc;
          }};
}

/// Named observables: "total", "x<i>", "u<i>" (1-based), "ratio<i>" (left
/// fraction on bond i), "fourier_<k>".
inline Observable observable_by_name(const std::string& name, std::size_t n_sites) {
  auto index_after = [&](std::size_t prefix) {
    const std::size_t i = std::stoul(name.substr(prefix));
    return i;
  };
  if (name == "total") {
    return {name, [](std::span<const double> x) { return exact_sum(x); }};
  }
  if (name.rfind("fourier_", 0) == 0) return fourier_mode(index_after(8), n_sites);
  if (name.rfind("ratio", 0) == 0) {
    const std::size_t b = index_after(5);
    if (b < 1 || b >= n_sites) throw std::invalid_argument("observable " + name + " out of range");
    return {name, [b](std::span<const double> x) { return detail::left_fraction(x[b - 1], x[b]); }};
  }
  if (name.rfind('x', 0) == 0) {
    const std::size_t i = index_after(1);
    if (i < 1 || i > n_sites) throw std::invalid_argument("observable " + name + " out of range");
    return {name, [i](std::span<const double> x) { return x[i - 1]; }};
  }
  if (name.rfind('u', 0) == 0) {
    const std::size_t i = index_after(1);
    if (i < 1 || i >= n_sites) throw std::invalid_argument("observable " + name + " out of range");
    return {name, [i](std::span<const double> x) {
              const double eps = exact_sum(x) / static_cast<double>(x.size());
              double partial = 0.0;
              for (std::size_t k = 0; k < i; ++k) partial += x[k];
              return partial - static_cast<double>(i) * eps;
            }};
  }
  throw std::invalid_argument("unknown observable '" + name + "'");
}

/// time x observable table.
struct SampleMatrix {
  std::vector<double> times;
  std::vector<std::string> names;
  std::vector<std::vector<double>> values;  // values[time][observable]
};

inline SampleMatrix record_observables(const Trajectory& traj,
                                       std::span<const Observable> observables) {
  SampleMatrix m;
  for (const auto& o : observables) m.names.push_back(o.name);
  for (const auto& s : traj.samples) {
    m.times.push_back(s.time);
    std::vector<double> row;
    row.reserve(observables.size());
    for (const auto& o : observables) row.push_back(o(s.state));
    m.values.push_back(std::move(row));
  }
  return m;
}

/// Long-format CSV rows: time,replica,observable,value.
inline void write_samples_csv(std::ostream& os, const SampleMatrix& m, std::size_t replica,
                              bool header = true) {
  if (header) os << "time,replica,observable,value\n";
  os.precision(17);
  for (std::size_t t = 0; t < m.times.size(); ++t) {
    for (std::size_t o = 0; o < m.names.size(); ++o) {
      os << m.times[t] << ',' << replica << ',' << m.names[o] << ',' << m.values[t][o] << '\n';
    }
  }
}

inline void write_events_csv(std::ostream& os, std::span<const JumpEvent> events) {
  os << "time,bond,alpha\n";
  os.precision(17);
  for (const auto& e : events) os << e.time << ',' << e.bond << ',' << e.alpha << '\n';
}

/// Observable paths for independent replicas: result[replica][time]. Each
/// replica draws its start from `initial` and runs on substream(seed, r).
inline std::vector<std::vector<double>> ensemble_observable(
    const Model& model, const std::function<EnergyState(Rng&)>& initial,
    const Observable& observable, std::span<const double> sample_times, std::size_t n_replicas,
    std::uint64_t seed, std::size_t threads) {
  std::vector<std::vector<double>> out(n_replicas);
  parallel_for(n_replicas, threads, [&](std::size_t r) {
    Rng rng = substream(seed, r);
    const EnergyState x0 = initial(rng);
    ExchangeProcess process(model, x0);
    auto& row = out[r];
    row.reserve(sample_times.size());
    for (double t : sample_times) {
      process.advance_to(t, rng);
      row.push_back(observable(process.energies()));
    }
  });
  return out;
}

}  // namespace exchange_lattice
