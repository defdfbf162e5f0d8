#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include "exchange_lattice/measures.hpp"
#include "exchange_lattice/simulator.hpp"
#include "exchange_lattice/spectral.hpp"

namespace el = exchange_lattice;

namespace {

el::Model uniform_model(double lambda = 1.0) {
  return el::reference_model(lambda, el::AlphaKernel::uniform());
}

el::Model beta3_model(double lambda = 1.0) {
  return el::reference_model(lambda, el::AlphaKernel::symmetric_beta(3.0));
}

el::Model billiard_model() { return el::gaspard_gilbert_model(el::SqrtCutoffSumRate{0.1}); }

double naive_sum(const el::EnergyState& x) {
  double s = 0.0;
  for (double e : x.energies()) s += e;
  return s;
}

}  // namespace

TEST(EmbeddedChain, TwoSiteRatioFollowsTheKernel) {
  const el::EnergyState x({0.4, 2.6});
  el::Rng rng = el::substream(11, 0);
  std::vector<double> ratios(100'000);
  for (auto& r : ratios) {
    const auto y = el::step_embedded(x, beta3_model(), rng);
    r = y[0] / y.total();
  }
  const double d = el::ks_statistic(ratios, [](double v) { return el::beta_cdf(1.5, 1.5, v); });
  EXPECT_LT(d, el::ks_critical_1pct(ratios.size()));
}

TEST(EmbeddedChain, PointMassSplitsEvenly) {
  el::Rng rng = el::substream(12, 0);
  const auto y = el::step_embedded(el::EnergyState({0.5, 3.5}),
                                   el::reference_model(1.0, el::AlphaKernel::point_half()), rng);
  EXPECT_EQ(y.vector(), (std::vector<double>{2.0, 2.0}));
}

TEST(EmbeddedChain, BondsAreChosenUniformly) {
  const std::size_t n = 11, steps = 1'000'000;
  el::Rng rng = el::substream(13, 0);
  std::vector<double> x(n, 1.0);
  std::vector<std::size_t> hits(n - 1, 0);
  const auto model = uniform_model();
  el::EnergyState state(x);
  for (std::size_t s = 0; s < steps; ++s) {
    const auto next = el::step_embedded(state, model, rng);
    std::size_t first = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (next[i] != state[i]) {
        first = i;
        break;
      }
    }
    // An unchanged state (alpha reproducing the old split) is too rare to matter.
    if (first < n) ++hits[std::min(first, n - 2)];
    state = next;
  }
  const double p = 0.1, sd = std::sqrt(steps * p * (1 - p));
  for (auto h : hits) EXPECT_LE(std::abs(static_cast<double>(h) - steps * p), 3 * sd);
}

TEST(EmbeddedChain, RejectsStateDependentRates) {
  el::Rng rng = el::substream(14, 0);
  EXPECT_THROW(el::step_embedded(el::EnergyState({1.0, 1.0}), billiard_model(), rng), std::domain_error);
}

TEST(ContinuousTime, EventCountsArePoisson) {
  struct Case {
    double lambda;
    std::size_t n;
    double horizon;
  };
  for (const Case c : {Case{1.0, 2, 1000.0}, Case{2.0, 5, 500.0}}) {
    el::Rng rng = el::substream(15, c.n);
    const auto traj = el::simulate_ct(el::EnergyState::uniform(c.n, 1.0), uniform_model(c.lambda),
                                      c.horizon, std::vector<double>{c.horizon}, rng);
    const double mean = c.lambda * static_cast<double>(c.n - 1) * c.horizon;
    EXPECT_LE(std::abs(static_cast<double>(traj.event_count) - mean), 3 * std::sqrt(mean));
  }
}

TEST(ContinuousTime, TotalEnergyIsExactlyConserved) {
  for (const auto& model : {beta3_model(), billiard_model(),
                            el::gaspard_gilbert_model(el::SqrtSumRate{})}) {
    el::Rng rng = el::substream(16, 0);
    const el::EnergyState x0({0.1, 0.3, 2.9, 0.0, 1.7, 0.2, 0.55});
    const auto traj = el::simulate_ct(x0, model, 200.0, el::uniform_grid(200.0, 400), rng);
    const double total = traj.initial.total();
    EXPECT_EQ(total, x0.total());
    EXPECT_GT(traj.event_count, 100u);
    for (const auto& s : traj.samples) {
      ASSERT_EQ(naive_sum(s.state), total);
      ASSERT_EQ(s.state.total(), total);
    }
  }
}

TEST(ContinuousTime, DeterministicUnderFixedSeed) {
  const el::EnergyState x0({1.0, 0.5, 2.0, 0.25});
  const auto times = el::uniform_grid(50.0, 20);
  el::Rng a = el::substream(17, 3), b = el::substream(17, 3);
  const auto ta = el::simulate_ct(x0, billiard_model(), 50.0, times, a, {true});
  const auto tb = el::simulate_ct(x0, billiard_model(), 50.0, times, b, {true});
  ASSERT_EQ(ta.events.size(), tb.events.size());
  for (std::size_t i = 0; i < ta.events.size(); ++i) {
    EXPECT_EQ(ta.events[i].time, tb.events[i].time);
    EXPECT_EQ(ta.events[i].bond, tb.events[i].bond);
    EXPECT_EQ(ta.events[i].alpha, tb.events[i].alpha);
  }
  for (std::size_t i = 0; i < ta.samples.size(); ++i) EXPECT_EQ(ta.samples[i].state, tb.samples[i].state);
}

TEST(ContinuousTime, PathDoesNotDependOnTheSampleGrid) {
  const el::EnergyState x0({1.0, 0.5, 2.0, 0.25});
  el::Rng a = el::substream(18, 0), b = el::substream(18, 0);
  const auto coarse = el::simulate_ct(x0, beta3_model(), 30.0, std::vector<double>{30.0}, a);
  const auto fine = el::simulate_ct(x0, beta3_model(), 30.0, el::uniform_grid(30.0, 300), b);
  EXPECT_EQ(coarse.samples.back().state, fine.samples.back().state);
  EXPECT_EQ(coarse.event_count, fine.event_count);
}

TEST(ContinuousTime, ReplayReproducesSamples) {
  const el::EnergyState x0({0.3, 1.1, 0.0, 2.6, 0.9});
  const auto times = el::uniform_grid(40.0, 40);
  el::Rng rng = el::substream(19, 0);
  const auto traj = el::simulate_ct(x0, billiard_model(), 40.0, times, rng, {true});
  EXPECT_TRUE(std::is_sorted(traj.events.begin(), traj.events.end(),
                             [](const auto& l, const auto& r) { return l.time <= r.time; }));
  const auto states = el::replay(traj, times);
  for (std::size_t i = 0; i < times.size(); ++i) EXPECT_EQ(states[i], traj.samples[i].state);
}

TEST(ContinuousTime, RejectsBadSampleTimes) {
  el::Rng rng = el::substream(20, 0);
  const auto x0 = el::EnergyState::uniform(3, 1.0);
  EXPECT_THROW(el::simulate_ct(x0, uniform_model(), 1.0, std::vector<double>{0.5, 0.2}, rng),
               std::invalid_argument);
  EXPECT_THROW(el::simulate_ct(x0, uniform_model(), 1.0, std::vector<double>{2.0}, rng),
               std::invalid_argument);
}

TEST(ContinuousTime, UnflooredRateFromConcentratedState) {
  el::Rng rng = el::substream(21, 0);
  const el::EnergyState x0({0.0, 0.0, 0.0, 4.0});
  const auto traj = el::simulate_ct(x0, el::gaspard_gilbert_model(el::SqrtSumRate{}), 20.0,
                                    std::vector<double>{20.0}, rng);
  EXPECT_FALSE(traj.absorbed);
  EXPECT_GT(traj.event_count, 0u);
}

TEST(ContinuousTime, AgreesWithEmbeddedChainGivenEventCount) {
  // State after exactly k events of the continuous-time chain versus k steps
  // of the embedded chain: compare the first two moments of x_1 and x_3.
  const el::EnergyState x0({3.0, 0.0, 1.0, 0.0});
  const std::size_t k = 5, reps = 100'000;
  const auto model = uniform_model(1.7);
  std::vector<double> ct1(reps), ct3(reps), em1(reps), em3(reps);
  for (std::size_t r = 0; r < reps; ++r) {
    el::Rng rng = el::substream(22, r);
    el::ExchangeProcess p(model, x0);
    std::size_t seen = 0;
    std::vector<double> snap;
    double t = 0.0;
    while (seen < k) {
      t += 0.05;
      p.advance_to(t, rng, [&](const el::JumpEvent&) {
        if (++seen == k) snap.assign(p.energies().begin(), p.energies().end());
      });
    }
    ct1[r] = snap[0];
    ct3[r] = snap[2];
    el::Rng rng2 = el::substream(23, r);
    el::EnergyState y = x0;
    for (std::size_t s = 0; s < k; ++s) y = el::step_embedded(y, model, rng2);
    em1[r] = y[0];
    em3[r] = y[2];
  }
  for (int power = 1; power <= 2; ++power) {
    for (auto [a, b] : {std::pair{&ct1, &em1}, std::pair{&ct3, &em3}}) {
      const auto ma = el::raw_moment(*a, power), mb = el::raw_moment(*b, power);
      EXPECT_LE(std::abs(ma.mean - mb.mean), 3 * std::hypot(ma.std_error, mb.std_error));
    }
  }
}

TEST(Ensemble, ThreadCountDoesNotChangeResults) {
  const el::MicrocanonicalSpec spec{3.0, 1.0, 6};
  const auto times = el::uniform_grid(10.0, 10);
  auto run = [&](std::size_t threads) {
    return el::ensemble_observable(
        billiard_model(), [&](el::Rng& rng) { return el::sample_microcanonical(spec, rng); },
        el::fourier_mode(1, 6), times, 64, 99, threads);
  };
  EXPECT_EQ(run(1), run(4));
}

TEST(Coupling, EqualStartsStayEqual) {
  const el::EnergyState x0({0.2, 1.3, 2.5});
  el::Rng rng = el::substream(24, 0);
  for (const auto& s : el::simulate_coupled(x0, x0, uniform_model(), 50.0, el::uniform_grid(50.0, 50), rng)) {
    EXPECT_EQ(s.d2, 0.0);
  }
}

TEST(Coupling, TwoSitesCollapseAfterOneEvent) {
  for (const auto& kernel : {el::AlphaKernel::uniform(), el::AlphaKernel::symmetric_beta(3.0),
                             el::AlphaKernel::point_half()}) {
    const auto model = el::reference_model(1.0, kernel);
    for (std::size_t r = 0; r < 1000; ++r) {
      el::Rng rng = el::substream(25, r);
      const double a = el::uniform01(rng) * 2.0;
      el::CoupledPair pair(model, el::EnergyState({a, 2.0 - a}), el::EnergyState({2.0, 0.0}));
      pair.step(rng);
      ASSERT_EQ(pair.distance_squared(), 0.0);
      ASSERT_EQ(pair.first(), pair.second());
    }
  }
}

TEST(Coupling, IncrementalDistanceMatchesMetric) {
  el::Rng rng = el::substream(26, 0);
  const auto [x0, y0] = el::extreme_pair(9, 1.0);
  el::CoupledPair pair(beta3_model(), x0, y0);
  EXPECT_EQ(pair.distance_squared(), el::metric_squared(x0, y0));
  for (int i = 1; i <= 50; ++i) {
    pair.advance_to(i * 0.5, rng);
    const double direct = el::metric_squared(pair.first(), pair.second());
    EXPECT_NEAR(pair.distance_squared(), direct, 1e-9 * std::max(1.0, direct));
  }
}

TEST(Coupling, RejectsUnsupportedInputs) {
  const auto x = el::EnergyState::uniform(3, 1.0);
  EXPECT_THROW(el::CoupledPair(billiard_model(), x, x), std::domain_error);
  EXPECT_THROW(el::CoupledPair(uniform_model(), x, el::EnergyState::uniform(3, 2.0)),
               std::invalid_argument);
}

TEST(Coupling, FourSiteDecayRate) {
  el::EstimatorConfig cfg;
  cfg.n_replicas = 10'000;
  cfg.n_samples = 40;
  cfg.seed = 27;
  const auto [x0, y0] = el::extreme_pair(4, 1.0);
  const auto decay = el::estimate_coupling_decay(uniform_model(), x0, y0, 25.0, cfg);
  EXPECT_GE(decay.rate, 0.95 * (2.0 / 3.0) * 0.25);
}

TEST(Coupling, LogMeanSlopeBeatsTheBound) {
  for (std::size_t n : {4, 8, 16}) {
    const double bound = 2.0 * el::contraction_rate_bound(1.0, 1.0 / 12.0, n);
    el::EstimatorConfig cfg;
    cfg.n_replicas = 2000;
    cfg.n_samples = 30;
    cfg.seed = 28 + n;
    const auto [x0, y0] = el::extreme_pair(n, 1.0);
    const auto decay = el::estimate_coupling_decay(uniform_model(), x0, y0, 5.0 / bound, cfg);
    EXPECT_LE(-decay.rate, -bound + 3 * decay.rate_std_error) << n;
  }
}

TEST(Observables, HandValues) {
  const el::EnergyState x({2.0, 1.0, 3.0});
  EXPECT_NEAR(el::fourier_mode(1, 3)(x), -std::sqrt(3.0) / 2.0, 1e-14);
  EXPECT_NEAR(el::observable_by_name("fourier_1", 3)(x), -0.86603, 1e-5);
  EXPECT_EQ(el::observable_by_name("x3", 3)(x), 3.0);
  EXPECT_EQ(el::observable_by_name("u2", 3)(x), -1.0);
  EXPECT_EQ(el::observable_by_name("ratio1", 3)(x), 2.0 / 3.0);
  EXPECT_EQ(el::observable_by_name("total", 3)(x), 6.0);
  EXPECT_THROW(el::observable_by_name("x4", 3), std::invalid_argument);
  EXPECT_THROW(el::observable_by_name("u3", 3), std::invalid_argument);
  EXPECT_THROW(el::observable_by_name("energy", 3), std::invalid_argument);
}

TEST(Observables, RecordedAlongTrajectory) {
  el::Rng rng = el::substream(29, 0);
  const auto traj = el::simulate_ct(el::EnergyState::uniform(5, 1.0), beta3_model(), 10.0,
                                    el::uniform_grid(10.0, 20), rng);
  const std::vector<el::Observable> obs{el::observable_by_name("total", 5),
                                        el::observable_by_name("u1", 5)};
  const auto m = el::record_observables(traj, obs);
  ASSERT_EQ(m.times.size(), 21u);
  EXPECT_EQ(m.values[0][1], 0.0);
  for (const auto& row : m.values) EXPECT_EQ(row[0], 5.0);

  std::ostringstream os;
  el::write_samples_csv(os, m, 7);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "time,replica,observable,value");
  std::getline(is, line);
  EXPECT_EQ(line, "0,7,total,5");
}

TEST(Observables, EventLogCsv) {
  std::ostringstream os;
  const std::vector<el::JumpEvent> ev{{0.5, 2, 0.25}};
  el::write_events_csv(os, ev);
  EXPECT_EQ(os.str(), "time,bond,alpha\n0.5,2,0.25\n");
}
