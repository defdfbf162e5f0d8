#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "exchange_lattice/random.hpp"
#include "exchange_lattice/state_space.hpp"

namespace el = exchange_lattice;

namespace {

el::EnergyState random_state(el::Rng& rng, std::size_t n, double scale = 3.0) {
  std::vector<double> x(n);
  for (auto& e : x) e = scale * el::uniform01(rng);
  x[0] += 1e-3;  // keep the total positive
  return el::EnergyState(std::move(x));
}

void expect_near_rel(double a, double b, double rel) {
  EXPECT_LE(std::abs(a - b), rel * std::max({1.0, std::abs(a), std::abs(b)})) << a << " vs " << b;
}

}  // namespace

TEST(EnergyState, RejectsInvalidConfigurations) {
  EXPECT_THROW(el::EnergyState({1.0}), std::invalid_argument);
  EXPECT_THROW(el::EnergyState({1.0, -0.5}), std::invalid_argument);
  EXPECT_THROW(el::EnergyState({0.0, 0.0}), std::invalid_argument);
  EXPECT_THROW(el::EnergyState({1.0, NAN}), std::invalid_argument);
  EXPECT_THROW(el::EnergyState({1.0, INFINITY}), std::invalid_argument);
  EXPECT_NO_THROW(el::EnergyState({0.0, 2.0}));
}

TEST(EnergyState, MeanEnergy) {
  const el::EnergyState x({2.0, 1.0, 3.0});
  EXPECT_EQ(x.n_sites(), 3u);
  EXPECT_EQ(x.total(), 6.0);
  EXPECT_EQ(x.mean_energy(), 2.0);
  EXPECT_EQ(el::EnergyState::uniform(5, 0.5).total(), 2.5);
}

TEST(ExactSum, IsOrderIndependent) {
  std::vector<double> v{1e16, 1.0, -1e16, 3.0, 1e-8};
  EXPECT_EQ(el::exact_sum(v), 4.00000001);
  el::Rng rng = el::substream(1, 0);
  std::vector<double> w(200);
  for (auto& e : w) e = std::ldexp(el::uniform01(rng), static_cast<int>(el::uniform01(rng) * 60) - 30);
  const double forward = el::exact_sum(w);
  std::reverse(w.begin(), w.end());
  EXPECT_EQ(el::exact_sum(w), forward);
}

TEST(ApplyExchange, HalfSplit) {
  const auto y = el::apply_exchange(el::EnergyState({1.0, 3.0}), {1, 0.5});
  EXPECT_EQ(y.vector(), (std::vector<double>{2.0, 2.0}));
}

TEST(ApplyExchange, FixedPointWhenAlphaMatchesRatio) {
  const auto y = el::apply_exchange(el::EnergyState({1.0, 3.0}), {1, 0.25});
  EXPECT_EQ(y.vector(), (std::vector<double>{1.0, 3.0}));
}

TEST(ApplyExchange, AlphaOnePushesPairLeft) {
  const double a = 0.75, b = 1.5, c = 2.25;
  const auto y = el::apply_exchange(el::EnergyState({a, b, c}), {2, 1.0});
  EXPECT_EQ(y.vector(), (std::vector<double>{a, b + c, 0.0}));
}

TEST(ApplyExchange, OnlyTouchesTheBond) {
  el::Rng rng = el::substream(2, 0);
  for (int rep = 0; rep < 200; ++rep) {
    const auto x = el::snap_to_lattice(random_state(rng, 7));
    const std::size_t bond = 1 + static_cast<std::size_t>(el::uniform01(rng) * 6);
    const auto y = el::apply_exchange(x, {bond, el::uniform01(rng)});
    for (std::size_t i = 0; i < 7; ++i) {
      if (i != bond - 1 && i != bond) {
        EXPECT_EQ(y[i], x[i]);
      }
    }
    EXPECT_EQ(y[bond - 1] + y[bond], x[bond - 1] + x[bond]);
  }
}

TEST(ApplyExchange, RejectsBadMoves) {
  const el::EnergyState x({1.0, 2.0, 3.0});
  EXPECT_THROW(el::apply_exchange(x, {0, 0.5}), std::out_of_range);
  EXPECT_THROW(el::apply_exchange(x, {3, 0.5}), std::out_of_range);
  EXPECT_THROW(el::apply_exchange(x, {1, -0.1}), std::invalid_argument);
  EXPECT_THROW(el::apply_exchange(x, {1, 1.5}), std::invalid_argument);
  EXPECT_THROW(el::apply_exchange(x, {1, NAN}), std::invalid_argument);
}

TEST(Lattice, SnapKeepsTotalAndIsIdempotent) {
  el::Rng rng = el::substream(3, 0);
  for (int rep = 0; rep < 500; ++rep) {
    const auto x = random_state(rng, 2 + rep % 40);
    const auto y = el::snap_to_lattice(x);
    EXPECT_EQ(y.total(), x.total());
    EXPECT_EQ(el::snap_to_lattice(y), y);
    const double q = el::energy_quantum(x.total());
    for (std::size_t i = 0; i < x.n_sites(); ++i) {
      EXPECT_EQ(std::fmod(y[i], q), 0.0);
      EXPECT_LE(std::abs(y[i] - x[i]), x.n_sites() * q);
    }
  }
}

TEST(Lattice, QuantumIsUnitInLastPlaceOfTotal) {
  EXPECT_EQ(el::energy_quantum(1.0), std::nextafter(1.0, 2.0) - 1.0);
  EXPECT_EQ(el::energy_quantum(6.0), std::nextafter(6.0, 7.0) - 6.0);
  EXPECT_THROW(el::energy_quantum(0.0), std::invalid_argument);
}

TEST(Conservation, TotalIsBitwiseConstantUnderMoveSequences) {
  el::Rng rng = el::substream(4, 0);
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t n = 2 + rep % 30;
    auto x = random_state(rng, n);
    const double total = x.total();
    for (int step = 0; step < 2000; ++step) {
      const std::size_t bond = 1 + std::min(n - 2, static_cast<std::size_t>(el::uniform01(rng) * (n - 1)));
      x = el::apply_exchange(x, {bond, el::uniform01(rng)});
      double naive = 0.0;
      for (double e : x.energies()) naive += e;
      ASSERT_EQ(naive, total);
      ASSERT_EQ(x.total(), total);
    }
  }
}

TEST(UCoords, UniformProfileIsZero) {
  const auto c = el::to_u(el::EnergyState::uniform(3, 1.7));
  EXPECT_EQ(c.u, (std::vector<double>{0.0, 0.0}));
  EXPECT_EQ(c.epsilon, 1.7);
}

TEST(UCoords, HandExamples) {
  const auto c = el::to_u(el::EnergyState({2.0, 1.0, 3.0}));
  EXPECT_EQ(c.epsilon, 2.0);
  EXPECT_EQ(c.u, (std::vector<double>{0.0, -1.0}));
  const auto d = el::to_u(el::EnergyState({4.0, 0.0}));
  EXPECT_EQ(d.epsilon, 2.0);
  EXPECT_EQ(d.u, (std::vector<double>{2.0}));
}

TEST(UCoords, InverseExamples) {
  EXPECT_EQ(el::from_u({{0.0, 0.0, 0.0}, 1.0, 4}).vector(), (std::vector<double>{1, 1, 1, 1}));
  EXPECT_EQ(el::from_u({{0.0, -1.0}, 2.0, 3}).vector(), (std::vector<double>{2, 1, 3}));
  EXPECT_EQ(el::from_u({{2.0}, 2.0, 2}).vector(), (std::vector<double>{4, 0}));
}

TEST(UCoords, FromURejectsPointsOffTheSimplex) {
  EXPECT_THROW(el::from_u({{2.5}, 2.0, 2}), std::invalid_argument);
  EXPECT_THROW(el::from_u({{0.0, -2.5}, 2.0, 3}), std::invalid_argument);
  EXPECT_THROW(el::from_u({{0.0}, 2.0, 3}), std::invalid_argument);
}

TEST(UCoords, StayWithinSimplexBounds) {
  el::Rng rng = el::substream(5, 0);
  for (int rep = 0; rep < 1000; ++rep) {
    const auto c = el::to_u(random_state(rng, 2 + rep % 20));
    for (std::size_t i = 1; i < c.n_sites; ++i) {
      const double tol = 1e-12 * c.epsilon * c.n_sites;
      EXPECT_GE(c.u[i - 1], -static_cast<double>(i) * c.epsilon - tol);
      EXPECT_LE(c.u[i - 1], static_cast<double>(c.n_sites - i) * c.epsilon + tol);
    }
  }
}

TEST(UCoords, RoundTrip) {
  el::Rng rng = el::substream(6, 0);
  for (int rep = 0; rep < 10'000; ++rep) {
    const std::size_t n = 2 + static_cast<std::size_t>(el::uniform01(rng) * 63);
    const auto x = random_state(rng, n);
    const auto y = el::from_u(el::to_u(x));
    ASSERT_EQ(y.n_sites(), n);
    for (std::size_t i = 0; i < n; ++i) {
      ASSERT_LE(std::abs(y[i] - x[i]), 1e-12 * std::max(x[i], x.mean_energy()));
    }
  }
}

TEST(UCoords, ExchangeIsLocalAveraging) {
  el::Rng rng = el::substream(7, 0);
  for (int rep = 0; rep < 2000; ++rep) {
    const std::size_t n = 2 + rep % 15;
    const auto x = el::snap_to_lattice(random_state(rng, n));
    const std::size_t bond = 1 + std::min(n - 2, static_cast<std::size_t>(el::uniform01(rng) * (n - 1)));
    const double alpha = el::uniform01(rng);
    const auto before = el::to_u(x);
    const auto after = el::to_u(el::apply_exchange(x, {bond, alpha}));
    auto u = [&](const el::UCoords& c, std::size_t i) { return i == 0 || i == n ? 0.0 : c.u[i - 1]; };
    const double eps = before.epsilon;
    for (std::size_t i = 1; i < n; ++i) {
      if (i == bond) {
        const double expected = (1 - alpha) * u(before, i - 1) + alpha * u(before, i + 1) + (2 * alpha - 1) * eps;
        expect_near_rel(u(after, i), expected, 1e-12 * n);
      } else {
        expect_near_rel(u(after, i), u(before, i), 1e-12 * n);
      }
    }
  }
}

TEST(Metric, HandExamples) {
  const el::EnergyState x({4.0, 0.0}), y({0.0, 4.0});
  EXPECT_EQ(el::metric(x, x), 0.0);
  EXPECT_EQ(el::metric(x, y), 4.0);
}

TEST(Metric, SymmetricAndZeroOnlyOnEqualStates) {
  el::Rng rng = el::substream(8, 0);
  for (int rep = 0; rep < 1000; ++rep) {
    const std::size_t n = 2 + rep % 10;
    const auto x = random_state(rng, n);
    std::vector<double> perm = x.vector();
    std::rotate(perm.begin(), perm.begin() + 1, perm.end());
    const el::EnergyState y(perm);
    EXPECT_EQ(el::metric(x, y), el::metric(y, x));
    if (!(x == y)) {
      EXPECT_GT(el::metric(x, y), 0.0);
    }
  }
}

TEST(Metric, RejectsDifferentSimplices) {
  EXPECT_THROW(el::metric(el::EnergyState({1.0, 1.0}), el::EnergyState({1.0, 2.0})), std::invalid_argument);
  EXPECT_THROW(el::metric(el::EnergyState({1.0, 1.0}), el::EnergyState({1.0, 0.5, 0.5})),
               std::invalid_argument);
}

TEST(Diameter, Examples) {
  EXPECT_EQ(el::diameter_bound(1.0, 2), 2.0);
  EXPECT_EQ(el::metric(el::EnergyState({2.0, 0.0}), el::EnergyState({0.0, 2.0})), 2.0);
  EXPECT_EQ(el::diameter_bound(2.0, 5), 20.0);
  EXPECT_EQ(el::diameter_bound(2.6, 7), 2.0 * el::diameter_bound(1.3, 7));
  EXPECT_THROW(el::diameter_bound(0.0, 3), std::invalid_argument);
  EXPECT_THROW(el::diameter_bound(1.0, 1), std::invalid_argument);
}

TEST(Diameter, DominatesSampledDistances) {
  el::Rng rng = el::substream(9, 0);
  for (int rep = 0; rep < 2000; ++rep) {
    const std::size_t n = 2 + rep % 20;
    const auto x = random_state(rng, n);
    std::vector<double> v(n);
    for (auto& e : v) e = el::uniform01(rng) + 1e-3;
    const double scale = x.total() / el::exact_sum(v);
    for (auto& e : v) e *= scale;
    std::vector<double> corner(n, 0.0);
    corner[rep % n] = x.total();
    const el::EnergyState y(v), z(corner);
    const double bound = el::diameter_bound(x.mean_energy(), n) * (1 + 1e-12);
    EXPECT_LE(el::metric(x, y), bound);
    EXPECT_LE(el::metric(x, z), bound);
  }
}

TEST(Serialization, CsvAndJsonRoundTrip) {
  const el::EnergyState x({0.1, 2.5, 1e-300, 3.0});
  EXPECT_EQ(el::from_csv_row(el::to_csv_row(x)), x);
  nlohmann::json j = x;
  EXPECT_TRUE(j.is_array());
  EXPECT_EQ(j.get<el::EnergyState>(), x);
  EXPECT_THROW(el::from_csv_row("1.0,-2.0"), std::invalid_argument);
}
