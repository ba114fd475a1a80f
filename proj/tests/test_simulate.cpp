// Copyright 2026 The tauleap Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <cstdint>
#include <vector>

#include <boost/math/distributions/binomial.hpp>
#include <gtest/gtest.h>

#include "tauleap/model.hpp"
#include "tauleap/path.hpp"
#include "tauleap/simulate.hpp"
#include "tauleap/stats.hpp"

namespace tauleap {
namespace {

const ReactionNetwork& pure_death() {
  static const auto net = parse_network("species A\nreaction 1 : A ->");
  return net;
}

double terminal(const Path& p) { return p.at(p.horizon())[0]; }

TEST(Grid, LeapTimesTruncateLastStep) {
  GridSpec g{1.0, 0.3, {}};
  const auto t = g.leap_times();
  ASSERT_EQ(t.size(), 5u);
  EXPECT_DOUBLE_EQ(t[3], 0.9);
  EXPECT_DOUBLE_EQ(t.back(), 1.0);
  GridSpec exact{1.0, 0.05, {}};
  EXPECT_EQ(exact.leap_times().size(), 21u);
  GridSpec coarse{1.0, 5.0, {}};
  EXPECT_EQ(coarse.leap_times(), (std::vector<double>{0.0, 1.0}));
}

TEST(PathTest, RightContinuousLookup) {
  Path p(1, 2.0);
  const double a[] = {5.0}, b[] = {4.0};
  p.push(0.0, a);
  p.push(1.0, b);
  EXPECT_EQ(p.at(0.0)[0], 5.0);
  EXPECT_EQ(p.at(0.999)[0], 5.0);
  EXPECT_EQ(p.at(1.0)[0], 4.0);
  EXPECT_EQ(p.at(2.0)[0], 4.0);
  EXPECT_THROW(p.at(2.5), std::out_of_range);
  EXPECT_THROW(p.push(0.5, a), std::invalid_argument);
  EXPECT_EQ(p.normalize(2.0).at(1.5)[0], 2.0);
}

TEST(Ssa, PureDeathIsBinomial) {
  const double V = 100.0;
  const auto s = ScalingSpec::make(pure_death(), V, 0.5);
  const std::vector<std::int64_t> x0{100};
  std::vector<std::int64_t> xs(20000);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    Stream st(StreamKey{1, i, channels::kSsa});
    xs[i] = static_cast<std::int64_t>(terminal(ssa_path(pure_death(), x0, 1.0, s, st)));
  }
  boost::math::binomial_distribution<double> law(100, std::exp(-1.0));
  const auto r = chi_square_gof(
      xs, [&](std::int64_t k) { return (k < 0 || k > 100) ? 0.0 : boost::math::pdf(law, static_cast<double>(k)); },
      0, 100);
  EXPECT_GT(r.p_value, 1e-3) << r.statistic;
}

TEST(Ssa, AbsorbedStateIsConstant) {
  const auto s = ScalingSpec::make(pure_death(), 10.0, 0.5);
  const std::vector<std::int64_t> x0{0};
  Stream st(StreamKey{2, 0, 0});
  const auto p = ssa_path(pure_death(), x0, 5.0, s, st);
  EXPECT_EQ(p.size(), 1u);
  EXPECT_EQ(terminal(p), 0.0);
}

TEST(Ssa, ConservesIsomerizationTotal) {
  const auto iso = parse_network("species A B\nreaction 1 : A -> B\nreaction 0.5 : B -> A");
  const auto s = ScalingSpec::make(iso, 500.0, 0.5);
  const std::vector<std::int64_t> x0{300, 200};
  const GridSpec grid = GridSpec::on_leap_grid(2.0, 0.1);
  for (std::size_t i = 0; i < 20; ++i) {
    Stream a(StreamKey{3, i, channels::kSsa}), b(StreamKey{3, i, channels::kEuler}),
        c(StreamKey{3, i, channels::kMidpoint});
    for (const Path& p : {ssa_path(iso, x0, 2.0, s, a), euler_tau_path(iso, x0, grid, s, b),
                          midpoint_tau_path(iso, x0, grid, s, c)}) {
      for (std::size_t k = 0; k < p.size(); ++k) ASSERT_EQ(p.state(k)[0] + p.state(k)[1], 500.0);
    }
  }
}

TEST(Ssa, Deterministic) {
  const auto s = ScalingSpec::make(pure_death(), 1000.0, 0.5);
  const std::vector<std::int64_t> x0{1000};
  Stream a(StreamKey{4, 9, channels::kSsa}), b(StreamKey{4, 9, channels::kSsa});
  const auto p = ssa_path(pure_death(), x0, 1.0, s, a);
  const auto q = ssa_path(pure_death(), x0, 1.0, s, b);
  EXPECT_EQ(p.times(), q.times());
}

TEST(TauLeap, SingleEulerStepIsOnePoissonUpdate) {
  const auto s = ScalingSpec::make(pure_death(), 1000.0, 0.5);
  const std::vector<std::int64_t> x0{1000};
  const GridSpec grid{0.1, 1.0, {}};
  RunningStats st;
  constexpr int n = 20000;
  for (int i = 0; i < n; ++i) {
    Stream r(StreamKey{5, static_cast<std::uint64_t>(i), channels::kEuler});
    const auto p = euler_tau_path(pure_death(), x0, grid, s, r);
    ASSERT_LE(p.size(), 2u);
    st.add(terminal(p));
  }
  // Z = 1000 - Poisson(100).
  EXPECT_NEAR(st.mean(), 900.0, 4.0 * 10.0 / std::sqrt(n));
  EXPECT_NEAR(st.variance(), 100.0, 4.0 * 100.0 * std::sqrt(2.0 / n));
}

TEST(TauLeap, SingleMidpointStepUsesPredictor) {
  const auto s = ScalingSpec::make(pure_death(), 1000.0, 0.5);
  const std::vector<std::int64_t> x0{1000};
  const GridSpec grid{0.1, 0.1, {}};
  RunningStats st;
  constexpr int n = 20000;
  for (int i = 0; i < n; ++i) {
    Stream r(StreamKey{6, static_cast<std::uint64_t>(i), channels::kMidpoint});
    st.add(terminal(midpoint_tau_path(pure_death(), x0, grid, s, r)));
  }
  // rho = 1000 (1 - 0.05) = 950, so Z = 1000 - Poisson(95).
  EXPECT_NEAR(st.mean(), 905.0, 4.0 * std::sqrt(95.0 / n));
  EXPECT_NEAR(st.variance(), 95.0, 4.0 * 95.0 * std::sqrt(2.0 / n));
}

TEST(TauLeap, EulerAndMidpointMeansMatchRecursions) {
  // For pure death, E Z_{n+1} = (1 - h) E Z_n and E Z_{n+1} = (1 - h + h^2/2) E Z_n.
  const double V = 10000.0, h = 1.0 / 20.0;
  const auto s = ScalingSpec::from_step(pure_death(), V, h);
  const std::vector<std::int64_t> x0{10000};
  const GridSpec grid = GridSpec::on_leap_grid(1.0, h);
  RunningStats e, m;
  constexpr int n = 20000;
  for (int i = 0; i < n; ++i) {
    Stream a(StreamKey{7, static_cast<std::uint64_t>(i), channels::kEuler});
    Stream b(StreamKey{7, static_cast<std::uint64_t>(i), channels::kMidpoint});
    e.add(terminal(euler_tau_path(pure_death(), x0, grid, s, a)));
    m.add(terminal(midpoint_tau_path(pure_death(), x0, grid, s, b)));
  }
  EXPECT_NEAR(e.mean(), V * std::pow(1.0 - h, 20), 4.0 * e.std_error());
  EXPECT_NEAR(m.mean(), V * std::pow(1.0 - h + h * h / 2.0, 20), 4.0 * m.std_error());
}

TEST(TauLeap, NegativeCountsSwitchIntensitiesOff) {
  // A huge step overshoots below zero; the path must then stay frozen.
  const auto s = ScalingSpec::make(pure_death(), 10.0, 0.5);
  const std::vector<std::int64_t> x0{5};
  const GridSpec grid = GridSpec::on_leap_grid(20.0, 2.0);
  bool saw_negative = false;
  for (std::uint64_t i = 0; i < 200; ++i) {
    Stream r(StreamKey{8, i, channels::kEuler});
    const auto p = euler_tau_path(pure_death(), x0, grid, s, r);
    for (std::size_t k = 0; k + 1 < p.size(); ++k) {
      if (p.state(k)[0] <= 0.0) {
        saw_negative |= p.state(k)[0] < 0.0;
        EXPECT_EQ(p.state(k + 1)[0], p.state(k)[0]);
      }
    }
  }
  EXPECT_TRUE(saw_negative);
}

TEST(TauLeap, SnapshotRecorderAgreesWithPath) {
  const auto lv = parse_network("species A B\nreaction 2 : A -> A A\nreaction 0.002 : A B -> B B\nreaction 2 : B ->");
  const auto s = ScalingSpec::from_step(lv, 1000.0, 0.05);
  const std::vector<std::int64_t> x0{1000, 1000};
  const GridSpec grid = GridSpec::on_leap_grid(3.0, 0.05);
  const std::vector<double> times{0.0, 0.33, 1.0, 2.5, 3.0};
  Stream a(StreamKey{9, 0, channels::kMidpoint}), b(StreamKey{9, 0, channels::kMidpoint});
  const auto p = midpoint_tau_path(lv, x0, grid, s, a);
  SnapshotRecorder rec(times, 2);
  run_tau_leap(lv, x0, 3.0, 0.05, LeapMethod::kMidpoint, b, rec);
  for (std::size_t i = 0; i < times.size(); ++i) {
    EXPECT_EQ(rec.at(i)[0], p.at(times[i])[0]);
    EXPECT_EQ(rec.at(i)[1], p.at(times[i])[1]);
  }
  Stream c(StreamKey{9, 1, channels::kSsa}), d(StreamKey{9, 1, channels::kSsa});
  const auto q = ssa_path(lv, x0, 3.0, s, c);
  SnapshotRecorder rq(times, 2);
  run_ssa(lv, x0, 3.0, d, rq);
  for (std::size_t i = 0; i < times.size(); ++i) EXPECT_EQ(rq.at(i)[1], q.at(times[i])[1]);
}

TEST(Ode, PureDeathMatchesExponential) {
  const auto s = ScalingSpec::make(pure_death(), 1.0, 0.5);
  Vector x0(1);
  x0 << 1.0;
  const auto traj = ode_limit(pure_death(), x0, 1.0, 1e-3, s);
  EXPECT_NEAR(traj.at(1.0)[0], std::exp(-1.0), 1e-10);
  // Hermite interpolation between knots.
  EXPECT_NEAR(traj.at(0.3337)[0], std::exp(-0.3337), 1e-10);
  EXPECT_THROW(traj.at(1.5), std::out_of_range);
}

TEST(Ode, Rk4IsFourthOrder) {
  const auto s = ScalingSpec::make(pure_death(), 1.0, 0.5);
  Vector x0(1);
  x0 << 1.0;
  const double e1 = std::fabs(ode_limit(pure_death(), x0, 1.0, 0.1, s).at(1.0)[0] - std::exp(-1.0));
  const double e2 = std::fabs(ode_limit(pure_death(), x0, 1.0, 0.05, s).at(1.0)[0] - std::exp(-1.0));
  EXPECT_NEAR(e1 / e2, 16.0, 1.0);
}

TEST(Ode, LotkaVolterraEquilibrium) {
  const auto lv = parse_network("species A B\nreaction 2 : A -> A A\nreaction 2 : A B -> B B\nreaction 2 : B ->");
  const auto s = ScalingSpec::make(lv, 1.0, 0.5);
  Vector x0 = Vector::Ones(2);
  const auto traj = ode_limit(lv, x0, 10.0, 0.01, s);
  EXPECT_NEAR((traj.at(10.0) - x0).norm(), 0.0, 1e-12);
}

TEST(Ode, BlowUpIsReported) {
  const auto net = parse_network("species A\nreaction 1 : 2 A -> 3 A");
  const auto s = ScalingSpec::make(net, 1.0, 0.5);
  Vector x0(1);
  x0 << 1.0;
  EXPECT_THROW(ode_limit(net, x0, 5.0, 1e-3, s), SimulationError);
}

}  // namespace
}  // namespace tauleap
