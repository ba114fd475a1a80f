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

#include <boost/math/distributions/poisson.hpp>
#include <gtest/gtest.h>

#include "tauleap/stats.hpp"
#include "tauleap/stochastics.hpp"

namespace tauleap {
namespace {

TEST(Stream, PhiloxKnownAnswer) {
  Stream s(StreamKey{0, 0, 0});
  EXPECT_EQ(s(), 0x6627e8d5e169c58dull);
}

TEST(Stream, SameKeySameSequence) {
  Stream a(StreamKey{42, 7, 3}), b(StreamKey{42, 7, 3});
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(a(), b());
}

TEST(Stream, DistinctKeysDiffer) {
  Stream a(StreamKey{42, 7, 3}), b(StreamKey{42, 7, 4}), c(StreamKey{42, 8, 3}), d(StreamKey{43, 7, 3});
  const auto x = a();
  EXPECT_NE(x, b());
  EXPECT_NE(x, c());
  EXPECT_NE(x, d());
}

TEST(Stream, NeighbouringPathsUncorrelated) {
  constexpr int n = 1000000;
  Stream a(StreamKey{1, 10, 0}), b(StreamKey{1, 11, 0});
  std::vector<double> u(n), v(n);
  for (int i = 0; i < n; ++i) {
    u[i] = a.uniform();
    v[i] = b.uniform();
  }
  EXPECT_LT(std::fabs(pearson_correlation(u, v)), 0.01);
  const auto m = summarize(u);
  EXPECT_NEAR(m.mean(), 0.5, 0.002);
  EXPECT_NEAR(m.variance(), 1.0 / 12.0, 0.001);
}

TEST(Stream, UniformRanges) {
  Stream s(StreamKey{5, 0, 0});
  for (int i = 0; i < 100000; ++i) {
    const double u = s.uniform();
    const double w = s.uniform_pos();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    ASSERT_GT(w, 0.0);
    ASSERT_LE(w, 1.0);
  }
}

TEST(Stream, RejectsOversizedIndices) {
  EXPECT_THROW(Stream(StreamKey{0, 1ull << 32, 0}), std::invalid_argument);
  EXPECT_THROW(Stream(StreamKey{0, 0, 1ull << 32}), std::invalid_argument);
}

TEST(Poisson, ZeroMeanAndErrors) {
  Stream s(StreamKey{3, 0, 0});
  for (int i = 0; i < 100; ++i) EXPECT_EQ(sample_poisson(s, 0.0), 0);
  EXPECT_THROW(sample_poisson(s, -1.0), std::invalid_argument);
  EXPECT_THROW(sample_poisson(s, std::nan("")), std::invalid_argument);
}

TEST(Poisson, MomentsAtMeanFour) {
  Stream s(StreamKey{11, 0, 0});
  RunningStats st;
  for (int i = 0; i < 1000000; ++i) st.add(static_cast<double>(sample_poisson(s, 4.0)));
  EXPECT_NEAR(st.mean(), 4.0, 0.006);
  EXPECT_NEAR(st.variance(), 4.0, 0.03);
}

TEST(Poisson, ChiSquareAtLargeMean) {
  Stream s(StreamKey{12, 0, 0});
  std::vector<std::int64_t> xs(100000);
  for (auto& x : xs) x = sample_poisson(s, 5000.0);
  boost::math::poisson_distribution<double> law(5000.0);
  const auto r = chi_square_gof(
      xs, [&](std::int64_t k) { return k < 0 ? 0.0 : boost::math::pdf(law, static_cast<double>(k)); }, 4500, 5500);
  EXPECT_GT(r.p_value, 1e-3) << "chi2=" << r.statistic << " dof=" << r.dof;
}

class PoissonKolmogorov : public ::testing::TestWithParam<double> {};

TEST_P(PoissonKolmogorov, DistanceToExactCdfIsSmall) {
  const double mean = GetParam();
  Stream s(StreamKey{13, static_cast<std::uint64_t>(mean * 10), 0});
  std::vector<std::int64_t> xs(200000);
  for (auto& x : xs) x = sample_poisson(s, mean);
  boost::math::poisson_distribution<double> law(mean);
  const double d = ks_distance_discrete(
      xs, [&](std::int64_t k) { return k < 0 ? 0.0 : boost::math::cdf(law, static_cast<double>(k)); });
  EXPECT_LT(d, 0.005);
}

INSTANTIATE_TEST_SUITE_P(Means, PoissonKolmogorov, ::testing::Values(0.1, 1.0, 9.99, 10.0, 37.5, 1e4));

TEST(Exponential, Mean) {
  Stream s(StreamKey{14, 0, 0});
  RunningStats st;
  for (int i = 0; i < 1000000; ++i) st.add(sample_exponential(s, 2.0));
  EXPECT_NEAR(st.mean(), 0.5, 0.0015);
  EXPECT_THROW(sample_exponential(s, 0.0), std::invalid_argument);
}

TEST(Categorical, DegenerateAndBalanced) {
  Stream s(StreamKey{15, 0, 0});
  const double one[] = {1.0, 0.0, 0.0};
  for (int i = 0; i < 1000; ++i) EXPECT_EQ(sample_categorical(s, one), 0u);
  const double last[] = {0.0, 0.0, 3.0};
  for (int i = 0; i < 1000; ++i) EXPECT_EQ(sample_categorical(s, last), 2u);
  const double even[] = {1.0, 1.0};
  int zeros = 0;
  for (int i = 0; i < 1000000; ++i) zeros += sample_categorical(s, even) == 0;
  EXPECT_NEAR(zeros / 1e6, 0.5, 0.0015);
  const double none[] = {0.0, 0.0};
  EXPECT_THROW(sample_categorical(s, none), std::invalid_argument);
}

TEST(LogFactorial, MatchesLgamma) {
  for (std::int64_t k : {0, 1, 2, 10, 255, 256, 300, 5000, 1000000}) {
    EXPECT_NEAR(detail::log_factorial(k), std::lgamma(static_cast<double>(k) + 1.0),
                1e-10 * std::max(1.0, std::lgamma(static_cast<double>(k) + 1.0)));
  }
}

TEST(Stats, KsTwoSampleDetectsShift) {
  Stream s(StreamKey{16, 0, 0});
  std::vector<double> a(5000), b(5000), c(5000);
  for (auto& x : a) x = s.uniform();
  for (auto& x : b) x = s.uniform();
  for (auto& x : c) x = s.uniform() + 0.1;
  EXPECT_GT(ks_two_sample(a, b).p_value, 1e-3);
  EXPECT_LT(ks_two_sample(a, c).p_value, 1e-6);
  EXPECT_NEAR(kolmogorov_survival(1.3581), 0.05, 1e-3);
}

TEST(Stats, TotalVariation) {
  const double p[] = {0.5, 0.5, 0.0};
  const double q[] = {0.25, 0.25, 0.5};
  EXPECT_DOUBLE_EQ(total_variation(p, q), 0.5);
  EXPECT_DOUBLE_EQ(total_variation(p, p), 0.0);
}

}  // namespace
}  // namespace tauleap
