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
#include <vector>

#include <gtest/gtest.h>

#include "tauleap/model.hpp"

namespace tauleap {
namespace {

ReactionNetwork lotka_volterra() {
  return parse_network(
      "species A B\n"
      "reaction 2 : A -> A A\n"
      "reaction 2 : A B -> B B\n"
      "reaction 2 : B ->\n");
}

TEST(Parse, Isomerization) {
  const auto net = parse_network("species A B\nreaction 1.0 : A -> B");
  ASSERT_EQ(net.dimension(), 2u);
  ASSERT_EQ(net.num_reactions(), 1u);
  EXPECT_EQ(net.reaction(0).source, (std::vector<int>{1, 0}));
  EXPECT_EQ(net.reaction(0).net, (std::vector<int>{-1, 1}));
  EXPECT_DOUBLE_EQ(net.reaction(0).rate_constant, 1.0);
}

TEST(Parse, Birth) {
  const auto net = parse_network("species A\nreaction 2.0 : A -> A A");
  EXPECT_EQ(net.reaction(0).source, (std::vector<int>{1}));
  EXPECT_EQ(net.reaction(0).net, (std::vector<int>{1}));
  EXPECT_DOUBLE_EQ(net.reaction(0).rate_constant, 2.0);
}

TEST(Parse, CommentsEmptySidesAndCoefficients) {
  const auto net = parse_network(
      "# header\n"
      "species A B  # two species\n"
      "\n"
      "reaction 0.5 : 2 A -> B\n"
      "reaction 3 : -> A\n"
      "reaction 1 : B -> \xE2\x88\x85\n");
  ASSERT_EQ(net.num_reactions(), 3u);
  EXPECT_EQ(net.reaction(0).source, (std::vector<int>{2, 0}));
  EXPECT_EQ(net.reaction(0).order(), 2);
  EXPECT_EQ(net.reaction(1).order(), 0);
  EXPECT_EQ(net.reaction(1).net, (std::vector<int>{1, 0}));
  EXPECT_EQ(net.reaction(2).net, (std::vector<int>{0, -1}));
}

void expect_parse_error(const char* text, const char* fragment) {
  try {
    parse_network(text);
    FAIL() << "no error for: " << text;
  } catch (const ModelError& e) {
    EXPECT_NE(std::string(e.what()).find(fragment), std::string::npos) << e.what();
  }
}

TEST(Parse, Errors) {
  expect_parse_error("reaction 1.0 : A -> B", "unknown species");
  expect_parse_error("species A\nreaction 0 : A ->", "line 2");
  expect_parse_error("species A\nreaction -1 : A ->", "line 2");
  expect_parse_error("species A A", "duplicate");
  expect_parse_error("species A\nreaction x : A ->", "line 2");
  expect_parse_error("species A\nreaction 1 : A A", "line 2");
  expect_parse_error("species A\nfoo bar", "line 2");
}

TEST(Intensity, MassActionExamples) {
  const auto dimer = parse_network("species S1 S3\nreaction 0.001 : 2 S1 -> S3");
  const std::vector<std::int64_t> ten{10, 0};
  EXPECT_NEAR(intensity(dimer, 0, ten), 0.09, 1e-15);

  const auto pred = parse_network("species S1 S2\nreaction 0.002 : S1 S2 -> S2 S2");
  const std::vector<std::int64_t> thousand{1000, 1000};
  EXPECT_NEAR(intensity(pred, 0, thousand), 2000.0, 1e-9);

  const std::vector<std::int64_t> neg{-1, 1000};
  EXPECT_EQ(intensity(pred, 0, neg), 0.0);
  const std::vector<double> negr{5.0, -0.5};
  EXPECT_EQ(intensity_real(pred, 0, negr), 0.0);
}

TEST(Intensity, RealArgumentNeverNegative) {
  const auto dimer = parse_network("species A\nreaction 1 : 2 A -> ");
  for (double x = 0.0; x <= 3.0; x += 0.01) {
    const double v[] = {x};
    EXPECT_GE(intensity_real(dimer, 0, v), 0.0) << x;
  }
  const double half[] = {0.5};
  EXPECT_EQ(intensity_real(dimer, 0, half), 0.0);
  const double three[] = {3.0};
  EXPECT_DOUBLE_EQ(intensity_real(dimer, 0, three), 6.0);
}

TEST(ScaledIntensity, Examples) {
  const auto dimer = parse_network("species A\nreaction 0.01 : 2 A -> ");
  const auto s = ScalingSpec::make(dimer, 100.0, 0.5);
  EXPECT_NEAR(s.deterministic[0], 1.0, 1e-15);
  Vector x(1);
  x << 0.5;
  EXPECT_NEAR(scaled_intensity(dimer, 0, x, s), 0.245, 1e-14);
  // lambda(x) + zeta / V with zeta = -d x.
  EXPECT_NEAR(scaled_intensity(dimer, 0, x, s), deterministic_rate(dimer, 0, x, s) - 0.5 / 100.0, 1e-14);
  x << -0.1;
  EXPECT_EQ(scaled_intensity(dimer, 0, x, s), 0.0);

  const auto bi = parse_network("species A B\nreaction 0.003 : A B -> ");
  for (double V : {10.0, 1000.0}) {
    const auto sv = ScalingSpec::make(bi, V, 0.3);
    Vector y(2);
    y << 0.7, 1.3;
    EXPECT_NEAR(scaled_intensity(bi, 0, y, sv), sv.deterministic[0] * 0.7 * 1.3, 1e-12);
  }
}

TEST(Drift, Examples) {
  const auto lv = lotka_volterra();
  const auto s = ScalingSpec::make(lv, 1.0, 0.5);
  Vector x(2);
  x << 1.0, 1.0;
  EXPECT_NEAR(drift(lv, x, s).norm(), 0.0, 1e-15);
  Matrix expected(2, 2);
  expected << 0.0, -2.0, 2.0, 0.0;
  EXPECT_NEAR((drift_jacobian(lv, x, s) - expected).norm(), 0.0, 1e-14);

  const auto iso = parse_network("species A\nreaction 1 : A ->");
  const auto si = ScalingSpec::make(iso, 100.0, 0.5);
  Vector one(1);
  one << 1.0;
  EXPECT_DOUBLE_EQ(drift(iso, one, si)[0], -1.0);

  Vector zero = Vector::Zero(2);
  EXPECT_EQ(drift(lv, zero, s).norm(), 0.0);
}

TEST(Drift, JacobianAndHessianMatchFiniteDifferences) {
  const auto net = parse_network(
      "species A B C\n"
      "reaction 0.7 : 2 A -> B\n"
      "reaction 1.3 : A B -> C\n"
      "reaction 0.4 : B C C -> A\n"
      "reaction 2 : -> C\n");
  const auto s = ScalingSpec::make(net, 1.0, 0.5);
  Vector x(3);
  x << 0.8, 1.4, 0.6;
  const double eps = 1e-6;
  const Matrix J = drift_jacobian(net, x, s);
  const Hessian H = drift_hessian(net, x, s);
  for (int j = 0; j < 3; ++j) {
    Vector e = Vector::Zero(3);
    e[j] = eps;
    const Vector fd = (drift(net, x + e, s) - drift(net, x - e, s)) / (2 * eps);
    EXPECT_NEAR((J.col(j) - fd).norm(), 0.0, 1e-7);
    const Matrix Jd = (drift_jacobian(net, x + e, s) - drift_jacobian(net, x - e, s)) / (2 * eps);
    for (int i = 0; i < 3; ++i) {
      for (int l = 0; l < 3; ++l) EXPECT_NEAR(H[i](l, j), Jd(i, l), 1e-7);
    }
  }
  for (int i = 0; i < 3; ++i) EXPECT_NEAR((H[i] - H[i].transpose()).norm(), 0.0, 1e-14);
}

TEST(Drift, ScaledJacobianMatchesFiniteDifferences) {
  const auto net = parse_network("species A B\nreaction 0.01 : 2 A -> B\nreaction 0.02 : A B -> ");
  const auto s = ScalingSpec::make(net, 100.0, 0.5);
  Vector x(2);
  x << 0.8, 1.2;
  const double eps = 1e-6;
  const Matrix J = scaled_drift_jacobian(net, x, s);
  for (int j = 0; j < 2; ++j) {
    Vector e = Vector::Zero(2);
    e[j] = eps;
    const Vector fd = (drift(net, x + e, s, false) - drift(net, x - e, s, false)) / (2 * eps);
    EXPECT_NEAR((J.col(j) - fd).norm(), 0.0, 1e-6);
  }
}

TEST(MidpointPredictor, Examples) {
  const auto iso = parse_network("species A\nreaction 1 : A ->");
  auto s = ScalingSpec::make(iso, 1e6, 0.5);
  s.h = 0.1;
  Vector z(1);
  z << 1.0;
  EXPECT_NEAR(midpoint_predictor(z, iso, s)[0], 0.95, 1e-6);

  // Lotka-Volterra at its equilibrium is a fixed point of the predictor.
  const auto lv = lotka_volterra().rescaled(1.0, 1000.0);
  const double counts[] = {1000.0, 1000.0};
  const auto rho = midpoint_predictor_counts(lv, counts, 0.37);
  EXPECT_NEAR(rho[0], 1000.0, 1e-9);
  EXPECT_NEAR(rho[1], 1000.0, 1e-9);
  const auto s1 = ScalingSpec::make(lv, 1000.0, 0.5);
  Vector ones = Vector::Ones(2);
  EXPECT_NEAR((midpoint_predictor(ones, lv, s1) - ones).norm(), 0.0, 1e-12);
}

TEST(Kappa, ValuesAndMonotonicity) {
  EXPECT_DOUBLE_EQ(kappa(0.5), 0.75);
  EXPECT_DOUBLE_EQ(kappa(0.25), 0.5);
  EXPECT_DOUBLE_EQ(kappa(1.0 / 3.0), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(kappa1(0.25), 0.5);
  EXPECT_DOUBLE_EQ(kappa1(0.75), 1.25);
  double prev = 0.0, prev1 = 0.0;
  for (int i = 1; i < 100; ++i) {
    const double b = i / 100.0;
    EXPECT_GT(kappa(b), prev);
    EXPECT_GT(kappa1(b), prev1);
    EXPECT_GE(kappa(b), b);
    EXPECT_LE(kappa(b), kappa1(b));
    prev = kappa(b);
    prev1 = kappa1(b);
  }
  EXPECT_THROW(kappa(0.0), std::invalid_argument);
  EXPECT_THROW(kappa1(1.0), std::invalid_argument);
}

TEST(Scaling, DeterministicConstantsAndRescaling) {
  const auto lv = parse_network(
      "species A B\nreaction 2 : A -> A A\nreaction 0.002 : A B -> B B\nreaction 2 : B ->\n");
  const auto s = ScalingSpec::make(lv, 1000.0, 0.4);
  EXPECT_NEAR(s.deterministic[1], 2.0, 1e-12);
  EXPECT_NEAR(s.h, std::pow(1000.0, -0.4), 1e-15);
  const auto moved = lv.rescaled(1000.0, 10.0);
  EXPECT_NEAR(ScalingSpec::make(moved, 10.0, 0.4).deterministic[1], 2.0, 1e-12);
  const auto fs = ScalingSpec::from_step(lv, 1000.0, 0.05);
  EXPECT_DOUBLE_EQ(fs.h, 0.05);
  EXPECT_NEAR(std::pow(1000.0, -fs.beta), 0.05, 1e-12);
  EXPECT_THROW(ScalingSpec::make(lv, 1000.0, 1.0), std::invalid_argument);
}

TEST(Cutoff, SmoothAndSupportedInBox) {
  CutoffSpec c;
  EXPECT_EQ(c(std::vector<double>{1e9}), 1.0);
  c.enabled = true;
  c.box_lower = {0.0};
  c.box_upper = {2.0};
  c.margin = 0.5;
  EXPECT_EQ(c(std::vector<double>{1.0}), 1.0);
  EXPECT_EQ(c(std::vector<double>{2.6}), 0.0);
  EXPECT_NEAR(c(std::vector<double>{2.25}), 0.5, 1e-15);
  double prev = 1.0;
  for (double x = 2.0; x <= 2.5; x += 0.01) {
    const double g = c(std::vector<double>{x});
    EXPECT_LE(g, prev + 1e-15);
    prev = g;
  }
}

}  // namespace
}  // namespace tauleap
