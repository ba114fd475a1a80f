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

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <stdexcept>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

namespace tauleap {

/// Point estimate with its Monte Carlo standard error. Intervals are
/// estimate +/- z * std_error.
struct EstimateWithCI {
  double estimate = 0.0;
  double std_error = 0.0;
  std::size_t n = 0;

  double lower(double z = 1.96) const { return estimate - z * std_error; }
  double upper(double z = 1.96) const { return estimate + z * std_error; }
};

/// Welford running mean and variance.
class RunningStats {
 public:
  void add(double x) {
    ++n_;
    const double delta = x - mean_;
    mean_ += delta / static_cast<double>(n_);
    m2_ += delta * (x - mean_);
  }
  std::size_t count() const { return n_; }
  double mean() const { return mean_; }
  double variance() const { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
  double std_error() const { return n_ > 0 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0; }
  EstimateWithCI estimate() const { return {mean(), std_error(), n_}; }

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

inline RunningStats summarize(std::span<const double> xs) {
  RunningStats s;
  for (double x : xs) s.add(x);
  return s;
}

inline double pearson_correlation(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) throw std::invalid_argument("correlation needs equal sizes >= 2");
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

/// Survival function of the Kolmogorov distribution, P(K > lambda).
inline double kolmogorov_survival(double lambda) {
  if (lambda <= 0.0) return 1.0;
  if (lambda < 0.2) return 1.0;
  double sum = 0.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = std::exp(-2.0 * j * j * lambda * lambda);
    sum += (j % 2 == 1 ? term : -term);
    if (term < 1e-17) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// Two-sample Kolmogorov-Smirnov test with the asymptotic p-value (Stephens'
/// small-sample correction). Conservative for discrete data.
inline KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("KS test needs nonempty samples");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::fabs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  const double ne = std::sqrt(na * nb / (na + nb));
  return {d, kolmogorov_survival((ne + 0.12 + 0.11 / ne) * d)};
}

/// sup_k |F_n(k) - F(k)| for integer-valued samples against an integer CDF.
inline double ks_distance_discrete(std::span<const std::int64_t> samples,
                                   const std::function<double(std::int64_t)>& cdf) {
  if (samples.empty()) throw std::invalid_argument("KS distance needs samples");
  std::vector<std::int64_t> s(samples.begin(), samples.end());
  std::sort(s.begin(), s.end());
  const double n = static_cast<double>(s.size());
  double d = 0.0;
  std::size_t i = 0;
  // Check just below the support as well as every observed value.
  d = std::max(d, std::fabs(cdf(s.front() - 1)));
  while (i < s.size()) {
    const std::int64_t k = s[i];
    while (i < s.size() && s[i] == k) ++i;
    d = std::max(d, std::fabs(static_cast<double>(i) / n - cdf(k)));
    // Gaps between observed values: F_n is flat there.
    if (i < s.size() && s[i] > k + 1) d = std::max(d, std::fabs(static_cast<double>(i) / n - cdf(s[i] - 1)));
  }
  d = std::max(d, std::fabs(1.0 - cdf(s.back())));
  return d;
}

struct ChiSquareResult {
  double statistic = 0.0;
  int dof = 0;
  double p_value = 1.0;
};

/// Pearson goodness of fit for integer samples against a pmf. Adjacent cells
/// are pooled until each has expected count >= `min_expected`. Samples outside
/// [support_lo, support_hi] are clamped to the ends, so the window should hold
/// essentially all of the pmf's mass.
inline ChiSquareResult chi_square_gof(std::span<const std::int64_t> samples,
                                      const std::function<double(std::int64_t)>& pmf, std::int64_t support_lo,
                                      std::int64_t support_hi, double min_expected = 5.0) {
  if (samples.empty()) throw std::invalid_argument("chi-square needs samples");
  const double n = static_cast<double>(samples.size());
  std::map<std::int64_t, double> observed;
  for (auto s : samples) ++observed[std::clamp(s, support_lo, support_hi)];

  struct Cell {
    double expected = 0.0;
    double observed = 0.0;
  };
  std::vector<Cell> cells;
  Cell acc;
  double mass = 0.0;
  for (std::int64_t k = support_lo; k <= support_hi; ++k) {
    const double p = pmf(k);
    mass += p;
    acc.expected += n * p;
    auto it = observed.find(k);
    if (it != observed.end()) acc.observed += it->second;
    if (acc.expected >= min_expected) {
      cells.push_back(acc);
      acc = {};
    }
  }
  // Leftover tail mass (outside the support window or below threshold).
  acc.expected += n * std::max(0.0, 1.0 - mass);
  if (!cells.empty()) {
    cells.back().expected += acc.expected;
    cells.back().observed += acc.observed;
  } else {
    cells.push_back(acc);
  }
  ChiSquareResult r;
  for (const auto& c : cells) {
    if (c.expected > 0.0) r.statistic += (c.observed - c.expected) * (c.observed - c.expected) / c.expected;
  }
  r.dof = static_cast<int>(cells.size()) - 1;
  r.p_value = r.dof > 0 ? boost::math::gamma_q(0.5 * r.dof, 0.5 * r.statistic) : 1.0;
  return r;
}

/// Total variation distance between two probability vectors on the same cells.
inline double total_variation(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw std::invalid_argument("TV distance needs equal-length vectors");
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::fabs(p[i] - q[i]);
  return 0.5 * s;
}

}  // namespace tauleap
