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

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>

namespace tauleap {

/// Identifies one random stream. Streams with distinct keys draw from
/// disjoint counter ranges of the same Philox key.
struct StreamKey {
  std::uint64_t master_seed = 0;
  std::uint64_t path_index = 0;
  std::uint64_t channel = 0;
};

/// Channel tags for standalone solvers, kept clear of the 3M coupling channels.
namespace channels {
inline constexpr std::uint64_t kSsa = 1u << 20;
inline constexpr std::uint64_t kEuler = kSsa + 1;
inline constexpr std::uint64_t kMidpoint = kSsa + 2;
inline constexpr std::uint64_t kOde = kSsa + 3;
inline constexpr std::uint64_t kLimit = kSsa + 4;
}  // namespace channels

/// Philox4x32-10 (Salmon et al., SC'11) run in counter mode.
///
/// Counter words: [block_lo, block_hi, path_index, channel]; key words are the
/// two halves of the master seed. The stream is a UniformRandomBitGenerator
/// producing 64-bit words.
class Stream {
 public:
  using result_type = std::uint64_t;

  explicit Stream(const StreamKey& key) {
    if (key.path_index > 0xffffffffull || key.channel > 0xffffffffull) {
      throw std::invalid_argument("path_index and channel must fit in 32 bits");
    }
    key_ = {static_cast<std::uint32_t>(key.master_seed), static_cast<std::uint32_t>(key.master_seed >> 32)};
    counter_ = {0u, 0u, static_cast<std::uint32_t>(key.path_index), static_cast<std::uint32_t>(key.channel)};
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    if (used_ >= 2) refill();
    const std::size_t i = 2 * used_++;
    return (static_cast<std::uint64_t>(block_[i]) << 32) | block_[i + 1];
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  /// Uniform double in (0, 1].
  double uniform_pos() { return (static_cast<double>((*this)() >> 11) + 1.0) * 0x1.0p-53; }

 private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

  void refill() {
    std::array<std::uint32_t, 4> ctr = counter_;
    std::array<std::uint32_t, 2> key = key_;
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
      const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
      ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
             static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    block_ = ctr;
    used_ = 0;
    if (++counter_[0] == 0) ++counter_[1];
  }

  std::array<std::uint32_t, 2> key_{};
  std::array<std::uint32_t, 4> counter_{};
  std::array<std::uint32_t, 4> block_{};
  std::size_t used_ = 2;
};

inline Stream derive_stream(const StreamKey& key) { return Stream(key); }

namespace detail {

/// log(k!) via a table for small k and the Stirling series beyond.
inline double log_factorial(std::int64_t k) {
  static const auto table = [] {
    std::array<double, 256> t{};
    double acc = 0.0;
    for (std::size_t i = 1; i < t.size(); ++i) {
      acc += std::log(static_cast<double>(i));
      t[i] = acc;
    }
    return t;
  }();
  if (k < static_cast<std::int64_t>(table.size())) return table[static_cast<std::size_t>(k)];
  const double n = static_cast<double>(k) + 1.0;
  const double inv = 1.0 / n;
  const double inv2 = inv * inv;
  return (n - 0.5) * std::log(n) - n + 0.91893853320467274178 +
         inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 / 1680.0)));
}

}  // namespace detail

/// Exact Poisson(mean) variate: sequential-search inversion below mean 10,
/// Hörmann's transformed rejection with squeeze (PTRS) above.
inline std::int64_t sample_poisson(Stream& stream, double mean) {
  if (!(mean >= 0.0) || !std::isfinite(mean)) {
    throw std::invalid_argument("Poisson mean must be finite and nonnegative");
  }
  if (mean == 0.0) return 0;
  if (mean < 10.0) {
    while (true) {
      const double u = stream.uniform();
      double p = std::exp(-mean);
      double cdf = p;
      std::int64_t k = 0;
      while (u > cdf) {
        ++k;
        p *= mean / static_cast<double>(k);
        cdf += p;
        if (k > 200) break;  // only reachable through rounding of cdf near 1
      }
      if (k <= 200) return k;
    }
  }
  const double slam = std::sqrt(mean);
  const double loglam = std::log(mean);
  const double b = 0.931 + 2.53 * slam;
  const double a = -0.059 + 0.02483 * b;
  const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  const double v_r = 0.9277 - 3.6224 / (b - 2.0);
  while (true) {
    const double u = stream.uniform() - 0.5;
    const double v = stream.uniform();
    const double us = 0.5 - std::fabs(u);
    const double kd = std::floor((2.0 * a / us + b) * u + mean + 0.43);
    if (us >= 0.07 && v <= v_r) return static_cast<std::int64_t>(kd);
    if (kd < 0.0 || (us < 0.013 && v > us)) continue;
    const auto k = static_cast<std::int64_t>(kd);
    const double lhs = std::log(v * inv_alpha / (a / (us * us) + b));
    const double rhs = -mean + kd * loglam - detail::log_factorial(k);
    if (lhs <= rhs) return k;
  }
}

inline double sample_exponential(Stream& stream, double rate) {
  if (!(rate > 0.0)) throw std::invalid_argument("exponential rate must be positive");
  return -std::log(stream.uniform_pos()) / rate;
}

/// Index j with probability weights[j] / sum(weights): the first prefix sum
/// that reaches u * total for u in (0, 1].
inline std::size_t sample_categorical(Stream& stream, std::span<const double> weights) {
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw std::invalid_argument("categorical weights must be nonnegative");
    total += w;
  }
  if (!(total > 0.0)) throw std::invalid_argument("categorical weights are all zero");
  const double target = stream.uniform_pos() * total;
  double prefix = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t j = 0; j < weights.size(); ++j) {
    if (weights[j] > 0.0) last_positive = j;
    prefix += weights[j];
    if (prefix >= target && weights[j] > 0.0) return j;
  }
  return last_positive;
}

}  // namespace tauleap
