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
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "tauleap/error_theory.hpp"
#include "tauleap/model.hpp"
#include "tauleap/path.hpp"
#include "tauleap/simulate.hpp"
#include "tauleap/stochastics.hpp"

namespace tauleap {

/// Cumulative firings of the three split channels of every reaction:
/// [0] moves both processes, [1] only the exact one, [2] only the approximation.
struct ChannelState {
  std::vector<std::array<std::int64_t, 3>> counts;
};

/// Randomness for one coupled pair: channel j of reaction k reads stream
/// (master_seed, path_index, 3k + j).
struct CouplingStreams {
  std::uint64_t master_seed = 0;
  std::uint64_t path_index = 0;
};

struct CoupledPair {
  Path exact;   // X^V, normalized
  Path approx;  // Z^V or the midpoint process, normalized
  LeapMethod method = LeapMethod::kEuler;
  GridSpec grid;
  ScalingSpec scaling;
  ChannelState channels;
};

/// Normalized values of both components at the grid's evaluation times,
/// stored flat (time-major).
struct PairSample {
  std::vector<double> exact;
  std::vector<double> approx;
};

struct NullCouplingObserver {
  void operator()(double, std::span<const std::int64_t>, std::span<const std::int64_t>, const ChannelState&) {}
};

/// Simulates the split coupling of an exact path with its Euler or midpoint
/// tau-leap approximation as one jump process over 3M channels. Each channel
/// is a unit-rate Poisson process run on its own integrated intensity
/// (next-reaction form), so rates may be refreshed at every jump of X and at
/// every grid time without redrawing any randomness.
template <class RecX, class RecZ, class Observer = NullCouplingObserver>
ChannelState run_coupled(const ReactionNetwork& net, std::span<const std::int64_t> x0, double T, double h,
                         LeapMethod method, const CouplingStreams& keys, RecX& rec_x, RecZ& rec_z,
                         const CutoffSpec& cutoff = {}, double V = 1.0, Observer&& observer = {}) {
  detail::check_initial(net, x0);
  const std::size_t M = net.num_reactions();
  const std::size_t C = 3 * M;
  const auto grid = GridSpec{T, h, {}}.leap_times();

  std::vector<Stream> streams;
  streams.reserve(C);
  for (std::size_t c = 0; c < C; ++c) streams.emplace_back(StreamKey{keys.master_seed, keys.path_index, c});

  CountVector x(x0.begin(), x0.end());
  CountVector z(x0.begin(), x0.end());
  std::vector<double> xm = detail::as_real(x);
  std::vector<double> zm = xm;

  std::vector<double> internal(C, 0.0);
  std::vector<double> next_fire(C);
  for (std::size_t c = 0; c < C; ++c) next_fire[c] = sample_exponential(streams[c], 1.0);

  ChannelState channels;
  channels.counts.assign(M, {0, 0, 0});
  std::vector<double> frozen(M), rate(C);

  auto refresh_frozen = [&](double step) {
    std::vector<double> arg = zm;
    if (method == LeapMethod::kMidpoint) arg = midpoint_predictor_counts(net, zm, step, cutoff, V);
    for (std::size_t k = 0; k < M; ++k) frozen[k] = intensity_real(net, k, arg, cutoff, V);
  };
  auto refresh_rates = [&] {
    for (std::size_t k = 0; k < M; ++k) {
      const double live = intensity(net, k, x, cutoff, V);
      const double shared = std::min(live, frozen[k]);
      rate[3 * k] = shared;
      rate[3 * k + 1] = live - shared;
      rate[3 * k + 2] = frozen[k] - shared;
    }
  };

  rec_x.start(0.0, xm);
  rec_z.start(0.0, zm);
  double t = 0.0;
  std::size_t cell = 0;
  refresh_frozen(grid[1] - grid[0]);
  refresh_rates();
  while (true) {
    const double boundary = grid[cell + 1];
    double wait = std::numeric_limits<double>::infinity();
    std::size_t winner = C;
    for (std::size_t c = 0; c < C; ++c) {
      if (rate[c] <= 0.0) continue;
      const double w = (next_fire[c] - internal[c]) / rate[c];
      if (w < wait) {
        wait = w;
        winner = c;
      }
    }

    if (winner == C || t + wait >= boundary) {
      for (std::size_t c = 0; c < C; ++c) internal[c] += rate[c] * (boundary - t);
      t = boundary;
      if (cell + 2 >= grid.size()) break;
      ++cell;
      rec_z.advance(t, zm);
      rec_z.jump(t, zm);
      refresh_frozen(grid[cell + 1] - grid[cell]);
      refresh_rates();
      continue;
    }

    t += wait;
    for (std::size_t c = 0; c < C; ++c) internal[c] += rate[c] * wait;
    internal[winner] = next_fire[winner];
    next_fire[winner] += sample_exponential(streams[winner], 1.0);

    const std::size_t k = winner / 3;
    const std::size_t j = winner % 3;
    ++channels.counts[k][j];
    const auto& nu = net.reaction(k).net;
    if (j != 2) {
      rec_x.advance(t, xm);
      for (std::size_t i = 0; i < nu.size(); ++i) {
        x[i] += nu[i];
        xm[i] = static_cast<double>(x[i]);
      }
      rec_x.jump(t, xm);
    }
    if (j != 1) {
      rec_z.advance(t, zm);
      for (std::size_t i = 0; i < nu.size(); ++i) {
        z[i] += nu[i];
        zm[i] = static_cast<double>(z[i]);
      }
      rec_z.jump(t, zm);
    }
    observer(t, x, z, channels);
    if (j != 2) refresh_rates();
  }
  rec_x.finish(T, xm);
  rec_z.finish(T, zm);
  return channels;
}

namespace detail {

inline CoupledPair couple_full(const ReactionNetwork& net, std::span<const std::int64_t> x0,
                               const GridSpec& grid, const ScalingSpec& scaling, LeapMethod method,
                               const CouplingStreams& streams, const CutoffSpec& cutoff) {
  grid.validate();
  PathRecorder rx(net.dimension(), grid.T), rz(net.dimension(), grid.T);
  CoupledPair pair;
  pair.channels = run_coupled(net, x0, grid.T, grid.h, method, streams, rx, rz, cutoff, scaling.V);
  pair.exact = rx.take().normalize(scaling.V);
  pair.approx = rz.take().normalize(scaling.V);
  pair.method = method;
  pair.grid = grid;
  pair.scaling = scaling;
  return pair;
}

}  // namespace detail

inline CoupledPair couple_exact_euler(const ReactionNetwork& net, std::span<const std::int64_t> x0,
                                      const GridSpec& grid, const ScalingSpec& scaling,
                                      const CouplingStreams& streams, const CutoffSpec& cutoff = {}) {
  return detail::couple_full(net, x0, grid, scaling, LeapMethod::kEuler, streams, cutoff);
}

inline CoupledPair couple_exact_midpoint(const ReactionNetwork& net, std::span<const std::int64_t> x0,
                                         const GridSpec& grid, const ScalingSpec& scaling,
                                         const CouplingStreams& streams, const CutoffSpec& cutoff = {}) {
  return detail::couple_full(net, x0, grid, scaling, LeapMethod::kMidpoint, streams, cutoff);
}

/// Coupled pair reduced to its values at `grid.eval_times`.
inline PairSample couple_sample(const ReactionNetwork& net, std::span<const std::int64_t> x0,
                                const GridSpec& grid, const ScalingSpec& scaling, LeapMethod method,
                                const CouplingStreams& streams, const CutoffSpec& cutoff = {}) {
  SnapshotRecorder rx(grid.eval_times, net.dimension()), rz(grid.eval_times, net.dimension());
  run_coupled(net, x0, grid.T, grid.h, method, streams, rx, rz, cutoff, scaling.V);
  PairSample s{rx.take(), rz.take()};
  for (double& v : s.exact) v /= scaling.V;
  for (double& v : s.approx) v /= scaling.V;
  return s;
}

struct StrongErrorEstimate {
  std::vector<double> eval_times;
  std::vector<double> mean_abs_error;  // E |X - A|_1 per time
  std::vector<double> stderr_abs;
  /// Signed component-wise mean of X - A, time-major with `dim` entries per time.
  std::vector<double> mean_signed;
  std::vector<double> stderr_signed;
  std::size_t dim = 0;
  std::size_t n = 0;
  std::size_t sup_index = 0;

  double sup() const { return mean_abs_error[sup_index]; }
  double sup_stderr() const { return stderr_abs[sup_index]; }
};

inline StrongErrorEstimate strong_error_estimate(std::span<const PairSample> pairs,
                                                 std::span<const double> eval_times) {
  if (pairs.size() < 2) throw std::invalid_argument("strong error estimate needs at least two pairs");
  const std::size_t nt = eval_times.size();
  if (nt == 0) throw std::invalid_argument("no evaluation times");
  const std::size_t dim = pairs.front().exact.size() / nt;
  StrongErrorEstimate est;
  est.eval_times.assign(eval_times.begin(), eval_times.end());
  est.dim = dim;
  est.n = pairs.size();
  est.mean_abs_error.assign(nt, 0.0);
  est.stderr_abs.assign(nt, 0.0);
  est.mean_signed.assign(nt * dim, 0.0);
  est.stderr_signed.assign(nt * dim, 0.0);
  std::vector<double> sq_abs(nt, 0.0), sq_signed(nt * dim, 0.0);
  for (const auto& p : pairs) {
    if (p.exact.size() != nt * dim || p.approx.size() != nt * dim) {
      throw std::invalid_argument("pair sample has inconsistent size");
    }
    for (std::size_t i = 0; i < nt; ++i) {
      double l1 = 0.0;
      for (std::size_t j = 0; j < dim; ++j) {
        const double diff = p.exact[i * dim + j] - p.approx[i * dim + j];
        l1 += std::fabs(diff);
        est.mean_signed[i * dim + j] += diff;
        sq_signed[i * dim + j] += diff * diff;
      }
      est.mean_abs_error[i] += l1;
      sq_abs[i] += l1 * l1;
    }
  }
  const double n = static_cast<double>(pairs.size());
  auto finish = [n](double& mean, double sq, double& se) {
    mean /= n;
    const double var = std::max(0.0, (sq - n * mean * mean) / (n - 1.0));
    se = std::sqrt(var / n);
  };
  for (std::size_t i = 0; i < nt; ++i) finish(est.mean_abs_error[i], sq_abs[i], est.stderr_abs[i]);
  for (std::size_t i = 0; i < nt * dim; ++i) finish(est.mean_signed[i], sq_signed[i], est.stderr_signed[i]);
  est.sup_index = static_cast<std::size_t>(
      std::max_element(est.mean_abs_error.begin(), est.mean_abs_error.end()) - est.mean_abs_error.begin());
  return est;
}

inline StrongErrorEstimate strong_error_estimate(std::span<const CoupledPair> pairs,
                                                 std::span<const double> eval_times) {
  if (pairs.empty()) throw std::invalid_argument("strong error estimate needs at least two pairs");
  std::vector<PairSample> samples;
  samples.reserve(pairs.size());
  for (const auto& p : pairs) {
    PairSample s;
    for (double t : eval_times) {
      auto a = p.exact.at(t);
      auto b = p.approx.at(t);
      s.exact.insert(s.exact.end(), a.begin(), a.end());
      s.approx.insert(s.approx.end(), b.begin(), b.end());
    }
    samples.push_back(std::move(s));
  }
  return strong_error_estimate(std::span<const PairSample>(samples), eval_times);
}

/// V^exponent (X^V - A^V)(t) on the pair's evaluation times. With
/// `subtract_remainder`, the midpoint remainder R^V(t) is removed first.
inline Path scaled_error_trajectory(const CoupledPair& pair, double exponent, const ReactionNetwork* net = nullptr,
                                    bool subtract_remainder = false) {
  if (subtract_remainder && net == nullptr) throw std::invalid_argument("remainder needs the network");
  const double scale = std::pow(pair.scaling.V, exponent);
  const std::size_t d = pair.exact.dim();
  Path out(d, pair.grid.T);
  std::vector<double> buf(d);
  for (double t : pair.grid.eval_times) {
    auto a = pair.exact.at(t);
    auto b = pair.approx.at(t);
    for (std::size_t i = 0; i < d; ++i) buf[i] = a[i] - b[i];
    if (subtract_remainder) {
      const double eta = std::floor(t / pair.grid.h * (1.0 + 1e-12)) * pair.grid.h;
      auto z = pair.approx.at(std::min(eta, pair.grid.T));
      Vector z_eta = Eigen::Map<const Vector>(z.data(), static_cast<Eigen::Index>(d));
      const Vector r = remainder_RV(*net, pair.scaling, z_eta, t, eta);
      for (std::size_t i = 0; i < d; ++i) buf[i] -= r[static_cast<Eigen::Index>(i)];
    }
    for (double& v : buf) v *= scale;
    out.push(t, buf);
  }
  return out;
}

}  // namespace tauleap
