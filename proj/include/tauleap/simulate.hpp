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
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "tauleap/model.hpp"
#include "tauleap/path.hpp"
#include "tauleap/stochastics.hpp"

namespace tauleap {

class SimulationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class LeapMethod { kEuler, kMidpoint };

inline const char* to_string(LeapMethod m) { return m == LeapMethod::kEuler ? "euler" : "midpoint"; }

namespace detail {

inline void check_initial(const ReactionNetwork& net, std::span<const std::int64_t> x0) {
  if (x0.size() != net.dimension()) throw std::invalid_argument("initial state has wrong dimension");
  for (auto v : x0) {
    if (v < 0) throw std::invalid_argument("initial state must be nonnegative");
  }
}

inline std::vector<double> as_real(std::span<const std::int64_t> x) {
  return {x.begin(), x.end()};
}

}  // namespace detail

/// Gillespie's direct method on [0, T]. The recorder sees every jump.
template <class Recorder>
void run_ssa(const ReactionNetwork& net, std::span<const std::int64_t> x0, double T, Stream& stream,
             Recorder& recorder, const CutoffSpec& cutoff = {}, double V = 1.0) {
  detail::check_initial(net, x0);
  CountVector x(x0.begin(), x0.end());
  std::vector<double> mirror = detail::as_real(x);
  std::vector<double> rates(net.num_reactions());
  double t = 0.0;
  recorder.start(0.0, mirror);
  while (true) {
    double total = 0.0;
    for (std::size_t k = 0; k < rates.size(); ++k) {
      rates[k] = intensity(net, k, x, cutoff, V);
      total += rates[k];
    }
    if (total <= 0.0) break;
    const double dt = sample_exponential(stream, total);
    if (t + dt > T) break;
    t += dt;
    const std::size_t k = sample_categorical(stream, rates);
    recorder.advance(t, mirror);
    const auto& nu = net.reaction(k).net;
    for (std::size_t i = 0; i < nu.size(); ++i) {
      if (nu[i] != 0) {
        x[i] += nu[i];
        mirror[i] = static_cast<double>(x[i]);
      }
    }
    recorder.jump(t, mirror);
  }
  recorder.finish(T, mirror);
}

/// Euler or midpoint tau-leaping on the grid t_n = n h; the last step is
/// shortened to land on T. Negative counts may occur and simply switch the
/// affected intensities off.
template <class Recorder>
void run_tau_leap(const ReactionNetwork& net, std::span<const std::int64_t> x0, double T, double h,
                  LeapMethod method, Stream& stream, Recorder& recorder, const CutoffSpec& cutoff = {},
                  double V = 1.0) {
  detail::check_initial(net, x0);
  GridSpec grid{T, h, {}};
  const auto times = grid.leap_times();
  CountVector z(x0.begin(), x0.end());
  std::vector<double> mirror = detail::as_real(z);
  recorder.start(0.0, mirror);
  for (std::size_t n = 0; n + 1 < times.size(); ++n) {
    const double step = times[n + 1] - times[n];
    std::vector<double> arg = mirror;
    if (method == LeapMethod::kMidpoint) arg = midpoint_predictor_counts(net, mirror, step, cutoff, V);
    CountVector next = z;
    for (std::size_t k = 0; k < net.num_reactions(); ++k) {
      const double rate = intensity_real(net, k, arg, cutoff, V);
      const std::int64_t fired = sample_poisson(stream, rate * step);
      if (fired == 0) continue;
      const auto& nu = net.reaction(k).net;
      for (std::size_t i = 0; i < nu.size(); ++i) next[i] += fired * nu[i];
    }
    recorder.advance(times[n + 1], mirror);
    z = std::move(next);
    mirror = detail::as_real(z);
    recorder.jump(times[n + 1], mirror);
  }
  recorder.finish(T, mirror);
}

inline Path ssa_path(const ReactionNetwork& net, std::span<const std::int64_t> x0, double T,
                     const ScalingSpec& scaling, Stream& stream, const CutoffSpec& cutoff = {}) {
  if (!(T > 0.0)) throw std::invalid_argument("horizon T must be positive");
  PathRecorder rec(net.dimension(), T);
  run_ssa(net, x0, T, stream, rec, cutoff, scaling.V);
  return rec.take();
}

inline Path euler_tau_path(const ReactionNetwork& net, std::span<const std::int64_t> x0, const GridSpec& grid,
                           const ScalingSpec& scaling, Stream& stream, const CutoffSpec& cutoff = {}) {
  grid.validate();
  PathRecorder rec(net.dimension(), grid.T);
  run_tau_leap(net, x0, grid.T, grid.h, LeapMethod::kEuler, stream, rec, cutoff, scaling.V);
  return rec.take();
}

inline Path midpoint_tau_path(const ReactionNetwork& net, std::span<const std::int64_t> x0,
                              const GridSpec& grid, const ScalingSpec& scaling, Stream& stream,
                              const CutoffSpec& cutoff = {}) {
  grid.validate();
  PathRecorder rec(net.dimension(), grid.T);
  run_tau_leap(net, x0, grid.T, grid.h, LeapMethod::kMidpoint, stream, rec, cutoff, scaling.V);
  return rec.take();
}

/// Solution of the deterministic limit x' = F(x) on uniform RK4 knots, with
/// cubic Hermite interpolation in between.
class DenseTrajectory {
 public:
  DenseTrajectory(std::vector<double> times, std::vector<Vector> states, std::vector<Vector> slopes)
      : times_(std::move(times)), states_(std::move(states)), slopes_(std::move(slopes)) {}

  double horizon() const { return times_.back(); }
  std::size_t dimension() const { return static_cast<std::size_t>(states_.front().size()); }
  const std::vector<double>& knots() const { return times_; }
  const Vector& knot_state(std::size_t i) const { return states_[i]; }

  Vector at(double t) const {
    if (t < 0.0 || t > horizon() * (1.0 + 1e-12)) throw std::out_of_range("time outside ODE horizon");
    t = std::min(t, horizon());
    auto it = std::upper_bound(times_.begin(), times_.end(), t);
    std::size_t i = static_cast<std::size_t>(it - times_.begin());
    i = std::clamp<std::size_t>(i, 1, times_.size() - 1) - 1;
    const double h = times_[i + 1] - times_[i];
    const double s = (t - times_[i]) / h;
    const double s2 = s * s;
    const double s3 = s2 * s;
    return (2 * s3 - 3 * s2 + 1) * states_[i] + (s3 - 2 * s2 + s) * h * slopes_[i] +
           (-2 * s3 + 3 * s2) * states_[i + 1] + (s3 - s2) * h * slopes_[i + 1];
  }

  /// Knot values as a Path (for output).
  Path to_path() const {
    Path p(dimension(), horizon());
    for (std::size_t i = 0; i < times_.size(); ++i) {
      p.push(times_[i], std::span<const double>(states_[i].data(), states_[i].size()));
    }
    return p;
  }

 private:
  std::vector<double> times_;
  std::vector<Vector> states_;
  std::vector<Vector> slopes_;
};

/// Classical RK4 for the deterministic mass-action ODE. `step` is rounded down
/// so that an integer number of steps covers [0, T].
inline DenseTrajectory ode_limit(const ReactionNetwork& net, const Vector& x0, double T, double step,
                                 const ScalingSpec& scaling) {
  if (!(T > 0.0) || !(step > 0.0)) throw std::invalid_argument("T and step must be positive");
  if (static_cast<std::size_t>(x0.size()) != net.dimension()) throw std::invalid_argument("x0 dimension");
  if ((x0.array() < 0.0).any()) throw std::invalid_argument("x0 must be in the nonnegative orthant");
  const auto n = static_cast<std::size_t>(std::ceil(T / step - 1e-9));
  const double dt = T / static_cast<double>(n);
  auto F = [&](const Vector& x) { return drift(net, x, scaling, true); };

  std::vector<double> times(n + 1);
  std::vector<Vector> states(n + 1), slopes(n + 1);
  Vector x = x0;
  for (std::size_t i = 0; i <= n; ++i) {
    times[i] = static_cast<double>(i) * dt;
    states[i] = x;
    slopes[i] = F(x);
    if (!x.allFinite() || !slopes[i].allFinite()) {
      throw SimulationError("ODE solution became non-finite at t = " + std::to_string(times[i]));
    }
    if (i == n) break;
    const Vector k1 = slopes[i];
    const Vector k2 = F(x + 0.5 * dt * k1);
    const Vector k3 = F(x + 0.5 * dt * k2);
    const Vector k4 = F(x + dt * k3);
    x += dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
  }
  times[n] = T;
  return DenseTrajectory(std::move(times), std::move(states), std::move(slopes));
}

}  // namespace tauleap
