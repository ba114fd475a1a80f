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
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace tauleap {

/// Piecewise-constant, right-continuous trajectory. States are stored flat,
/// `dim` values per recorded time.
class Path {
 public:
  Path() = default;
  Path(std::size_t dim, double horizon) : dim_(dim), horizon_(horizon) {}

  void push(double t, std::span<const double> state) {
    if (state.size() != dim_) throw std::invalid_argument("state dimension mismatch");
    if (!times_.empty() && !(t > times_.back())) {
      // Zero-length holding intervals collapse onto the later state.
      if (t == times_.back()) {
        std::copy(state.begin(), state.end(), states_.end() - static_cast<std::ptrdiff_t>(dim_));
        return;
      }
      throw std::invalid_argument("path times must increase");
    }
    times_.push_back(t);
    states_.insert(states_.end(), state.begin(), state.end());
  }

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return times_.size(); }
  double horizon() const { return horizon_; }
  bool normalized() const { return normalized_; }
  const std::vector<double>& times() const { return times_; }

  std::span<const double> state(std::size_t i) const {
    return {states_.data() + i * dim_, dim_};
  }

  /// State at the largest recorded time <= t.
  std::span<const double> at(double t) const {
    if (times_.empty()) throw std::logic_error("empty path");
    if (t < times_.front() || t > horizon_) throw std::out_of_range("evaluation time outside [0, T]");
    const auto it = std::upper_bound(times_.begin(), times_.end(), t);
    return state(static_cast<std::size_t>(it - times_.begin()) - 1);
  }

  Path normalize(double V) const {
    Path out = *this;
    for (double& v : out.states_) v /= V;
    out.normalized_ = true;
    return out;
  }

 private:
  std::size_t dim_ = 0;
  double horizon_ = 0.0;
  bool normalized_ = false;
  std::vector<double> times_;
  std::vector<double> states_;
};

inline std::vector<double> evaluate_at(const Path& path, double t) {
  auto s = path.at(t);
  return {s.begin(), s.end()};
}

inline Path normalize(const Path& path, double V) { return path.normalize(V); }

/// Horizon, leap step and the times at which errors are evaluated.
struct GridSpec {
  double T = 1.0;
  double h = 0.1;
  std::vector<double> eval_times;

  /// Leap grid t_n = n h, with the final point clipped to T.
  std::vector<double> leap_times() const {
    if (!(h > 0.0)) throw std::invalid_argument("step must be positive");
    std::vector<double> out{0.0};
    for (std::size_t n = 1;; ++n) {
      const double t = static_cast<double>(n) * h;
      // Steps shorter than a rounding residue are merged into the previous one.
      if (t >= T * (1.0 - 1e-12)) break;
      out.push_back(t);
    }
    out.push_back(T);
    return out;
  }

  /// Grid whose evaluation times are the leap grid points (including T).
  static GridSpec on_leap_grid(double T, double h) {
    GridSpec g{T, h, {}};
    g.eval_times = g.leap_times();
    return g;
  }

  void validate() const {
    if (!(T > 0.0)) throw std::invalid_argument("horizon T must be positive");
    if (!(h > 0.0)) throw std::invalid_argument("step h must be positive");
    for (std::size_t i = 0; i < eval_times.size(); ++i) {
      if (eval_times[i] < 0.0 || eval_times[i] > T) throw std::invalid_argument("eval time outside [0, T]");
      if (i > 0 && !(eval_times[i] > eval_times[i - 1])) throw std::invalid_argument("eval times must increase");
    }
  }
};

/// Records a full trajectory.
class PathRecorder {
 public:
  PathRecorder(std::size_t dim, double horizon) : path_(dim, horizon) {}

  void start(double t, std::span<const double> state) { path_.push(t, state); }
  /// `state` holds on [previous time, t); the caller then applies the jump.
  void advance(double, std::span<const double>) {}
  void jump(double t, std::span<const double> state) { path_.push(t, state); }
  void finish(double, std::span<const double>) {}

  Path take() { return std::move(path_); }

 private:
  Path path_;
};

/// Captures the state at a sorted list of times without storing the path.
class SnapshotRecorder {
 public:
  SnapshotRecorder(std::span<const double> times, std::size_t dim)
      : times_(times.begin(), times.end()), dim_(dim), values_(times.size() * dim) {}

  void start(double, std::span<const double>) {}
  void advance(double t, std::span<const double> state) {
    while (next_ < times_.size() && times_[next_] < t) fill(state);
  }
  void jump(double, std::span<const double>) {}
  void finish(double, std::span<const double> state) {
    while (next_ < times_.size()) fill(state);
  }

  const std::vector<double>& values() const { return values_; }
  std::vector<double> take() { return std::move(values_); }
  std::span<const double> at(std::size_t i) const { return {values_.data() + i * dim_, dim_}; }

 private:
  void fill(std::span<const double> state) {
    std::copy(state.begin(), state.end(), values_.begin() + static_cast<std::ptrdiff_t>(next_ * dim_));
    ++next_;
  }

  std::vector<double> times_;
  std::size_t dim_;
  std::vector<double> values_;
  std::size_t next_ = 0;
};

}  // namespace tauleap
