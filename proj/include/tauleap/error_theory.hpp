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
#include <functional>
#include <random>
#include <stdexcept>
#include <vector>

#include <Eigen/Eigenvalues>

#include "tauleap/model.hpp"
#include "tauleap/simulate.hpp"
#include "tauleap/stochastics.hpp"

namespace tauleap {

/// Which limiting error object: the Euler bias process, the midpoint bias
/// process, or the two Gaussian midpoint limits.
enum class ErrorKind { kE, kE1, kE2, kE3 };

inline const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::kE: return "E";
    case ErrorKind::kE1: return "E1";
    case ErrorKind::kE2: return "E2";
    case ErrorKind::kE3: return "E3";
  }
  return "?";
}

struct ErrorOdeSolution {
  ErrorKind kind = ErrorKind::kE;
  std::vector<double> times;
  std::vector<Vector> values;

  /// Linear interpolation between grid values.
  Vector at(double t) const {
    if (t < times.front() || t > times.back() * (1.0 + 1e-12)) throw std::out_of_range("time outside solution");
    auto it = std::upper_bound(times.begin(), times.end(), t);
    if (it == times.end()) return values.back();
    const auto i = static_cast<std::size_t>(it - times.begin()) - 1;
    const double w = (t - times[i]) / (times[i + 1] - times[i]);
    return (1.0 - w) * values[i] + w * values[i + 1];
  }
};

struct GaussianLimitSample {
  ErrorKind kind = ErrorKind::kE3;
  std::vector<double> times;
  std::vector<Vector> values;
  std::vector<Matrix> qv_increments;  // [M]_{t_{i+1}} - [M]_{t_i}
};

namespace detail {

inline void check_horizon(const DenseTrajectory& traj, double T) {
  if (traj.horizon() < T * (1.0 - 1e-12)) {
    throw std::invalid_argument("deterministic trajectory ends before the requested horizon");
  }
}

/// Composite Simpson over [a, b] with panels no wider than the trajectory's
/// knot spacing.
template <class Value, class Integrand>
Value simpson(const DenseTrajectory& traj, double a, double b, Integrand&& f) {
  const auto& knots = traj.knots();
  const double spacing = knots.size() > 1 ? knots[1] - knots[0] : (b - a);
  const auto panels = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil((b - a) / spacing - 1e-9)));
  const double w = (b - a) / static_cast<double>(panels);
  Value sum = f(a) * 0.0;
  for (std::size_t p = 0; p < panels; ++p) {
    const double lo = a + static_cast<double>(p) * w;
    sum += (w / 6.0) * (f(lo) + 4.0 * f(lo + 0.5 * w) + f(lo + w));
  }
  return sum;
}

/// FᵀHF F: the vector whose i-th entry is F^T HF_i F.
inline Vector quadratic_form(const Hessian& H, const Vector& F) {
  Vector out(static_cast<Eigen::Index>(H.size()));
  for (std::size_t i = 0; i < H.size(); ++i) out[static_cast<Eigen::Index>(i)] = F.dot(H[i] * F);
  return out;
}

/// Integrand of H(t): (1/6) DF^2 F + (1/24) F^T HF F.
inline Vector midpoint_forcing(const ReactionNetwork& net, const ScalingSpec& scaling, const Vector& x) {
  const Vector F = drift(net, x, scaling, true);
  const Matrix DF = drift_jacobian(net, x, scaling);
  return DF * (DF * F) / 6.0 + quadratic_form(drift_hessian(net, x, scaling), F) / 24.0;
}

inline Vector euler_forcing(const ReactionNetwork& net, const ScalingSpec& scaling, const Vector& x) {
  return 0.5 * drift_jacobian(net, x, scaling) * drift(net, x, scaling, true);
}

inline Matrix qv_m_density(const ReactionNetwork& net, const ScalingSpec& scaling, const Vector& x) {
  const auto d = static_cast<Eigen::Index>(net.dimension());
  const Vector F = drift(net, x, scaling, true);
  Matrix out = Matrix::Zero(d, d);
  for (std::size_t k = 0; k < net.num_reactions(); ++k) {
    const double w = 0.25 * std::fabs(deterministic_rate_gradient(net, k, x, scaling).dot(F));
    const auto& nu = net.reaction(k).net;
    Vector v(d);
    for (Eigen::Index i = 0; i < d; ++i) v[i] = nu[static_cast<std::size_t>(i)];
    out += w * v * v.transpose();
  }
  return out;
}

inline Matrix qv_m1_density(const ReactionNetwork& net, const ScalingSpec& scaling, const Vector& x) {
  const auto d = static_cast<Eigen::Index>(net.dimension());
  const Matrix DF = drift_jacobian(net, x, scaling);
  Matrix out = Matrix::Zero(d, d);
  for (std::size_t k = 0; k < net.num_reactions(); ++k) {
    const auto& nu = net.reaction(k).net;
    Vector v(d);
    for (Eigen::Index i = 0; i < d; ++i) v[i] = nu[static_cast<std::size_t>(i)];
    const Vector Dv = DF * v;
    out += deterministic_rate(net, k, x, scaling) * Dv * Dv.transpose();
  }
  return out / 3.0;
}

/// RK4 for E' = DF(x(t)) E + g(x(t)), E(0) = 0.
template <class Forcing>
ErrorOdeSolution solve_linear_error_ode(const ReactionNetwork& net, const ScalingSpec& scaling,
                                        const DenseTrajectory& traj, double T, double step, ErrorKind kind,
                                        Forcing&& forcing) {
  check_horizon(traj, T);
  if (!(T > 0.0) || !(step > 0.0)) throw std::invalid_argument("T and step must be positive");
  const auto n = static_cast<std::size_t>(std::ceil(T / step - 1e-9));
  const double dt = T / static_cast<double>(n);
  auto rhs = [&](double t, const Vector& e) {
    const Vector x = traj.at(t);
    return Vector(drift_jacobian(net, x, scaling) * e + forcing(x));
  };
  ErrorOdeSolution sol;
  sol.kind = kind;
  sol.times.resize(n + 1);
  sol.values.resize(n + 1);
  Vector e = Vector::Zero(static_cast<Eigen::Index>(net.dimension()));
  for (std::size_t i = 0; i <= n; ++i) {
    const double t = static_cast<double>(i) * dt;
    sol.times[i] = t;
    sol.values[i] = e;
    if (i == n) break;
    const Vector k1 = rhs(t, e);
    const Vector k2 = rhs(t + 0.5 * dt, e + 0.5 * dt * k1);
    const Vector k3 = rhs(t + 0.5 * dt, e + 0.5 * dt * k2);
    const Vector k4 = rhs(t + dt, e + dt * k3);
    e += dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
  }
  sol.times[n] = T;
  return sol;
}

}  // namespace detail

/// Limit of V^beta (X^V - Z^V) for Euler tau-leaping:
/// E' = DF(x) E + (1/2) DF(x) F(x), E(0) = 0.
inline ErrorOdeSolution solve_error_ode_euler(const ReactionNetwork& net, const ScalingSpec& scaling,
                                              const DenseTrajectory& traj, double T, double step) {
  return detail::solve_linear_error_ode(net, scaling, traj, T, step, ErrorKind::kE,
                                        [&](const Vector& x) { return detail::euler_forcing(net, scaling, x); });
}

/// Limit of V^{2 beta}(X^V - Z^V - R^V) for midpoint tau-leaping with beta < 1/3:
/// E1' = DF(x) E1 + (1/6) DF(x)^2 F(x) + (1/24) F^T HF(x) F.
inline ErrorOdeSolution solve_error_ode_midpoint(const ReactionNetwork& net, const ScalingSpec& scaling,
                                                 const DenseTrajectory& traj, double T, double step) {
  return detail::solve_linear_error_ode(net, scaling, traj, T, step, ErrorKind::kE1, [&](const Vector& x) {
    return detail::midpoint_forcing(net, scaling, x);
  });
}

/// [M]_t = sum_k (1/4) int_0^t |grad lambda_k(x) . F(x)| ds nu_k nu_k^T.
inline Matrix quadratic_variation_M(const ReactionNetwork& net, const ScalingSpec& scaling,
                                    const DenseTrajectory& traj, double t) {
  detail::check_horizon(traj, t);
  const auto d = static_cast<Eigen::Index>(net.dimension());
  if (t <= 0.0) return Matrix::Zero(d, d);
  return detail::simpson<Matrix>(traj, 0.0, t,
                                 [&](double s) { return detail::qv_m_density(net, scaling, traj.at(s)); });
}

/// [M1]_t = (1/3) int_0^t sum_k lambda_k(x) DF nu_k nu_k^T DF^T ds.
inline Matrix quadratic_variation_M1(const ReactionNetwork& net, const ScalingSpec& scaling,
                                     const DenseTrajectory& traj, double t) {
  detail::check_horizon(traj, t);
  const auto d = static_cast<Eigen::Index>(net.dimension());
  if (t <= 0.0) return Matrix::Zero(d, d);
  return detail::simpson<Matrix>(traj, 0.0, t,
                                 [&](double s) { return detail::qv_m1_density(net, scaling, traj.at(s)); });
}

/// H(t) = int_0^t (1/6) DF^2 F + (1/24) F^T HF F ds.
inline Vector midpoint_bias_integral(const ReactionNetwork& net, const ScalingSpec& scaling,
                                     const DenseTrajectory& traj, double t) {
  detail::check_horizon(traj, t);
  if (t <= 0.0) return Vector::Zero(static_cast<Eigen::Index>(net.dimension()));
  return detail::simpson<Vector>(traj, 0.0, t,
                                 [&](double s) { return detail::midpoint_forcing(net, scaling, traj.at(s)); });
}

/// Draws realizations of E2 (beta = 1/3) or E3 (beta > 1/3):
/// on each cell, dM ~ N(0, [M]_{t+dt} - [M]_t) exactly, and
/// E <- E + DF(x(t)) E dt + dH (E2 only) + dM.
class LimitProcessSampler {
 public:
  LimitProcessSampler(ErrorKind kind, const ReactionNetwork& net, const ScalingSpec& scaling,
                      const DenseTrajectory& traj, double T, std::size_t cells)
      : kind_(kind) {
    if (kind != ErrorKind::kE2 && kind != ErrorKind::kE3) throw std::invalid_argument("kind must be E2 or E3");
    if (cells == 0) throw std::invalid_argument("need at least one cell");
    detail::check_horizon(traj, T);
    const double dt = T / static_cast<double>(cells);
    const auto d = static_cast<Eigen::Index>(net.dimension());
    times_.resize(cells + 1);
    for (std::size_t i = 0; i <= cells; ++i) times_[i] = static_cast<double>(i) * dt;
    times_[cells] = T;
    for (std::size_t i = 0; i < cells; ++i) {
      const double a = times_[i], b = times_[i + 1];
      Matrix dq = detail::simpson<Matrix>(traj, a, b,
                                          [&](double s) { return detail::qv_m_density(net, scaling, traj.at(s)); });
      dq = 0.5 * (dq + dq.transpose());
      Eigen::SelfAdjointEigenSolver<Matrix> eig(dq);
      const Vector roots = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
      factors_.push_back(eig.eigenvectors() * roots.asDiagonal());
      increments_.push_back(std::move(dq));
      steps_.push_back(Matrix::Identity(d, d) + (b - a) * drift_jacobian(net, traj.at(a), scaling));
      if (kind == ErrorKind::kE2) {
        drifts_.push_back(detail::simpson<Vector>(
            traj, a, b, [&](double s) { return detail::midpoint_forcing(net, scaling, traj.at(s)); }));
      } else {
        drifts_.push_back(Vector::Zero(d));
      }
    }
  }

  GaussianLimitSample sample(Stream& stream) const {
    GaussianLimitSample out;
    out.kind = kind_;
    out.times = times_;
    out.qv_increments = increments_;
    out.values.reserve(times_.size());
    run(stream, [&](const Vector& e) { out.values.push_back(e); });
    return out;
  }

  /// Value at T only, without materializing the path.
  Vector sample_terminal(Stream& stream) const {
    return run(stream, [](const Vector&) {});
  }

  const std::vector<double>& times() const { return times_; }

 private:
  template <class Visit>
  Vector run(Stream& stream, Visit&& visit) const {
    const Eigen::Index d = factors_.front().rows();
    std::normal_distribution<double> normal;
    Vector e = Vector::Zero(d), next(d), xi(d);
    visit(e);
    for (std::size_t i = 0; i < factors_.size(); ++i) {
      for (Eigen::Index j = 0; j < d; ++j) xi[j] = normal(stream);
      next.noalias() = steps_[i] * e;
      next.noalias() += factors_[i] * xi;
      next += drifts_[i];
      e.swap(next);
      visit(e);
    }
    return e;
  }

  ErrorKind kind_;
  std::vector<double> times_;
  std::vector<Matrix> increments_;
  std::vector<Matrix> factors_;
  std::vector<Matrix> steps_;  // I + DF(x(t_i)) dt
  std::vector<Vector> drifts_;
};

inline GaussianLimitSample sample_limit_process(ErrorKind kind, const ReactionNetwork& net,
                                                const ScalingSpec& scaling, const DenseTrajectory& traj, double T,
                                                std::size_t cells, Stream& stream) {
  return LimitProcessSampler(kind, net, scaling, traj, T, cells).sample(stream);
}

/// R^V(t) = (1/2)[(t - eta)^2 - (t - eta) h] DF^V(rho^V(z)) F^V(z), with z the
/// normalized state frozen at the grid time eta <= t.
inline Vector remainder_RV(const ReactionNetwork& net, const ScalingSpec& scaling, const Vector& z_eta, double t,
                           double eta) {
  const double s = t - eta;
  const double factor = 0.5 * (s * s - s * scaling.h);
  if (factor == 0.0) return Vector::Zero(z_eta.size());
  const Vector rho = midpoint_predictor(z_eta, net, scaling);
  return factor * (scaled_drift_jacobian(net, rho, scaling) * drift(net, z_eta, scaling, false));
}

/// Same, with eta(t) = floor(t / h) h.
inline Vector remainder_RV(const ReactionNetwork& net, const ScalingSpec& scaling, const Vector& z_eta, double t) {
  const double cells = std::floor(t / scaling.h * (1.0 + 1e-12));
  return remainder_RV(net, scaling, z_eta, t, cells * scaling.h);
}

class NoExactConstant : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Leading-order weak bias E f(X^V(T)) - E f(A^V(T)) in normalized units:
/// V^{-beta} E(T).grad f (Euler) or V^{-2 beta} E1(T).grad f (midpoint,
/// beta < 1/3 only).
inline double predict_weak_bias(LeapMethod method, const Vector& grad_f, const ErrorOdeSolution& solution,
                                const ScalingSpec& scaling) {
  const Vector& end = solution.values.back();
  if (method == LeapMethod::kEuler) {
    if (solution.kind != ErrorKind::kE) throw std::invalid_argument("Euler prediction needs the E solution");
    return std::pow(scaling.V, -scaling.beta) * end.dot(grad_f);
  }
  if (!(scaling.beta < 1.0 / 3.0)) {
    throw NoExactConstant("no exact constant available for the midpoint weak error when beta >= 1/3");
  }
  if (solution.kind != ErrorKind::kE1) throw std::invalid_argument("midpoint prediction needs the E1 solution");
  return std::pow(scaling.V, -2.0 * scaling.beta) * end.dot(grad_f);
}

}  // namespace tauleap
