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
#include <cctype>
#include <cstdint>
#include <limits>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace tauleap {

using CountVector = std::vector<std::int64_t>;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
/// Second derivative of a vector field: entry i is the Hessian of component i.
using Hessian = std::vector<Matrix>;

class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One reaction channel. `rate_constant` is the stochastic constant c_k,
/// i.e. the combinatorial 1/prod(source!) factor is already folded in.
struct Reaction {
  std::vector<int> source;
  std::vector<int> product;
  std::vector<int> net;
  double rate_constant = 0.0;

  /// Total number of molecules consumed (the reaction order).
  int order() const {
    int total = 0;
    for (int s : source) total += s;
    return total;
  }
};

class ReactionNetwork {
 public:
  ReactionNetwork() = default;

  ReactionNetwork(std::vector<std::string> species, std::vector<Reaction> reactions)
      : species_(std::move(species)), reactions_(std::move(reactions)) {
    const std::size_t d = species_.size();
    if (d == 0) throw ModelError("network must declare at least one species");
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = i + 1; j < d; ++j) {
        if (species_[i] == species_[j]) {
          throw ModelError("duplicate species declaration '" + species_[i] + "'");
        }
      }
    }
    reactants_.resize(reactions_.size());
    for (std::size_t k = 0; k < reactions_.size(); ++k) {
      Reaction& r = reactions_[k];
      if (r.source.size() != d || r.product.size() != d) {
        throw ModelError("reaction " + std::to_string(k) + " has wrong vector length");
      }
      if (!(r.rate_constant > 0.0) || !std::isfinite(r.rate_constant)) {
        throw ModelError("reaction " + std::to_string(k) + " has non-positive rate constant");
      }
      r.net.assign(d, 0);
      for (std::size_t l = 0; l < d; ++l) {
        if (r.source[l] < 0 || r.product[l] < 0) {
          throw ModelError("reaction " + std::to_string(k) + " has negative stoichiometry");
        }
        r.net[l] = r.product[l] - r.source[l];
        if (r.source[l] > 0) reactants_[k].emplace_back(l, r.source[l]);
      }
    }
  }

  std::size_t dimension() const { return species_.size(); }
  std::size_t num_reactions() const { return reactions_.size(); }
  const std::vector<std::string>& species_names() const { return species_; }
  const std::vector<Reaction>& reactions() const { return reactions_; }
  const Reaction& reaction(std::size_t k) const { return reactions_.at(k); }

  /// Sparse (species index, source count) list of reaction k.
  const std::vector<std::pair<std::size_t, int>>& reactants(std::size_t k) const {
    return reactants_[k];
  }

  std::size_t species_index(std::string_view name) const {
    for (std::size_t i = 0; i < species_.size(); ++i) {
      if (species_[i] == name) return i;
    }
    throw ModelError("unknown species '" + std::string(name) + "'");
  }

  /// Copy of this network with every stochastic constant re-expressed at a
  /// new system size, keeping the deterministic constants d_k fixed.
  ReactionNetwork rescaled(double from_volume, double to_volume) const {
    std::vector<Reaction> out = reactions_;
    for (auto& r : out) {
      r.rate_constant *= std::pow(to_volume / from_volume, 1.0 - r.order());
    }
    return ReactionNetwork(species_, std::move(out));
  }

 private:
  std::vector<std::string> species_;
  std::vector<Reaction> reactions_;
  std::vector<std::vector<std::pair<std::size_t, int>>> reactants_;
};

/// System size V, step exponent beta, and the quantities derived from them.
struct ScalingSpec {
  double V = 1.0;
  double beta = 0.5;
  double h = 1.0;                    // V^(-beta)
  std::vector<double> deterministic; // d_k = c_k V^(|source_k| - 1)

  static ScalingSpec make(const ReactionNetwork& net, double V, double beta) {
    if (!(V > 0.0) || !std::isfinite(V)) throw std::invalid_argument("V must be positive");
    if (!(beta > 0.0 && beta < 1.0)) throw std::invalid_argument("beta must lie in (0,1)");
    ScalingSpec s;
    s.V = V;
    s.beta = beta;
    s.h = std::pow(V, -beta);
    s.deterministic.reserve(net.num_reactions());
    for (const auto& r : net.reactions()) {
      s.deterministic.push_back(r.rate_constant * std::pow(V, r.order() - 1));
    }
    return s;
  }

  /// Picks beta so that V^(-beta) equals the requested step exactly.
  static ScalingSpec from_step(const ReactionNetwork& net, double V, double step) {
    if (!(V > 1.0)) throw std::invalid_argument("V must exceed 1 to derive beta from a step");
    ScalingSpec s = make(net, V, -std::log(step) / std::log(V));
    s.h = step;
    return s;
  }
};

/// Smooth truncation gamma(x) of the kinetics outside a box. Disabled means
/// gamma == 1 everywhere.
struct CutoffSpec {
  bool enabled = false;
  std::vector<double> box_lower;
  std::vector<double> box_upper;
  double margin = 1.0;

  double operator()(std::span<const double> x) const {
    if (!enabled) return 1.0;
    double g = 1.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      double dist = std::max(box_lower.at(i) - x[i], x[i] - box_upper.at(i));
      if (dist <= 0.0) continue;
      if (dist >= margin) return 0.0;
      const double s = dist / margin;
      g *= 1.0 - s * s * (3.0 - 2.0 * s);
    }
    return g;
  }
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

inline std::vector<std::string> split_ws(std::string_view s) {
  std::vector<std::string> out;
  std::istringstream in{std::string(s)};
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

inline double cutoff_factor(const CutoffSpec& cutoff, std::span<const std::int64_t> state, double V) {
  if (!cutoff.enabled) return 1.0;
  std::vector<double> x(state.size());
  for (std::size_t i = 0; i < state.size(); ++i) x[i] = static_cast<double>(state[i]) / V;
  return cutoff(x);
}

}  // namespace detail

/// Parses the line-oriented model format:
///
///     # comment
///     species A B
///     reaction 1.0 : A -> B
///
/// Sides list species names, repeated or prefixed by an integer coefficient
/// (`A A` or `2 A`); an empty side or the token `∅` is the empty complex.
inline ReactionNetwork parse_network(std::string_view text) {
  std::vector<std::string> species;
  std::unordered_map<std::string, std::size_t> index;
  struct Pending {
    int line;
    double rate;
    std::vector<std::string> lhs, rhs;
  };
  std::vector<Pending> pending;

  auto fail = [](int line, const std::string& msg) -> ModelError {
    return ModelError("line " + std::to_string(line) + ": " + msg);
  };

  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = raw.substr(0, raw.find('#'));
    line = detail::trim(line);
    if (line.empty()) continue;
    auto words = detail::split_ws(line);
    const std::string& keyword = words.front();
    if (keyword == "species") {
      if (words.size() < 2) throw fail(line_no, "species line declares no names");
      for (std::size_t i = 1; i < words.size(); ++i) {
        if (index.contains(words[i])) {
          throw fail(line_no, "duplicate species declaration '" + words[i] + "'");
        }
        index.emplace(words[i], species.size());
        species.push_back(words[i]);
      }
    } else if (keyword == "reaction") {
      std::string body = detail::trim(std::string_view(line).substr(keyword.size()));
      const auto colon = body.find(':');
      if (colon == std::string::npos) throw fail(line_no, "expected ':' after rate");
      const std::string rate_text = detail::trim(std::string_view(body).substr(0, colon));
      double rate = 0.0;
      try {
        std::size_t used = 0;
        rate = std::stod(rate_text, &used);
        if (used != rate_text.size()) throw std::invalid_argument(rate_text);
      } catch (const std::exception&) {
        throw fail(line_no, "malformed rate constant '" + rate_text + "'");
      }
      if (!(rate > 0.0) || !std::isfinite(rate)) throw fail(line_no, "non-positive rate constant");
      const std::string eq = body.substr(colon + 1);
      const auto arrow = eq.find("->");
      if (arrow == std::string::npos) throw fail(line_no, "expected '->'");
      if (eq.find("->", arrow + 2) != std::string::npos) throw fail(line_no, "more than one '->'");
      Pending p{line_no, rate, detail::split_ws(eq.substr(0, arrow)),
                detail::split_ws(eq.substr(arrow + 2))};
      pending.push_back(std::move(p));
    } else {
      throw fail(line_no, "unrecognized keyword '" + keyword + "'");
    }
  }
  std::vector<Reaction> reactions;
  for (const auto& p : pending) {
    Reaction r;
    r.source.assign(species.size(), 0);
    r.product.assign(species.size(), 0);
    r.rate_constant = p.rate;
    auto fill = [&](const std::vector<std::string>& side, std::vector<int>& counts) {
      int multiplier = 0;
      for (const auto& name : side) {
        if (name == "∅") continue;
        if (std::all_of(name.begin(), name.end(), [](unsigned char c) { return std::isdigit(c); })) {
          if (multiplier) throw fail(p.line, "two stoichiometric coefficients in a row");
          multiplier = std::stoi(name);
          if (multiplier == 0) throw fail(p.line, "zero stoichiometric coefficient");
          continue;
        }
        auto it = index.find(name);
        if (it == index.end()) throw fail(p.line, "unknown species '" + name + "'");
        counts[it->second] += multiplier ? multiplier : 1;
        multiplier = 0;
      }
      if (multiplier) throw fail(p.line, "coefficient without a species");
    };
    fill(p.lhs, r.source);
    fill(p.rhs, r.product);
    reactions.push_back(std::move(r));
  }
  if (species.empty()) throw ModelError("model declares no species");
  return ReactionNetwork(std::move(species), std::move(reactions));
}

/// Mass-action intensity lambda_k at an integer copy-number state, zero
/// outside the nonnegative orthant.
inline double intensity(const ReactionNetwork& net, std::size_t k, std::span<const std::int64_t> state,
                        const CutoffSpec& cutoff = {}, double V = 1.0) {
  for (auto n : state) {
    if (n < 0) return 0.0;
  }
  double rate = net.reaction(k).rate_constant;
  for (const auto& [l, count] : net.reactants(k)) {
    const std::int64_t n = state[l];
    if (n < count) return 0.0;
    for (int i = 0; i < count; ++i) rate *= static_cast<double>(n - i);
  }
  if (cutoff.enabled) rate *= detail::cutoff_factor(cutoff, state, V);
  return rate;
}

/// Intensity at a real-valued copy-number state. Each falling-factorial factor
/// is clamped at zero, so the result is nonnegative and agrees with the integer
/// form at integer points.
inline double intensity_real(const ReactionNetwork& net, std::size_t k, std::span<const double> state,
                             const CutoffSpec& cutoff = {}, double V = 1.0) {
  for (double n : state) {
    if (n < 0.0) return 0.0;
  }
  double rate = net.reaction(k).rate_constant;
  for (const auto& [l, count] : net.reactants(k)) {
    for (int i = 0; i < count; ++i) rate *= std::max(state[l] - i, 0.0);
  }
  if (cutoff.enabled && rate > 0.0) {
    std::vector<double> x(state.begin(), state.end());
    for (double& v : x) v /= V;
    rate *= cutoff(x);
  }
  return rate;
}

/// A_k^V(x) = lambda_k(V x) / V for a normalized state x.
inline double scaled_intensity(const ReactionNetwork& net, std::size_t k, const Vector& x,
                               const ScalingSpec& scaling, const CutoffSpec& cutoff = {}) {
  Vector counts = scaling.V * x;
  return intensity_real(net, k, std::span<const double>(counts.data(), counts.size()), cutoff, scaling.V) /
         scaling.V;
}

/// Deterministic mass-action rate d_k x^{source_k}.
inline double deterministic_rate(const ReactionNetwork& net, std::size_t k, const Vector& x,
                                 const ScalingSpec& scaling) {
  double rate = scaling.deterministic.at(k);
  for (const auto& [l, count] : net.reactants(k)) rate *= std::pow(x[l], count);
  return rate;
}

/// Gradient of deterministic_rate with respect to x.
inline Vector deterministic_rate_gradient(const ReactionNetwork& net, std::size_t k, const Vector& x,
                                          const ScalingSpec& scaling) {
  Vector g = Vector::Zero(net.dimension());
  const auto& reactants = net.reactants(k);
  for (const auto& [j, cj] : reactants) {
    double term = scaling.deterministic[k] * cj * std::pow(x[j], cj - 1);
    for (const auto& [l, cl] : reactants) {
      if (l != j) term *= std::pow(x[l], cl);
    }
    g[j] = term;
  }
  return g;
}

/// F(x) = sum_k d_k x^{source_k} nu_k when `deterministic`, otherwise
/// F^V(x) = sum_k A_k^V(x) nu_k.
inline Vector drift(const ReactionNetwork& net, const Vector& x, const ScalingSpec& scaling,
                    bool deterministic = true, const CutoffSpec& cutoff = {}) {
  Vector f = Vector::Zero(net.dimension());
  for (std::size_t k = 0; k < net.num_reactions(); ++k) {
    const double rate = deterministic ? deterministic_rate(net, k, x, scaling)
                                      : scaled_intensity(net, k, x, scaling, cutoff);
    const auto& nu = net.reaction(k).net;
    for (std::size_t i = 0; i < nu.size(); ++i) f[i] += rate * nu[i];
  }
  return f;
}

/// DF(x) for the deterministic drift, DF_ij = dF_i/dx_j.
inline Matrix drift_jacobian(const ReactionNetwork& net, const Vector& x, const ScalingSpec& scaling) {
  const auto d = static_cast<Eigen::Index>(net.dimension());
  Matrix J = Matrix::Zero(d, d);
  for (std::size_t k = 0; k < net.num_reactions(); ++k) {
    const Vector g = deterministic_rate_gradient(net, k, x, scaling);
    const auto& nu = net.reaction(k).net;
    for (Eigen::Index i = 0; i < d; ++i) {
      if (nu[i] != 0) J.row(i) += nu[i] * g.transpose();
    }
  }
  return J;
}

/// HF(x) for the deterministic drift, HF[i](j,l) = d^2 F_i / dx_j dx_l.
inline Hessian drift_hessian(const ReactionNetwork& net, const Vector& x, const ScalingSpec& scaling) {
  const auto d = static_cast<Eigen::Index>(net.dimension());
  Hessian H(net.dimension(), Matrix::Zero(d, d));
  for (std::size_t k = 0; k < net.num_reactions(); ++k) {
    const auto& reactants = net.reactants(k);
    Matrix second = Matrix::Zero(d, d);
    for (const auto& [j, cj] : reactants) {
      for (const auto& [m, cm] : reactants) {
        double term = scaling.deterministic[k];
        if (j == m) {
          if (cj < 2) continue;
          term *= cj * (cj - 1) * std::pow(x[j], cj - 2);
        } else {
          term *= cj * std::pow(x[j], cj - 1) * cm * std::pow(x[m], cm - 1);
        }
        for (const auto& [l, cl] : reactants) {
          if (l != j && l != m) term *= std::pow(x[l], cl);
        }
        second(j, m) = term;
      }
    }
    const auto& nu = net.reaction(k).net;
    for (std::size_t i = 0; i < nu.size(); ++i) {
      if (nu[i] != 0) H[i] += nu[i] * second;
    }
  }
  return H;
}

/// Jacobian of the scaled drift F^V, differentiating the falling-factorial
/// polynomial (unclamped, no cutoff).
inline Matrix scaled_drift_jacobian(const ReactionNetwork& net, const Vector& x, const ScalingSpec& scaling) {
  const auto d = static_cast<Eigen::Index>(net.dimension());
  const double V = scaling.V;
  Matrix J = Matrix::Zero(d, d);
  for (std::size_t k = 0; k < net.num_reactions(); ++k) {
    const auto& reactants = net.reactants(k);
    const double c = net.reaction(k).rate_constant;
    for (const auto& [j, cj] : reactants) {
      // d/dx_j of prod_i (V x_j - i) = V * sum_i prod_{i' != i} (V x_j - i')
      double dfactor = 0.0;
      for (int i = 0; i < cj; ++i) {
        double p = V;
        for (int ip = 0; ip < cj; ++ip) {
          if (ip != i) p *= V * x[j] - ip;
        }
        dfactor += p;
      }
      double term = c / V * dfactor;
      for (const auto& [l, cl] : reactants) {
        if (l == j) continue;
        for (int i = 0; i < cl; ++i) term *= V * x[l] - i;
      }
      const auto& nu = net.reaction(k).net;
      for (Eigen::Index i = 0; i < d; ++i) J(i, static_cast<Eigen::Index>(j)) += nu[i] * term;
    }
  }
  return J;
}

/// Normalized midpoint predictor rho^V(z) = z + (h/2) F^V(z).
inline Vector midpoint_predictor(const Vector& z, const ReactionNetwork& net, const ScalingSpec& scaling,
                                 const CutoffSpec& cutoff = {}) {
  return z + 0.5 * scaling.h * drift(net, z, scaling, false, cutoff);
}

/// Copy-number predictor rho(z) = z + (step/2) sum_k lambda_k(z) nu_k.
inline std::vector<double> midpoint_predictor_counts(const ReactionNetwork& net, std::span<const double> z,
                                                     double step, const CutoffSpec& cutoff = {},
                                                     double V = 1.0) {
  std::vector<double> out(z.begin(), z.end());
  for (std::size_t k = 0; k < net.num_reactions(); ++k) {
    const double rate = intensity_real(net, k, z, cutoff, V);
    if (rate == 0.0) continue;
    const auto& nu = net.reaction(k).net;
    for (std::size_t i = 0; i < nu.size(); ++i) out[i] += 0.5 * step * rate * nu[i];
  }
  return out;
}

/// Strong-error exponent of midpoint tau-leaping, min{(1+beta)/2, 2 beta}.
inline double kappa(double beta) {
  if (!(beta > 0.0 && beta < 1.0)) throw std::invalid_argument("beta must lie in (0,1)");
  return std::min((1.0 + beta) / 2.0, 2.0 * beta);
}

inline double kappa1(double beta) {
  if (!(beta > 0.0 && beta < 1.0)) throw std::invalid_argument("beta must lie in (0,1)");
  return std::min(2.0 * beta, beta + 0.5);
}

}  // namespace tauleap
