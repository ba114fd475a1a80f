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
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <boost/math/distributions/binomial.hpp>

#include "tauleap/coupling.hpp"
#include "tauleap/error_theory.hpp"
#include "tauleap/io.hpp"
#include "tauleap/model.hpp"
#include "tauleap/simulate.hpp"
#include "tauleap/stats.hpp"
#include "tauleap/stochastics.hpp"

namespace tauleap {

enum class Method { kSsa, kEuler, kMidpoint };

inline const char* to_string(Method m) {
  switch (m) {
    case Method::kSsa: return "ssa";
    case Method::kEuler: return "euler";
    case Method::kMidpoint: return "midpoint";
  }
  return "?";
}

inline Method to_method(LeapMethod m) { return m == LeapMethod::kEuler ? Method::kEuler : Method::kMidpoint; }

inline std::uint64_t channel_for(Method m) {
  switch (m) {
    case Method::kSsa: return channels::kSsa;
    case Method::kEuler: return channels::kEuler;
    case Method::kMidpoint: return channels::kMidpoint;
  }
  return channels::kSsa;
}

/// Runs fn(i) for i in [0, n) on up to `workers` threads. Work is handed out
/// dynamically; callers store results by index so the outcome does not depend
/// on scheduling.
template <class Fn>
void parallel_for(std::size_t n, std::size_t workers, Fn&& fn) {
  if (n == 0) return;
  workers = std::clamp<std::size_t>(workers, 1, n);
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        while (true) {
          const std::size_t i = next.fetch_add(1);
          if (i >= n) return;
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!error) error = std::current_exception();
            next.store(n);
            return;
          }
        }
      });
    }
  }
  if (error) std::rethrow_exception(error);
}

inline std::size_t default_workers() { return std::max(1u, std::thread::hardware_concurrency()); }

/// Scalar functional f of a copy-number state, used for weak errors.
class Functional {
 public:
  struct Term {
    double coefficient = 1.0;
    std::vector<int> exponents;
  };

  static Functional coordinate(std::size_t species) {
    Functional f;
    f.kind_ = Kind::kCoordinate;
    f.species_ = species;
    return f;
  }

  /// 1 when lo <= x_species < hi.
  static Functional indicator(std::size_t species, double lo, double hi) {
    Functional f;
    f.kind_ = Kind::kIndicator;
    f.species_ = species;
    f.lo_ = lo;
    f.hi_ = hi;
    return f;
  }

  static Functional polynomial(std::vector<Term> terms) {
    Functional f;
    f.kind_ = Kind::kPolynomial;
    f.terms_ = std::move(terms);
    return f;
  }

  /// Parses `coord:A`, `indicator:A:lo:hi`, or `poly:2*A^2*B+0.5*B+1`.
  static Functional parse(const std::string& text, const ReactionNetwork& net) {
    const auto colon = text.find(':');
    const std::string kind = text.substr(0, colon);
    const std::string rest = colon == std::string::npos ? "" : text.substr(colon + 1);
    if (kind == "coord" || kind == "id") return coordinate(net.species_index(rest));
    if (kind == "indicator") {
      std::vector<std::string> parts;
      std::stringstream ss(rest);
      std::string p;
      while (std::getline(ss, p, ':')) parts.push_back(p);
      if (parts.size() != 3) throw std::invalid_argument("indicator functional needs species:lo:hi");
      return indicator(net.species_index(parts[0]), std::stod(parts[1]), std::stod(parts[2]));
    }
    if (kind == "poly") {
      std::vector<Term> terms;
      std::string expr;
      for (char c : rest) {
        if (c != ' ') expr += c;
      }
      // Split on '+' and '-' that start a new term.
      std::vector<std::string> pieces;
      std::string cur;
      for (std::size_t i = 0; i < expr.size(); ++i) {
        const char c = expr[i];
        if ((c == '+' || c == '-') && i > 0 && expr[i - 1] != 'e' && expr[i - 1] != 'E' && expr[i - 1] != '^') {
          pieces.push_back(cur);
          cur = c == '-' ? "-" : "";
        } else {
          cur += c;
        }
      }
      pieces.push_back(cur);
      for (const auto& piece : pieces) {
        if (piece.empty()) throw std::invalid_argument("empty term in polynomial functional");
        Term t{1.0, std::vector<int>(net.dimension(), 0)};
        std::stringstream fs(piece);
        std::string factor;
        while (std::getline(fs, factor, '*')) {
          if (factor.empty()) throw std::invalid_argument("empty factor in polynomial functional");
          const bool numeric = std::isdigit(static_cast<unsigned char>(factor[0])) || factor[0] == '.' ||
                               ((factor[0] == '-' || factor[0] == '+') && factor.size() > 1 &&
                                (std::isdigit(static_cast<unsigned char>(factor[1])) || factor[1] == '.'));
          if (numeric) {
            t.coefficient *= std::stod(factor);
            continue;
          }
          std::string name = factor;
          double sign = 1.0;
          if (name[0] == '-') {
            sign = -1.0;
            name = name.substr(1);
          }
          int power = 1;
          const auto caret = name.find('^');
          if (caret != std::string::npos) {
            power = std::stoi(name.substr(caret + 1));
            name = name.substr(0, caret);
          }
          if (power < 0) throw std::invalid_argument("negative exponent in polynomial functional");
          t.coefficient *= sign;
          t.exponents[net.species_index(name)] += power;
        }
        terms.push_back(std::move(t));
      }
      return polynomial(std::move(terms));
    }
    throw std::invalid_argument("unknown functional '" + text + "'");
  }

  double operator()(std::span<const double> x) const {
    switch (kind_) {
      case Kind::kCoordinate: return x[species_];
      case Kind::kIndicator: return (x[species_] >= lo_ && x[species_] < hi_) ? 1.0 : 0.0;
      case Kind::kPolynomial: {
        double s = 0.0;
        for (const auto& t : terms_) {
          double v = t.coefficient;
          for (std::size_t i = 0; i < t.exponents.size(); ++i) v *= std::pow(x[i], t.exponents[i]);
          s += v;
        }
        return s;
      }
    }
    return 0.0;
  }

  /// Gradient at x; indicators are not differentiable and have none.
  std::optional<Vector> gradient(const Vector& x) const {
    Vector g = Vector::Zero(x.size());
    switch (kind_) {
      case Kind::kCoordinate: g[static_cast<Eigen::Index>(species_)] = 1.0; return g;
      case Kind::kIndicator: return std::nullopt;
      case Kind::kPolynomial:
        for (const auto& t : terms_) {
          for (std::size_t j = 0; j < t.exponents.size(); ++j) {
            if (t.exponents[j] == 0) continue;
            double v = t.coefficient * t.exponents[j] * std::pow(x[static_cast<Eigen::Index>(j)], t.exponents[j] - 1);
            for (std::size_t i = 0; i < t.exponents.size(); ++i) {
              if (i != j) v *= std::pow(x[static_cast<Eigen::Index>(i)], t.exponents[i]);
            }
            g[static_cast<Eigen::Index>(j)] += v;
          }
        }
        return g;
    }
    return std::nullopt;
  }

  bool is_constant() const {
    if (kind_ != Kind::kPolynomial) return false;
    for (const auto& t : terms_) {
      for (int e : t.exponents) {
        if (e != 0) return false;
      }
    }
    return true;
  }

 private:
  enum class Kind { kCoordinate, kIndicator, kPolynomial };
  Kind kind_ = Kind::kCoordinate;
  std::size_t species_ = 0;
  double lo_ = 0.0, hi_ = 0.0;
  std::vector<Term> terms_;
};

/// Everything needed to run one Monte Carlo batch at a fixed system size.
struct RunSpec {
  ReactionNetwork network;
  CountVector x0;
  ScalingSpec scaling;
  double T = 1.0;
  std::size_t budget = 1000;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  CutoffSpec cutoff;

  GridSpec grid() const { return GridSpec::on_leap_grid(T, scaling.h); }
};

/// Copy-number states at T of `budget` independent paths, flat (path-major).
inline std::vector<double> terminal_states(const RunSpec& run, Method method) {
  const std::size_t d = run.network.dimension();
  std::vector<double> out(run.budget * d);
  const double times[] = {run.T};
  parallel_for(run.budget, run.workers, [&](std::size_t i) {
    Stream stream(StreamKey{run.seed, i, channel_for(method)});
    SnapshotRecorder rec(times, d);
    if (method == Method::kSsa) {
      run_ssa(run.network, run.x0, run.T, stream, rec, run.cutoff, run.scaling.V);
    } else {
      run_tau_leap(run.network, run.x0, run.T, run.scaling.h,
                   method == Method::kEuler ? LeapMethod::kEuler : LeapMethod::kMidpoint, stream, rec, run.cutoff,
                   run.scaling.V);
    }
    std::copy(rec.values().begin(), rec.values().end(), out.begin() + static_cast<std::ptrdiff_t>(i * d));
  });
  return out;
}

/// Coupled pair samples at the leap grid points (normalized).
inline std::vector<PairSample> coupled_samples(const RunSpec& run, LeapMethod method, const GridSpec& grid) {
  std::vector<PairSample> out(run.budget);
  parallel_for(run.budget, run.workers, [&](std::size_t i) {
    out[i] = couple_sample(run.network, run.x0, grid, run.scaling, method, {run.seed, i}, run.cutoff);
  });
  return out;
}

inline std::vector<double> column(std::span<const double> flat, std::size_t dim, std::size_t j) {
  std::vector<double> out(flat.size() / dim);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = flat[i * dim + j];
  return out;
}

/// E f(X(T)) - E f(A(T)) in copy-number units. The paired estimator averages
/// f(X) - f(A) over coupled pairs; the independent one differences two sample
/// means and pools their standard errors.
inline EstimateWithCI mc_weak_error(const RunSpec& run, LeapMethod method, const Functional& f, bool paired) {
  if (run.budget == 0) throw std::invalid_argument("weak error needs a positive budget");
  const std::size_t d = run.network.dimension();
  if (paired) {
    GridSpec grid{run.T, run.scaling.h, {run.T}};
    const auto pairs = coupled_samples(run, method, grid);
    RunningStats diff;
    std::vector<double> xs(d), zs(d);
    for (const auto& p : pairs) {
      for (std::size_t j = 0; j < d; ++j) {
        xs[j] = p.exact[j] * run.scaling.V;
        zs[j] = p.approx[j] * run.scaling.V;
      }
      diff.add(f(xs) - f(zs));
    }
    return diff.estimate();
  }
  RunningStats exact, approx;
  const auto xs = terminal_states(run, Method::kSsa);
  const auto zs = terminal_states(run, to_method(method));
  for (std::size_t i = 0; i < run.budget; ++i) {
    exact.add(f(std::span<const double>(xs.data() + i * d, d)));
    approx.add(f(std::span<const double>(zs.data() + i * d, d)));
  }
  const double se = std::sqrt(exact.std_error() * exact.std_error() + approx.std_error() * approx.std_error());
  return {exact.mean() - approx.mean(), se, run.budget};
}

class OrderFitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Unweighted least squares of log2(error) on log2(V).
struct OrderFit {
  double slope = 0.0;
  double intercept = 0.0;
  std::vector<double> residuals;
  double r_squared = 0.0;
};

inline OrderFit fit_order(std::span<const double> V, std::span<const double> errors) {
  if (V.size() != errors.size() || V.size() < 2) throw OrderFitError("order fit needs >= 2 matching points");
  std::vector<double> x, y;
  for (std::size_t i = 0; i < V.size(); ++i) {
    if (!(errors[i] > 0.0)) throw OrderFitError("order fit requires positive errors");
    x.push_back(std::log2(V[i]));
    y.push_back(std::log2(errors[i]));
  }
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  OrderFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    fit.residuals.push_back(y[i] - (fit.intercept + fit.slope * x[i]));
    ss_res += fit.residuals.back() * fit.residuals.back();
  }
  fit.r_squared = syy > 0 ? 1.0 - ss_res / syy : 1.0;
  return fit;
}

/// Parameters of a convergence-order sweep.
struct ExperimentConfig {
  ReactionNetwork network;
  /// Volume at which the model file's stochastic constants are stated.
  double reference_volume = 1.0;
  /// Initial concentrations; each rung starts from round(V * x0).
  std::vector<double> x0_concentration;
  LeapMethod approx = LeapMethod::kEuler;
  std::vector<double> V_list;
  double beta = 0.5;
  double T = 1.0;
  std::size_t budget = 10000;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  bool paired = true;

  void validate() const {
    if (V_list.size() < 4) throw std::invalid_argument("order fits need at least 4 system sizes");
    for (std::size_t i = 1; i < V_list.size(); ++i) {
      if (!(V_list[i] > V_list[i - 1])) throw std::invalid_argument("V list must be strictly increasing");
    }
    if (budget < 2) throw std::invalid_argument("budget must be at least 2");
    if (x0_concentration.size() != network.dimension()) throw std::invalid_argument("x0 has wrong dimension");
  }

  RunSpec run_for(double V) const {
    RunSpec run;
    run.network = network.rescaled(reference_volume, V);
    run.scaling = ScalingSpec::make(run.network, V, beta);
    run.x0.resize(network.dimension());
    for (std::size_t i = 0; i < run.x0.size(); ++i) {
      run.x0[i] = static_cast<std::int64_t>(std::llround(V * x0_concentration[i]));
    }
    run.T = T;
    run.budget = budget;
    run.seed = seed;
    run.workers = workers;
    return run;
  }
};

struct OrderRung {
  double V = 0.0;
  double h = 0.0;
  EstimateWithCI error;
  double sup_time = 0.0;
};

struct OrderResult {
  std::vector<OrderRung> rungs;
  OrderFit fit;
  double predicted_slope = 0.0;
};

/// Strong order: sup over the leap grid of E|X^V - A^V|_1, fitted across V.
inline OrderResult mc_strong_order(const ExperimentConfig& config) {
  config.validate();
  OrderResult result;
  std::vector<double> Vs, errors;
  for (double V : config.V_list) {
    const RunSpec run = config.run_for(V);
    const GridSpec grid = run.grid();
    const auto pairs = coupled_samples(run, config.approx, grid);
    const auto est = strong_error_estimate(std::span<const PairSample>(pairs), grid.eval_times);
    if (est.sup_stderr() >= est.sup()) {
      throw OrderFitError("strong error at V=" + format_number(V) + " is not significantly positive");
    }
    result.rungs.push_back({V, run.scaling.h, {est.sup(), est.sup_stderr(), est.n}, grid.eval_times[est.sup_index]});
    Vs.push_back(V);
    errors.push_back(est.sup());
  }
  result.fit = fit_order(Vs, errors);
  result.predicted_slope = config.approx == LeapMethod::kEuler ? -config.beta : -kappa(config.beta);
  return result;
}

/// Weak order: |E f(X^V(T)) - E f(A^V(T))| in normalized units, fitted across V.
inline OrderResult mc_weak_order(const ExperimentConfig& config, const Functional& f) {
  config.validate();
  OrderResult result;
  std::vector<double> Vs, errors;
  for (double V : config.V_list) {
    const RunSpec run = config.run_for(V);
    const auto est = mc_weak_error(run, config.approx, f, config.paired);
    const double err = std::fabs(est.estimate) / V;
    const double se = est.std_error / V;
    if (se >= err) throw OrderFitError("weak error at V=" + format_number(V) + " is not significantly nonzero");
    result.rungs.push_back({V, run.scaling.h, {err, se, est.n}, config.T});
    Vs.push_back(V);
    errors.push_back(err);
  }
  result.fit = fit_order(Vs, errors);
  result.predicted_slope = config.approx == LeapMethod::kEuler ? -config.beta : -2.0 * config.beta;
  return result;
}

struct BinSpec {
  double width = 1.0;
  double origin = 0.0;
};

struct Histogram {
  std::vector<double> edges;  // size = bins + 1
  std::vector<double> frequencies;
};

/// Relative-frequency histogram on the bins [origin + i w, origin + (i+1) w)
/// spanning the data, or spanning [lo, hi) when given.
inline Histogram histogram(std::span<const double> samples, const BinSpec& spec,
                           std::optional<std::pair<double, double>> range = std::nullopt) {
  if (samples.empty()) throw std::invalid_argument("histogram needs at least one sample");
  if (!(spec.width > 0.0)) throw std::invalid_argument("bin width must be positive");
  double lo, hi;
  if (range) {
    lo = range->first;
    hi = range->second;
  } else {
    const auto [mn, mx] = std::minmax_element(samples.begin(), samples.end());
    lo = *mn;
    hi = *mx;
  }
  const auto first = static_cast<std::int64_t>(std::floor((lo - spec.origin) / spec.width));
  auto last = static_cast<std::int64_t>(std::floor((hi - spec.origin) / spec.width));
  if (range && spec.origin + static_cast<double>(last) * spec.width >= hi) --last;
  last = std::max(last, first);
  const auto bins = static_cast<std::size_t>(last - first + 1);
  Histogram h;
  for (std::size_t i = 0; i <= bins; ++i) {
    h.edges.push_back(spec.origin + static_cast<double>(first + static_cast<std::int64_t>(i)) * spec.width);
  }
  std::vector<double> counts(bins, 0.0);
  for (double s : samples) {
    auto b = static_cast<std::int64_t>(std::floor((s - spec.origin) / spec.width)) - first;
    b = std::clamp<std::int64_t>(b, 0, static_cast<std::int64_t>(bins) - 1);
    counts[static_cast<std::size_t>(b)] += 1.0;
  }
  const double n = static_cast<double>(samples.size());
  for (double c : counts) h.frequencies.push_back(c / n);
  return h;
}

inline const char* kIsomerizationModel =
    "# A -> B with unit rate; X(0) = (V, 0)\n"
    "species A B\n"
    "reaction 1 : A -> B\n";

inline const char* kLotkaVolterraModel =
    "# prey A, predator B; constants stated at V = 1000\n"
    "species A B\n"
    "reaction 2 : A -> A A\n"
    "reaction 0.002 : A B -> B B\n"
    "reaction 2 : B ->\n";

struct ExampleOptions {
  std::size_t paths = 0;  // 0 selects the default budget
  bool full = false;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  std::optional<std::filesystem::path> out_dir;
};

struct MethodResult {
  Method method = Method::kSsa;
  std::vector<double> samples;  // tracked species at T, copy numbers
  EstimateWithCI mean;
};

struct ExampleReport {
  std::string name;
  std::size_t paths = 0;
  double V = 0.0;
  double h = 0.0;
  double beta = 0.0;
  double T = 0.0;
  std::string tracked_species;
  MethodResult ssa, euler, midpoint;
  EstimateWithCI euler_bias;     // E X - E Z, copy numbers
  EstimateWithCI midpoint_bias;  // E X - E midpoint
  double predicted_euler_bias = 0.0;
  std::optional<double> predicted_midpoint_bias;
  double ks_euler_ssa = 0.0;
  double ks_midpoint_ssa = 0.0;
  double ks_euler_midpoint = 0.0;
  std::optional<double> exact_mean;
  std::optional<double> tv_ssa_exact;  // on the histogram bins
  Histogram ssa_hist, euler_hist, midpoint_hist;
  BinSpec bins;
  std::string text;
};

namespace detail {

inline ExampleReport run_example(const std::string& name, const std::string& model_text, CountVector x0,
                                 double V, double T, double step, std::size_t tracked, BinSpec bins,
                                 const ExampleOptions& opt, std::size_t default_paths, std::size_t full_paths) {
  ExampleReport rep;
  rep.name = name;
  rep.paths = opt.paths ? opt.paths : (opt.full ? full_paths : default_paths);
  RunSpec run;
  run.network = parse_network(model_text);
  run.scaling = ScalingSpec::from_step(run.network, V, step);
  run.x0 = std::move(x0);
  run.T = T;
  run.budget = rep.paths;
  run.seed = opt.seed;
  run.workers = opt.workers;
  rep.V = V;
  rep.h = step;
  rep.beta = run.scaling.beta;
  rep.T = T;
  rep.tracked_species = run.network.species_names()[tracked];
  rep.bins = bins;

  const std::size_t d = run.network.dimension();
  auto collect = [&](Method m) {
    MethodResult r;
    r.method = m;
    r.samples = column(terminal_states(run, m), d, tracked);
    r.mean = summarize(r.samples).estimate();
    return r;
  };
  rep.ssa = collect(Method::kSsa);
  rep.euler = collect(Method::kEuler);
  rep.midpoint = collect(Method::kMidpoint);
  auto bias = [](const MethodResult& a, const MethodResult& b) {
    return EstimateWithCI{a.mean.estimate - b.mean.estimate, std::hypot(a.mean.std_error, b.mean.std_error), a.mean.n};
  };
  rep.euler_bias = bias(rep.ssa, rep.euler);
  rep.midpoint_bias = bias(rep.ssa, rep.midpoint);

  // Leading-order predictions from the limiting error ODEs.
  Vector c0(static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < d; ++i) c0[static_cast<Eigen::Index>(i)] = static_cast<double>(run.x0[i]) / V;
  const double ode_step = std::min(1e-3, T / 1000.0);
  const auto traj = ode_limit(run.network, c0, T, ode_step, run.scaling);
  Vector grad = Vector::Zero(static_cast<Eigen::Index>(d));
  grad[static_cast<Eigen::Index>(tracked)] = 1.0;
  rep.predicted_euler_bias =
      V * predict_weak_bias(LeapMethod::kEuler, grad, solve_error_ode_euler(run.network, run.scaling, traj, T, ode_step),
                            run.scaling);
  if (run.scaling.beta < 1.0 / 3.0) {
    rep.predicted_midpoint_bias =
        V * predict_weak_bias(LeapMethod::kMidpoint, grad,
                              solve_error_ode_midpoint(run.network, run.scaling, traj, T, ode_step), run.scaling);
  }

  rep.ks_euler_ssa = ks_two_sample(rep.euler.samples, rep.ssa.samples).statistic;
  rep.ks_midpoint_ssa = ks_two_sample(rep.midpoint.samples, rep.ssa.samples).statistic;
  rep.ks_euler_midpoint = ks_two_sample(rep.euler.samples, rep.midpoint.samples).statistic;

  // Common bins across the three methods.
  double lo = rep.ssa.samples.front(), hi = lo;
  for (const auto* r : {&rep.ssa, &rep.euler, &rep.midpoint}) {
    for (double s : r->samples) {
      lo = std::min(lo, s);
      hi = std::max(hi, s);
    }
  }
  const std::pair<double, double> range{lo, hi + bins.width};
  rep.ssa_hist = histogram(rep.ssa.samples, bins, range);
  rep.euler_hist = histogram(rep.euler.samples, bins, range);
  rep.midpoint_hist = histogram(rep.midpoint.samples, bins, range);
  return rep;
}

inline std::string fmt(const EstimateWithCI& e) {
  std::ostringstream s;
  s.precision(6);
  s << e.estimate << " +/- " << e.std_error << " (n=" << e.n << ")";
  return s.str();
}

inline std::string render_report(const ExampleReport& rep) {
  std::ostringstream s;
  s.precision(6);
  s << rep.name << "\n";
  s << "paths=" << rep.paths << " V=" << rep.V << " h=" << rep.h << " beta=" << rep.beta << " T=" << rep.T << "\n";
  s << "tracked species: " << rep.tracked_species << "\n\n";
  s << "mean ssa      " << fmt(rep.ssa.mean) << "\n";
  s << "mean euler    " << fmt(rep.euler.mean) << "\n";
  s << "mean midpoint " << fmt(rep.midpoint.mean) << "\n";
  if (rep.exact_mean) s << "exact mean    " << *rep.exact_mean << "\n";
  s << "\nbias ssa-euler     " << fmt(rep.euler_bias) << "\n";
  s << "  predicted        " << rep.predicted_euler_bias << "\n";
  s << "bias ssa-midpoint  " << fmt(rep.midpoint_bias) << "\n";
  if (rep.predicted_midpoint_bias) {
    s << "  predicted        " << *rep.predicted_midpoint_bias << "\n";
  } else {
    s << "  predicted        n/a (beta >= 1/3: only an O(V^-2beta) bound applies)\n";
  }
  s << "\nKS(euler, ssa)      " << rep.ks_euler_ssa << "\n";
  s << "KS(midpoint, ssa)   " << rep.ks_midpoint_ssa << "\n";
  s << "KS(euler, midpoint) " << rep.ks_euler_midpoint << "\n";
  if (rep.tv_ssa_exact) s << "TV(ssa, exact law) on histogram bins " << *rep.tv_ssa_exact << "\n";
  return s.str();
}

inline HeaderBlock example_header(const ExampleReport& rep, const ExampleOptions& opt) {
  return {{"experiment", rep.name},       {"seed", format_number(opt.seed)},
          {"paths", std::to_string(rep.paths)}, {"V", format_number(rep.V)},
          {"beta", format_number(rep.beta)},    {"h", format_number(rep.h)},
          {"T", format_number(rep.T)},          {"species", rep.tracked_species},
          {"bin_width", format_number(rep.bins.width)}};
}

inline void write_example_outputs(const ExampleReport& rep, const ExampleOptions& opt, const std::string& stem) {
  if (!opt.out_dir) return;
  const auto& dir = *opt.out_dir;
  CsvDocument hist(example_header(rep, opt), {"bin_lo", "bin_hi", "ssa", "euler", "midpoint"});
  for (std::size_t i = 0; i < rep.ssa_hist.frequencies.size(); ++i) {
    hist.row(rep.ssa_hist.edges[i], rep.ssa_hist.edges[i + 1], rep.ssa_hist.frequencies[i],
             rep.euler_hist.frequencies[i], rep.midpoint_hist.frequencies[i]);
  }
  hist.write(dir / (stem + "_histogram.csv"));

  CsvDocument summary(example_header(rep, opt), {"method", "mean", "stderr", "n"});
  for (const auto* r : {&rep.ssa, &rep.euler, &rep.midpoint}) {
    summary.row(std::string(to_string(r->method)), r->mean.estimate, r->mean.std_error, r->mean.n);
  }
  summary.write(dir / (stem + "_means.csv"));

  atomic_write(dir / (stem + "_report.txt"), rep.text);
  atomic_write(dir / (stem + "_histogram.gp"),
               "set datafile separator ','\nset key top right\nset xlabel '" + rep.tracked_species +
                   "'\nset ylabel 'relative frequency'\nplot '" + stem +
                   "_histogram.csv' using (($1+$2)/2):3 with linespoints title 'ssa', '' using (($1+$2)/2):4 "
                   "with linespoints title 'euler', '' using (($1+$2)/2):5 with linespoints title 'midpoint'\n");
}

}  // namespace detail

/// Isomerization A -> B from 10^4 molecules, h = 1/20, T = 1: distribution of
/// X_A(1) under SSA and both leap methods, against the exact Binomial law.
inline ExampleReport reproduce_example1(const ExampleOptions& opt) {
  const double V = 10000.0;
  auto rep = detail::run_example("example1: isomerization A -> B", kIsomerizationModel, {10000, 0}, V, 1.0,
                                 1.0 / 20.0, 0, BinSpec{5.0, 0.0}, opt, 50000, 200000);
  const double p = std::exp(-1.0);
  rep.exact_mean = V * p;
  // Binomial(V, 1/e) probability of each histogram bin.
  boost::math::binomial_distribution<double> law(V, p);
  std::vector<double> exact;
  for (std::size_t i = 0; i + 1 < rep.ssa_hist.edges.size(); ++i) {
    const double a = std::ceil(rep.ssa_hist.edges[i]);
    const double b = std::ceil(rep.ssa_hist.edges[i + 1]) - 1.0;  // integers in [edge_i, edge_{i+1})
    double mass = 0.0;
    if (b >= a) {
      mass = boost::math::cdf(law, std::min(b, V)) - (a > 0 ? boost::math::cdf(law, a - 1.0) : 0.0);
    }
    exact.push_back(mass);
  }
  // Mass outside the observed range counts fully toward the distance.
  double covered = 0.0;
  for (double m : exact) covered += m;
  rep.tv_ssa_exact = total_variation(rep.ssa_hist.frequencies, exact) + 0.5 * std::max(0.0, 1.0 - covered);
  rep.text = detail::render_report(rep);
  detail::write_example_outputs(rep, opt, "example1");
  return rep;
}

/// Lotka-Volterra from (1000, 1000), h = 1/20, T = 10: distribution of the
/// predator count X_B(10).
inline ExampleReport reproduce_example2(const ExampleOptions& opt) {
  auto rep = detail::run_example("example2: Lotka-Volterra predator-prey", kLotkaVolterraModel, {1000, 1000},
                                 1000.0, 10.0, 1.0 / 20.0, 1, BinSpec{20.0, 0.0}, opt, 10000, 30000);
  rep.text = detail::render_report(rep);
  detail::write_example_outputs(rep, opt, "example2");
  return rep;
}

}  // namespace tauleap
