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

#include <cmath>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tauleap/coupling.hpp"
#include "tauleap/error_theory.hpp"
#include "tauleap/harness.hpp"
#include "tauleap/io.hpp"
#include "tauleap/model.hpp"
#include "tauleap/simulate.hpp"

namespace tauleap::cli {

/// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kUsage = 1;
inline constexpr int kRuntime = 2;

/// Raised for invalid parameter combinations detected after parsing.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

namespace detail {

/// Parameters shared by the model-driven subcommands.
struct ModelArgs {
  std::string model;
  double V = 1000.0;
  double beta = 0.5;
  double T = 1.0;
  double v_ref = 1.0;
  std::vector<double> x0;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  std::string out;
};

inline void add_model_flags(CLI::App* app, ModelArgs& a, bool with_beta = true) {
  app->add_option("--model", a.model, "reaction network file")->required();
  app->add_option("--V", a.V, "system size V")->check(CLI::PositiveNumber);
  if (with_beta) app->add_option("--beta", a.beta, "step exponent, h = V^-beta")->check(CLI::Range(0.0, 1.0));
  app->add_option("--T", a.T, "time horizon")->check(CLI::PositiveNumber);
  app->add_option("--V-ref", a.v_ref, "volume at which the model's rate constants are stated")
      ->check(CLI::PositiveNumber);
  app->add_option("--x0", a.x0, "initial concentrations, one per species (default: all 1)")->delimiter(',');
  app->add_option("--seed", a.seed, "master seed");
  app->add_option("--workers", a.workers, "worker threads")->check(CLI::PositiveNumber);
}

struct LoadedModel {
  ReactionNetwork network;
  ScalingSpec scaling;
  CountVector x0;
  Vector c0;
};

inline LoadedModel load_model(const ModelArgs& a) {
  std::string text;
  try {
    text = read_file(a.model);
  } catch (const std::exception& e) {
    throw UsageError(std::string("--model: ") + e.what());
  }
  ReactionNetwork base = parse_network(text);
  LoadedModel m{base.rescaled(a.v_ref, a.V), {}, {}, {}};
  if (!(a.beta > 0.0 && a.beta < 1.0)) throw UsageError("--beta must lie in (0, 1)");
  m.scaling = ScalingSpec::make(m.network, a.V, a.beta);
  const std::size_t d = m.network.dimension();
  std::vector<double> conc = a.x0.empty() ? std::vector<double>(d, 1.0) : a.x0;
  if (conc.size() != d) {
    throw UsageError("--x0 needs " + std::to_string(d) + " values, got " + std::to_string(conc.size()));
  }
  m.c0.resize(static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < d; ++i) {
    if (!(conc[i] >= 0.0)) throw UsageError("--x0 values must be nonnegative");
    m.x0.push_back(static_cast<std::int64_t>(std::llround(a.V * conc[i])));
    m.c0[static_cast<Eigen::Index>(i)] = static_cast<double>(m.x0.back()) / a.V;
  }
  return m;
}

inline HeaderBlock model_header(const std::string& command, const ModelArgs& a, const ScalingSpec& s) {
  std::string x0;
  for (std::size_t i = 0; i < a.x0.size(); ++i) x0 += (i ? "," : "") + format_number(a.x0[i]);
  return {{"command", command},         {"model", a.model},
          {"seed", format_number(a.seed)}, {"V", format_number(a.V)},
          {"beta", format_number(s.beta)}, {"h", format_number(s.h)},
          {"T", format_number(a.T)},       {"V_ref", format_number(a.v_ref)},
          {"x0", x0.empty() ? "default" : x0}};
}

inline void emit(const std::string& out, const std::string& content, std::ostream& stdout_) {
  if (out.empty() || out == "-") {
    stdout_ << content;
  } else {
    atomic_write(out, content);
  }
}

inline LeapMethod parse_leap(const std::string& s) { return s == "euler" ? LeapMethod::kEuler : LeapMethod::kMidpoint; }

/// Expands `--config FILE` into flags: each `key=value` line becomes
/// `--key value` unless the flag is already present on the command line.
inline std::vector<std::string> merge_config(std::vector<std::string> args) {
  std::optional<std::string> file;
  std::vector<std::string> kept;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw UsageError("--config requires a file");
      file = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      file = args[i].substr(9);
    } else {
      kept.push_back(args[i]);
    }
  }
  if (!file) return kept;
  std::string text;
  try {
    text = read_file(*file);
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
  auto present = [&](const std::string& flag) {
    for (const auto& a : kept) {
      if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
    }
    return false;
  };
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const auto eq = line.find('=');
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    if (trim(line).empty()) continue;
    if (eq == std::string::npos) throw UsageError(*file + ":" + std::to_string(lineno) + ": expected key=value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const std::string flag = "--" + key;
    if (present(flag)) continue;
    if (value == "true") {
      kept.push_back(flag);
    } else if (value != "false") {
      kept.push_back(flag);
      kept.push_back(value);
    }
  }
  return kept;
}

}  // namespace detail

/// Parses and runs one invocation. Returns the process exit code.
inline int dispatch(const std::vector<std::string>& argv_in, std::ostream& out = std::cout,
                    std::ostream& err = std::cerr) {
  using namespace detail;
  CLI::App app{"tauleap: exact and tau-leap simulation of reaction networks, couplings and error theory", "tauleap"};
  app.require_subcommand(1);

  // simulate
  ModelArgs sim;
  std::string sim_method = "ssa";
  std::size_t sim_paths = 1;
  auto* simulate = app.add_subcommand("simulate", "simulate sample paths");
  add_model_flags(simulate, sim);
  simulate->add_option("--method", sim_method, "ssa|euler|midpoint|ode")
      ->check(CLI::IsMember({"ssa", "euler", "midpoint", "ode"}));
  simulate->add_option("--paths", sim_paths, "number of paths")->check(CLI::PositiveNumber);
  simulate->add_option("--out", sim.out, "output CSV (default: stdout)");

  // couple
  ModelArgs cpl;
  std::string cpl_approx = "euler";
  std::size_t cpl_pairs = 1000;
  std::optional<double> cpl_exponent;
  auto* couple = app.add_subcommand("couple", "strong error from coupled exact/approximate pairs");
  add_model_flags(couple, cpl);
  couple->add_option("--approx", cpl_approx, "euler|midpoint")->check(CLI::IsMember({"euler", "midpoint"}));
  couple->add_option("--pairs", cpl_pairs, "number of coupled pairs")->check(CLI::Range(2ul, 1ul << 32));
  couple->add_option("--exponent", cpl_exponent,
                     "scaling exponent for the scaled error (default: beta for euler, kappa(beta) for midpoint)");
  couple->add_option("--out", cpl.out, "output CSV (default: stdout)");

  // order
  ModelArgs ord;
  std::string ord_mode = "strong", ord_approx = "euler", ord_functional;
  std::vector<double> ord_Vs{256, 512, 1024, 2048, 4096, 8192, 16384};
  std::size_t ord_pairs = 10000;
  bool ord_independent = false;
  auto* order = app.add_subcommand("order", "fit the convergence order across system sizes");
  add_model_flags(order, ord);
  order->add_option("--mode", ord_mode, "strong|weak")->check(CLI::IsMember({"strong", "weak"}));
  order->add_option("--approx", ord_approx, "euler|midpoint")->check(CLI::IsMember({"euler", "midpoint"}));
  order->add_option("--V-list", ord_Vs, "comma-separated system sizes (default 2^8..2^14)")->delimiter(',');
  order->add_option("--pairs", ord_pairs, "paths or pairs per system size")->check(CLI::Range(2ul, 1ul << 32));
  order->add_option("--functional", ord_functional, "weak mode: coord:S, indicator:S:lo:hi or poly:...");
  order->add_flag("--independent", ord_independent, "weak mode: difference independent ensembles");
  order->add_option("--out", ord.out, "output directory")->required();

  // error-ode
  ModelArgs eo;
  std::string eo_which = "E";
  double eo_step = 0.0;
  auto* error_ode = app.add_subcommand("error-ode", "solve the limiting error ODE");
  add_model_flags(error_ode, eo);
  error_ode->add_option("--which", eo_which, "E|E1")->check(CLI::IsMember({"E", "E1"}));
  error_ode->add_option("--step", eo_step, "RK4 step (default T/1000)")->check(CLI::NonNegativeNumber);
  error_ode->add_option("--out", eo.out, "output CSV (default: stdout)");

  // limit-sample
  ModelArgs ls;
  std::string ls_which = "E3";
  std::size_t ls_samples = 10, ls_cells = 1000;
  auto* limit = app.add_subcommand("limit-sample", "sample the Gaussian error limit process");
  add_model_flags(limit, ls);
  limit->add_option("--which", ls_which, "E2|E3")->check(CLI::IsMember({"E2", "E3"}));
  limit->add_option("--samples", ls_samples, "number of sample paths")->check(CLI::PositiveNumber);
  limit->add_option("--cells", ls_cells, "time cells on [0, T]")->check(CLI::PositiveNumber);
  limit->add_option("--out", ls.out, "output CSV (default: stdout)");

  // examples
  ExampleOptions ex1, ex2;
  std::string ex1_out, ex2_out;
  auto* example1 = app.add_subcommand("example1", "isomerization A -> B: SSA, Euler and midpoint at T = 1");
  auto* example2 = app.add_subcommand("example2", "Lotka-Volterra: SSA, Euler and midpoint at T = 10");
  for (auto [sub, opt, dir] : {std::tuple{example1, &ex1, &ex1_out}, std::tuple{example2, &ex2, &ex2_out}}) {
    sub->add_flag("--full", opt->full, "use the large path budget");
    sub->add_option("--paths", opt->paths, "override the path budget");
    sub->add_option("--seed", opt->seed, "master seed");
    sub->add_option("--workers", opt->workers, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--out", *dir, "output directory (default: print the report only)");
  }

  std::vector<std::string> args;
  try {
    args = merge_config(std::vector<std::string>(argv_in.begin() + (argv_in.empty() ? 0 : 1), argv_in.end()));
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    if (app.get_subcommands().empty()) err << "run 'tauleap --help' for usage\n";
    return kUsage;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }

  try {
    if (simulate->parsed()) {
      const auto m = load_model(sim);
      const std::size_t d = m.network.dimension();
      std::vector<std::string> cols{"path_id", "time"};
      for (const auto& s : m.network.species_names()) cols.push_back(s);
      auto header = model_header("simulate", sim, m.scaling);
      header.emplace_back("method", sim_method);
      header.emplace_back("paths", std::to_string(sim_paths));
      CsvDocument doc(header, cols);
      auto add_path = [&](std::size_t id, const Path& p) {
        for (std::size_t i = 0; i < p.size(); ++i) {
          std::vector<std::string> r{std::to_string(id), format_number(p.times()[i])};
          for (std::size_t j = 0; j < d; ++j) r.push_back(format_number(p.state(i)[j]));
          doc.add_row(std::move(r));
        }
      };
      if (sim_method == "ode") {
        add_path(0, ode_limit(m.network, m.c0, sim.T, sim.T / 1000.0, m.scaling).to_path());
      } else {
        std::vector<Path> paths(sim_paths, Path(d, sim.T));
        const GridSpec grid = GridSpec::on_leap_grid(sim.T, m.scaling.h);
        parallel_for(sim_paths, sim.workers, [&](std::size_t i) {
          if (sim_method == "ssa") {
            Stream s(StreamKey{sim.seed, i, channels::kSsa});
            paths[i] = ssa_path(m.network, m.x0, sim.T, m.scaling, s);
          } else if (sim_method == "euler") {
            Stream s(StreamKey{sim.seed, i, channels::kEuler});
            paths[i] = euler_tau_path(m.network, m.x0, grid, m.scaling, s);
          } else {
            Stream s(StreamKey{sim.seed, i, channels::kMidpoint});
            paths[i] = midpoint_tau_path(m.network, m.x0, grid, m.scaling, s);
          }
        });
        for (std::size_t i = 0; i < sim_paths; ++i) add_path(i, paths[i]);
      }
      emit(sim.out, doc.str(), out);
      return kOk;
    }

    if (couple->parsed()) {
      const auto m = load_model(cpl);
      const LeapMethod method = parse_leap(cpl_approx);
      const double exponent =
          cpl_exponent ? *cpl_exponent : (method == LeapMethod::kEuler ? m.scaling.beta : kappa(m.scaling.beta));
      RunSpec run{m.network, m.x0, m.scaling, cpl.T, cpl_pairs, cpl.seed, cpl.workers, {}};
      const GridSpec grid = run.grid();
      const auto pairs = coupled_samples(run, method, grid);
      const auto est = strong_error_estimate(std::span<const PairSample>(pairs), grid.eval_times);
      const std::size_t d = est.dim;
      std::vector<std::string> cols{"eval_time", "mean_abs_error", "stderr"};
      const auto& names = m.network.species_names();
      for (std::size_t j = 0; j < d; ++j) {
        cols.push_back(d == 1 ? "mean_scaled_error" : "mean_scaled_error_" + names[j]);
        cols.push_back(d == 1 ? "scaled_stderr" : "scaled_stderr_" + names[j]);
      }
      auto header = model_header("couple", cpl, m.scaling);
      header.emplace_back("approx", cpl_approx);
      header.emplace_back("pairs", std::to_string(cpl_pairs));
      header.emplace_back("exponent", format_number(exponent));
      CsvDocument doc(header, cols);
      const double scale = std::pow(cpl.V, exponent);
      for (std::size_t t = 0; t < est.eval_times.size(); ++t) {
        std::vector<std::string> r{format_number(est.eval_times[t]), format_number(est.mean_abs_error[t]),
                                   format_number(est.stderr_abs[t])};
        for (std::size_t j = 0; j < d; ++j) {
          r.push_back(format_number(scale * est.mean_signed[t * d + j]));
          r.push_back(format_number(scale * est.stderr_signed[t * d + j]));
        }
        doc.add_row(std::move(r));
      }
      emit(cpl.out, doc.str(), out);
      return kOk;
    }

    if (order->parsed()) {
      const auto m = load_model(ord);  // validates the model, x0 and beta
      ExperimentConfig config;
      config.network = parse_network(read_file(ord.model));
      config.reference_volume = ord.v_ref;
      config.x0_concentration = ord.x0.empty() ? std::vector<double>(m.network.dimension(), 1.0) : ord.x0;
      config.approx = parse_leap(ord_approx);
      config.V_list = ord_Vs;
      config.beta = ord.beta;
      config.T = ord.T;
      config.budget = ord_pairs;
      config.seed = ord.seed;
      config.workers = ord.workers;
      config.paired = !ord_independent;
      try {
        config.validate();
      } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
      }
      std::optional<Functional> f;
      if (ord_mode == "weak") {
        try {
          f = ord_functional.empty() ? Functional::coordinate(0) : Functional::parse(ord_functional, config.network);
        } catch (const std::exception& e) {
          throw UsageError(std::string("--functional: ") + e.what());
        }
      }
      const OrderResult result = ord_mode == "strong" ? mc_strong_order(config) : mc_weak_order(config, *f);

      auto header = model_header("order", ord, m.scaling);
      std::string vs;
      for (double v : ord_Vs) vs += (vs.empty() ? "" : ",") + format_number(v);
      for (auto& [k, v] : header) {
        if (k == "V") v = vs;
        if (k == "h") v = "V^-beta";
      }
      header.emplace_back("mode", ord_mode);
      header.emplace_back("approx", ord_approx);
      header.emplace_back("pairs", std::to_string(ord_pairs));
      if (f) header.emplace_back("functional", ord_functional.empty() ? "coord:" + config.network.species_names()[0]
                                                                    : ord_functional);
      if (f) header.emplace_back("estimator", config.paired ? "paired" : "independent");
      CsvDocument doc(header, {"V", "h", "error", "stderr", "time"});
      for (const auto& r : result.rungs) doc.row(r.V, r.h, r.error.estimate, r.error.std_error, r.sup_time);
      const std::filesystem::path dir(ord.out);
      doc.write(dir / "order.csv");

      std::ostringstream rep;
      rep.precision(6);
      rep << ord_mode << " order, " << ord_approx << ", beta=" << ord.beta << ", " << ord_pairs << " per rung\n";
      for (const auto& r : result.rungs) {
        rep << "V=" << r.V << " h=" << r.h << " error=" << r.error.estimate << " +/- " << r.error.std_error << "\n";
      }
      rep << "fitted slope " << result.fit.slope << " (intercept " << result.fit.intercept
          << ", R^2 " << result.fit.r_squared << ")\n";
      rep << "predicted slope " << result.predicted_slope << "\n";
      atomic_write(dir / "report.txt", rep.str());
      out << rep.str();
      return kOk;
    }

    if (error_ode->parsed()) {
      const auto m = load_model(eo);
      const double step = eo_step > 0.0 ? eo_step : eo.T / 1000.0;
      const auto traj = ode_limit(m.network, m.c0, eo.T, step, m.scaling);
      const auto sol = eo_which == "E" ? solve_error_ode_euler(m.network, m.scaling, traj, eo.T, step)
                                       : solve_error_ode_midpoint(m.network, m.scaling, traj, eo.T, step);
      std::vector<std::string> cols{"time"};
      for (const auto& s : m.network.species_names()) cols.push_back(s);
      auto header = model_header("error-ode", eo, m.scaling);
      header.emplace_back("which", eo_which);
      header.emplace_back("step", format_number(step));
      CsvDocument doc(header, cols);
      for (std::size_t i = 0; i < sol.times.size(); ++i) {
        std::vector<std::string> r{format_number(sol.times[i])};
        for (Eigen::Index j = 0; j < sol.values[i].size(); ++j) r.push_back(format_number(sol.values[i][j]));
        doc.add_row(std::move(r));
      }
      emit(eo.out, doc.str(), out);
      return kOk;
    }

    if (limit->parsed()) {
      const auto m = load_model(ls);
      const ErrorKind kind = ls_which == "E2" ? ErrorKind::kE2 : ErrorKind::kE3;
      const auto traj = ode_limit(m.network, m.c0, ls.T, ls.T / 1000.0, m.scaling);
      const LimitProcessSampler sampler(kind, m.network, m.scaling, traj, ls.T, ls_cells);
      std::vector<GaussianLimitSample> samples(ls_samples);
      parallel_for(ls_samples, ls.workers, [&](std::size_t i) {
        Stream s(StreamKey{ls.seed, i, channels::kLimit});
        samples[i] = sampler.sample(s);
      });
      std::vector<std::string> cols{"sample_id", "time"};
      for (const auto& s : m.network.species_names()) cols.push_back(s);
      auto header = model_header("limit-sample", ls, m.scaling);
      header.emplace_back("which", ls_which);
      header.emplace_back("samples", std::to_string(ls_samples));
      header.emplace_back("cells", std::to_string(ls_cells));
      CsvDocument doc(header, cols);
      for (std::size_t i = 0; i < samples.size(); ++i) {
        for (std::size_t k = 0; k < samples[i].times.size(); ++k) {
          std::vector<std::string> r{std::to_string(i), format_number(samples[i].times[k])};
          for (Eigen::Index j = 0; j < samples[i].values[k].size(); ++j) {
            r.push_back(format_number(samples[i].values[k][j]));
          }
          doc.add_row(std::move(r));
        }
      }
      emit(ls.out, doc.str(), out);
      return kOk;
    }

    for (auto [sub, opt, dir] : {std::tuple{example1, &ex1, &ex1_out}, std::tuple{example2, &ex2, &ex2_out}}) {
      if (!sub->parsed()) continue;
      if (!dir->empty()) opt->out_dir = std::filesystem::path(*dir);
      const ExampleReport rep = sub == example1 ? reproduce_example1(*opt) : reproduce_example2(*opt);
      out << rep.text;
      return kOk;
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const ModelError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    err << "runtime failure: " << e.what() << "\n";
    return kRuntime;
  }
  return kUsage;
}

inline int dispatch(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  return dispatch(std::vector<std::string>(argv, argv + argc), out, err);
}

}  // namespace tauleap::cli
