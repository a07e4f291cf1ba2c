/*
Copyright 2026 The ldsafe Authors

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

     https://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
*/

#include "ldsafe/cli.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <optional>
#include <ostream>

#include <CLI11.hpp>

#include "ldsafe/config.hpp"
#include "ldsafe/montecarlo.hpp"
#include "ldsafe/pmp_verify.hpp"
#include "ldsafe/probability.hpp"
#include "ldsafe/report.hpp"
#include "ldsafe/scenarios.hpp"

namespace ldsafe {
namespace {

namespace fs = std::filesystem;

struct Options {
  std::string scenario;
  std::optional<std::uint64_t> seed;
  int threads = 1;
  std::string out = ".";
  std::optional<double> tol;
  std::optional<int> nodes;
  // quasipotential-map
  int points = 21;
  double span = 3.0;
  // mc-validate
  std::optional<long> paths;
  std::optional<double> dt;
  // verify-pmp
  std::string input;
};

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

// A loaded scenario with the command-line overrides applied.
struct Context {
  Options opt;
  ScenarioConfig config;
  Scenario scenario;
  std::uint64_t seed = 0;
  Json report;
  fs::path out;

  std::string file(const std::string& name) const { return (out / name).string(); }
  void write_report() const { write_text(file("report.json"), dump_json(report)); }
};

ScenarioConfig resolve_scenario(const std::string& spec) {
  if (spec.empty()) throw ConfigError("--scenario is required");
  std::error_code ec;
  if (fs::is_regular_file(spec, ec)) return load_config(spec);
  for (const std::string& name : builtin_scenario_names()) {
    if (name == spec) return builtin_config(spec);
  }
  throw ConfigError("no config file or built-in scenario named '" + spec + "'");
}

Context make_context(const std::string& command, const Options& opt) {
  ScenarioConfig config = resolve_scenario(opt.scenario);
  if (opt.nodes) {
    if (*opt.nodes < 2) throw ConfigError("--nodes must be at least 2");
    config.solver.nodes = *opt.nodes;
  }
  if (opt.tol) {
    if (!(*opt.tol > 0.0)) throw ConfigError("--tol must be positive");
    config.solver.gradient_tol = *opt.tol;
  }
  if (opt.threads < 1) throw ConfigError("--threads must be at least 1");
  Context c{opt, config, build_scenario(config), opt.seed.value_or(config.mc.seed), {}, opt.out};
  c.report = report_header(command, c.config, c.seed);
  c.report["timings"]["threads"] = opt.threads;
  std::error_code ec;
  fs::create_directories(c.out, ec);
  if (ec) throw ConfigError("cannot create output directory " + opt.out);
  return c;
}

int solution_exit(const VariationalSolution& s) {
  return s.converged() ? kExitOk : kExitNotConverged;
}

VariationalSolution run_ml(const Context& c) {
  const Scenario& s = c.scenario;
  return solve_ml(s.model, s.unsafe, s.prior.mean(), s.window, s.solver);
}

VariationalSolution run_map(const Context& c) {
  const Scenario& s = c.scenario;
  return solve_map(s.model, s.unsafe, s.prior, s.eps, s.window, s.solver);
}

int cmd_solve(Context& c, bool map, std::ostream& out) {
  Stopwatch clock;
  const VariationalSolution sol = map ? run_map(c) : run_ml(c);
  c.report["timings"]["solve_seconds"] = clock.seconds();
  c.report["result"][map ? "map" : "ml"] = solution_json(sol);
  write_path_csv(c.file(map ? "path_map.csv" : "path_ml.csv"), sol.path, sol.adjoint);
  c.write_report();
  out << (map ? "J = " : "Q = ") << sol.objective << "  T = " << sol.final_time
      << "  alpha = " << sol.alpha << "  status = " << to_string(sol.status) << "\n";
  return solution_exit(sol);
}

int cmd_qmap(Context& c, std::ostream& out) {
  if (c.opt.points < 2) throw ConfigError("--points must be at least 2");
  if (!(c.opt.span > 0.0)) throw ConfigError("--span must be positive");
  const Scenario& s = c.scenario;
  const double sd = std::sqrt(s.prior.covariance()(0, 0));
  Stopwatch clock;
  std::optional<InitialGuess> warm;
  Json probes = Json::array();
  std::string csv = "u,y0,quasipotential,log_posterior,status\n";
  int failed = 0;
  char buf[160];
  for (int i = 0; i < c.opt.points; ++i) {
    const double u = -c.opt.span + 2.0 * c.opt.span * i / (c.opt.points - 1);
    Vec y = s.prior.mean();
    y[0] += u * sd;
    const VariationalSolution sol =
        solve_ml(s.model, s.unsafe, y, s.window, s.solver, warm ? &*warm : nullptr);
    if (sol.converged() && !sol.trivial()) warm = guess_from(sol);
    if (!sol.converged()) ++failed;
    const double gamma = sol.objective + s.eps * s.prior.cost(y);
    probes.push_back({{"u", u},
                      {"y", vector_json(y)},
                      {"quasipotential", sol.objective},
                      {"log_posterior", -gamma / s.eps},
                      {"status", to_string(sol.status)}});
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%s\n", u, y[0], sol.objective,
                  -gamma / s.eps, to_string(sol.status));
    csv += buf;
  }
  c.report["timings"]["solve_seconds"] = clock.seconds();
  c.report["result"]["probes"] = probes;
  c.report["result"]["failed_probes"] = failed;
  write_text(c.file("quasipotential.csv"), csv);
  c.write_report();
  out << c.opt.points << " probes, " << failed << " not converged\n";
  return failed ? kExitNotConverged : kExitOk;
}

int cmd_psafety(Context& c, std::ostream& out) {
  const Scenario& s = c.scenario;
  PsafetyOptions po;
  po.seed = c.seed;
  po.threads = c.opt.threads;
  po.solver = s.solver;
  Stopwatch clock;
  const PsafetyEstimate e = weak_psafety(s.model, s.unsafe, s.prior, s.eps, s.window, po);
  c.report["timings"]["psafety_seconds"] = clock.seconds();
  c.report["result"]["psafety"] = psafety_json(e);
  Json p = report_header("psafety", c.config, c.seed);
  p.erase("timings");
  p["eps"] = s.eps;
  p["psafety"] = psafety_json(e);
  write_text(c.file("psafety.json"), dump_json(p));
  c.write_report();
  out << "p-safety = " << e.estimate << " +- " << e.error << " (" << e.method << ")\n";
  return e.failed_probes ? kExitNotConverged : kExitOk;
}

int cmd_mc(Context& c, std::ostream& out) {
  const Scenario& s = c.scenario;
  const long paths = c.opt.paths.value_or(s.mc.paths);
  const double dt = c.opt.dt.value_or(s.mc.dt);
  if (paths < 1) throw ConfigError("--paths must be positive");
  if (!(dt > 0.0)) throw ConfigError("--dt must be positive");
  const double horizon = s.window.upper;
  Stopwatch clock;
  const VariationalSolution tilt = run_ml(c);
  c.report["timings"]["solve_seconds"] = clock.seconds();
  c.report["result"]["ml"] = solution_json(tilt);
  if (!tilt.converged()) {
    c.write_report();
    return kExitNotConverged;
  }
  const Vec start = s.prior.mean();
  Stopwatch crude_clock;
  const EstimateWithCI crude = estimate_hitting_probability(
      s.model, start, s.unsafe, s.eps, horizon, dt, paths, c.seed, c.opt.threads);
  c.report["timings"]["crude_seconds"] = crude_clock.seconds();
  Json r = c.report["result"];
  r["horizon"] = horizon;
  r["dt"] = dt;
  r["eps"] = s.eps;
  r["ldp"] = {{"quasipotential", tilt.objective},
              {"estimate", ldt_hitting_probability(tilt.objective, s.eps)},
              {"eps_log", -tilt.objective}};
  auto with_log = [&](const EstimateWithCI& e) {
    Json j = estimate_json(e);
    j["eps_log"] = e.estimate > 0.0 ? Json(s.eps * std::log(e.estimate)) : Json(nullptr);
    return j;
  };
  r["crude"] = with_log(crude);
  if (!tilt.trivial()) {
    Stopwatch is_clock;
    const EstimateWithCI is = importance_sampling_hitting(
        s.model, tilt, s.unsafe, s.eps, horizon, dt, paths, c.seed, c.opt.threads);
    c.report["timings"]["importance_seconds"] = is_clock.seconds();
    r["importance"] = with_log(is);
    out << "importance sampling P = " << is.estimate << " +- " << is.standard_error << "\n";
  }
  c.report["result"] = r;
  c.write_report();
  out << "crude P = " << crude.estimate << " +- " << crude.standard_error
      << "  LDP exp(-Q/eps) = " << ldt_hitting_probability(tilt.objective, s.eps) << "\n";
  return kExitOk;
}

VariationalSolution load_solution(const Context& c, const std::string& kind) {
  const fs::path dir = c.opt.input;
  const Json rep = Json::parse(read_text((dir / "report.json").string()));
  if (!rep.contains("result") || !rep["result"].contains(kind)) {
    throw ConfigError("input report has no '" + kind + "' solution");
  }
  const PathTable table = read_path_csv((dir / ("path_" + kind + ".csv")).string());
  return solution_from_report(rep["result"][kind], table);
}

int cmd_verify(Context& c, std::ostream& out) {
  const Scenario& s = c.scenario;
  const PmpTolerances tol;
  std::vector<std::pair<std::string, VariationalSolution>> solutions;
  Stopwatch clock;
  if (!c.opt.input.empty()) {
    std::error_code ec;
    const fs::path dir = c.opt.input;
    for (const std::string kind : {"map", "ml"}) {
      if (fs::exists(dir / ("path_" + kind + ".csv"), ec)) {
        solutions.emplace_back(kind, load_solution(c, kind));
      }
    }
    if (solutions.empty()) throw ConfigError("no path_map.csv or path_ml.csv in " + c.opt.input);
  } else {
    solutions.emplace_back("map", run_map(c));
    solutions.emplace_back("ml", run_ml(c));
  }
  c.report["timings"]["solve_seconds"] = clock.seconds();
  bool all_passed = true;
  bool all_converged = true;
  bool wrote_adjoint = false;
  for (const auto& [kind, sol] : solutions) {
    Json entry;
    entry["solution"] = solution_json(sol);
    if (!sol.converged()) {
      all_converged = false;
    } else if (sol.trivial()) {
      entry["residuals"] = nullptr;
    } else {
      const ResidualReport r = transversality_residuals(
          s.model, sol, kind == "map" ? &s.prior : nullptr, s.unsafe, s.eps);
      entry["residuals"] = residual_json(r, tol);
      all_passed = all_passed && r.passed(tol);
      out << kind << ": residuals " << (r.passed(tol) ? "pass" : "FAIL") << "\n";
      if (!wrote_adjoint) {
        const AdjointPath adj = integrate_adjoint(s.model, sol, sol.adjoint.front());
        Path p{adj.grid, sol.path.states, optimal_deviation(s.model, adj)};
        write_path_csv(c.file("adjoint.csv"), p, adj.lambda);
        wrote_adjoint = true;
      }
    }
    c.report["result"][kind] = entry;
  }
  c.report["result"]["passed"] = all_passed && all_converged;
  c.write_report();
  return all_passed && all_converged ? kExitOk : kExitNotConverged;
}

int cmd_list(std::ostream& out) {
  for (const std::string& name : builtin_scenario_names()) {
    out << name << "\t" << builtin_scenario(name).description << "\n";
  }
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Large-deviation safety analysis of weakly perturbed systems", "ldsafe"};
  app.require_subcommand(1);
  Options opt;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--scenario", opt.scenario, "scenario TOML file or built-in name");
    sub->add_option("--seed", opt.seed, "random seed (defaults to mc.seed)");
    sub->add_option("--threads", opt.threads, "worker threads");
    sub->add_option("--out", opt.out, "output directory");
    sub->add_option("--tol", opt.tol, "stationarity tolerance of the solver");
    sub->add_option("--nodes", opt.nodes, "grid intervals");
    return sub;
  };
  CLI::App* solve_ml_cmd = common(app.add_subcommand("solve-ml", "quasi-potential from the prior mean"));
  CLI::App* solve_map_cmd = common(app.add_subcommand("solve-map", "most probable unsafe path"));
  CLI::App* qmap = common(app.add_subcommand("quasipotential-map", "Q(y) on a line through the prior mean"));
  qmap->add_option("--points", opt.points, "number of probes");
  qmap->add_option("--span", opt.span, "half-width in prior standard deviations");
  CLI::App* psafety = common(app.add_subcommand("psafety", "weak p-safety integral"));
  CLI::App* mc = common(app.add_subcommand("mc-validate", "crude and importance-sampled MC against the LDP estimate"));
  mc->add_option("--paths", opt.paths, "sample paths");
  mc->add_option("--dt", opt.dt, "Euler-Maruyama step");
  CLI::App* verify = common(app.add_subcommand("verify-pmp", "necessary-condition residuals"));
  verify->add_option("--input", opt.input, "directory holding report.json and path CSVs");
  CLI::App* list = app.add_subcommand("list-scenarios", "print the built-in scenarios");

  std::vector<std::string> storage{"ldsafe"};
  storage.insert(storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (std::string& a : storage) argv.push_back(a.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (list->parsed()) return cmd_list(out);
    CLI::App* sub = app.get_subcommands().front();
    Context c = make_context(sub->get_name(), opt);
    if (sub == solve_ml_cmd) return cmd_solve(c, false, out);
    if (sub == solve_map_cmd) return cmd_solve(c, true, out);
    if (sub == qmap) return cmd_qmap(c, out);
    if (sub == psafety) return cmd_psafety(c, out);
    if (sub == mc) return cmd_mc(c, out);
    if (sub == verify) return cmd_verify(c, out);
    err << "ldsafe: unknown command\n";
    return kExitConfig;
  } catch (const ConfigError& e) {
    err << "ldsafe: config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const SolverError& e) {
    err << "ldsafe: solver did not converge: " << e.what() << "\n";
    return kExitNotConverged;
  } catch (const std::exception& e) {
    err << "ldsafe: internal error: " << e.what() << "\n";
    return kExitInternal;
  }
}

}  // namespace ldsafe
