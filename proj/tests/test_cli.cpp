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

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "ldsafe/cli.hpp"
#include "ldsafe/config.hpp"
#include "ldsafe/report.hpp"

using namespace ldsafe;
namespace fs = std::filesystem;

namespace {

std::string scenario_dir() {
  const char* dir = std::getenv("LDSAFE_SCENARIO_DIR");
  return dir ? dir : "scenarios";
}

std::string scenario_file(const std::string& name) {
  return (fs::path(scenario_dir()) / (name + ".toml")).string();
}

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("ldsafe_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

Json read_json(const fs::path& p) { return Json::parse(read_text(p.string())); }

}  // namespace

TEST_CASE("config parsing") {
  const ScenarioConfig c = parse_config(R"(
name = "demo"
[model]
kind = "linear"
rate = 2.0
eps = 0.05
[unsafe_set]
threshold = 1.5
[prior]
mean = [0.2]
variance = [4.0]
[solver]
window = [0.5, 2.0]
nodes = 64
[mc]
seed = 12
)");
  CHECK(c.name == "demo");
  CHECK(c.model.kind == "linear");
  CHECK(c.model.rate == 2.0);
  CHECK(c.model.eps == 0.05);
  CHECK(c.unsafe.threshold == 1.5);
  CHECK(c.prior.covariance(0, 0) == 4.0);
  CHECK(c.window.lower == 0.5);
  CHECK(c.solver.nodes == 64);
  CHECK(c.mc.seed == 12);
  const Scenario s = build_scenario(c);
  CHECK(s.model.drift(Vec::Constant(1, 1.0))[0] == doctest::Approx(-2.0));
}

TEST_CASE("unknown keys and bad values are config errors") {
  CHECK_THROWS_AS(parse_config("[model]\nkind = \"brownian\"\nepss = 0.1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[modle]\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("extra = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[model]\nkind = \"quantum\"\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[model]\neps = \"big\"\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[solver]\nnodes = 1.5\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[solver]\nwindow = [1.0]\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[model\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[model]\nkind = \"brownian\"\nrate = 1.0\n"), ConfigError);
  CHECK_THROWS_AS(build_scenario(parse_config("[prior]\nmean = [0.0, 1.0]\n")), ConfigError);
  CHECK_THROWS_AS(build_scenario(parse_config("[unsafe_set]\nkind = \"collision\"\n")), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/file.toml"), ConfigError);
}

TEST_CASE("canonical TOML round trip and hash") {
  for (const std::string& name : builtin_scenario_names()) {
    const ScenarioConfig c = builtin_config(name);
    const std::string text = to_toml(c);
    CHECK(to_toml(parse_config(text)) == text);
    CHECK(config_hash(parse_config(text)) == config_hash(c));
    CHECK(config_hash(c).size() == 16);
  }
  ScenarioConfig a = builtin_config("brownian1d");
  ScenarioConfig b = a;
  b.model.eps = 0.2;
  CHECK(config_hash(a) != config_hash(b));
}

TEST_CASE("built-in configs rebuild the built-in scenarios") {
  for (const std::string& name : builtin_scenario_names()) {
    const Scenario from_config = build_scenario(builtin_config(name));
    const Scenario direct = builtin_scenario(name);
    CAPTURE(name);
    CHECK(from_config.eps == direct.eps);
    CHECK(from_config.window.lower == direct.window.lower);
    CHECK(from_config.window.upper == direct.window.upper);
    CHECK((from_config.prior.mean() - direct.prior.mean()).norm() == 0.0);
    CHECK((from_config.prior.covariance() - direct.prior.covariance()).norm() == 0.0);
    const Vec x = direct.prior.mean();
    CHECK((from_config.model.drift(x) - direct.model.drift(x)).norm() == 0.0);
    CHECK(from_config.unsafe.level(x) == direct.unsafe.level(x));
  }
}

TEST_CASE("shipped scenario files load") {
  int count = 0;
  for (const auto& entry : fs::directory_iterator(scenario_dir())) {
    if (entry.path().extension() != ".toml") continue;
    CAPTURE(entry.path().string());
    CHECK_NOTHROW(build_scenario(load_config(entry.path().string())));
    ++count;
  }
  CHECK(count >= 5);
  const ScenarioConfig file = load_config(scenario_file("conjunction"));
  ScenarioConfig builtin = builtin_config("conjunction");
  CHECK(to_toml(file) == to_toml(builtin));
}

TEST_CASE("path CSV round trip preserves the action exactly") {
  Path p;
  p.grid = TimeGrid::uniform(1.3, 17);
  std::vector<Vec> lam;
  for (std::size_t k = 0; k < p.grid.size(); ++k) {
    const double t = p.grid[k];
    p.states.push_back((Vec(2) << std::sin(t) / 3.0, std::exp(-t) * 1e-7).finished());
    p.deviations.push_back(Vec::Constant(1, std::cos(7.0 * t) / 7.0));
    lam.push_back((Vec(2) << t / 11.0, -t * 1e12).finished());
  }
  const PathTable t = parse_path_csv(path_csv(p, lam));
  CHECK(std::abs(action_functional(t.path) - action_functional(p)) <= 1e-12);
  CHECK(t.path.grid.times() == p.grid.times());
  for (std::size_t k = 0; k < p.grid.size(); ++k) {
    CHECK(t.path.states[k] == p.states[k]);
    CHECK(t.adjoint[k] == lam[k]);
  }
  CHECK(path_csv(p, lam).rfind("t,x0,x1,w0,lambda0,lambda1\n", 0) == 0);
  CHECK_THROWS(parse_path_csv("t,x0\n0,1,2\n"));
  CHECK_THROWS(parse_path_csv("q,x0\n"));
}

TEST_CASE("list-scenarios") {
  const Run r = run({"list-scenarios"});
  CHECK(r.code == kExitOk);
  CHECK(r.out.find("conjunction") != std::string::npos);
}

TEST_CASE("solve-map writes the closed-form MAP report") {
  const fs::path out = fresh_dir("map");
  const Run r = run({"solve-map", "--scenario", scenario_file("brownian1d"), "--seed", "7", "--out", out.string()});
  REQUIRE(r.code == kExitOk);
  const Json rep = read_json(out / "report.json");
  CHECK(rep["report_version"] == kReportVersion);
  CHECK(rep["seed"] == 7);
  CHECK(rep["scenario"]["config_hash"].get<std::string>().size() == 16);
  CHECK(rep["result"]["map"]["start"][0].get<double>() == doctest::Approx(1.0 / 1.1).epsilon(1e-5));
  CHECK(rep["result"]["map"]["objective"].get<double>() == doctest::Approx(1.0 / 22.0).epsilon(1e-5));
  const PathTable t = read_path_csv((out / "path_map.csv").string());
  CHECK(t.path.grid.intervals() == 200);
  CHECK(t.adjoint.size() == t.path.states.size());

  const Run v = run({"verify-pmp", "--scenario", scenario_file("brownian1d"), "--input", out.string(),
                     "--out", (out / "verify").string()});
  CHECK(v.code == kExitOk);
  const Json vr = read_json(out / "verify" / "report.json");
  CHECK(vr["result"]["passed"] == true);
  CHECK(fs::exists(out / "verify" / "adjoint.csv"));
}

TEST_CASE("reports are byte-identical apart from timings") {
  const fs::path a = fresh_dir("repro_a");
  const fs::path b = fresh_dir("repro_b");
  const std::vector<std::string> base = {"mc-validate", "--scenario", scenario_file("ou1d"), "--seed", "3",
                                         "--paths", "2000", "--dt", "0.01", "--nodes", "50"};
  auto with = [&](const fs::path& out, const std::string& threads) {
    std::vector<std::string> args = base;
    args.insert(args.end(), {"--out", out.string(), "--threads", threads});
    return run(args);
  };
  REQUIRE(with(a, "1").code == kExitOk);
  REQUIRE(with(b, "2").code == kExitOk);
  const Json ra = read_json(a / "report.json");
  const Json rb = read_json(b / "report.json");
  CHECK(ra.contains("timings"));
  CHECK(dump_json(without_timings(ra)) == dump_json(without_timings(rb)));
  CHECK(ra["result"]["crude"]["samples"] == 2000);
  CHECK(ra["result"].contains("importance"));
}

TEST_CASE("deterministic hit gives a trivial report") {
  const fs::path out = fresh_dir("trivial");
  const Run r = run({"solve-ml", "--scenario", scenario_file("drift-up"), "--out", out.string()});
  CHECK(r.code == kExitOk);
  const Json rep = read_json(out / "report.json");
  CHECK(rep["result"]["ml"]["status"] == "trivial_deterministic_hit");
  CHECK(rep["result"]["ml"]["objective"].get<double>() == 0.0);
}

TEST_CASE("exit codes") {
  const fs::path out = fresh_dir("codes");
  CHECK(run({"solve-ml", "--scenario", "/nonexistent.toml", "--out", out.string()}).code == kExitConfig);
  CHECK(run({"solve-ml", "--out", out.string()}).code == kExitConfig);
  CHECK(run({"frobnicate"}).code == kExitConfig);
  CHECK(run({"solve-ml", "--scenario", "brownian1d", "--nodes", "1", "--out", out.string()}).code == kExitConfig);

  const fs::path bad = out / "typo.toml";
  write_text(bad.string(), "[model]\nkind = \"brownian\"\nepsilon = 0.1\n");
  const Run typo = run({"solve-ml", "--scenario", bad.string(), "--out", out.string()});
  CHECK(typo.code == kExitConfig);
  CHECK(typo.err.find("epsilon") != std::string::npos);

  const fs::path stiff = out / "capped.toml";
  write_text(stiff.string(),
             "[model]\nkind = \"linear\"\nrate = 1.0\n[solver]\nmax_iterations = 1\nmax_outer_iterations = 1\n");
  const Run capped = run({"solve-ml", "--scenario", stiff.string(), "--out", out.string()});
  CHECK(capped.code == kExitNotConverged);
  CHECK(read_json(out / "report.json")["result"]["ml"]["status"] == "not_converged");
}

TEST_CASE("quasipotential-map and psafety commands") {
  const fs::path out = fresh_dir("qmap");
  const Run q = run({"quasipotential-map", "--scenario", "brownian1d", "--points", "5", "--span", "1",
                     "--out", out.string()});
  CHECK(q.code == kExitOk);
  const Json rep = read_json(out / "report.json");
  REQUIRE(rep["result"]["probes"].size() == 5);
  CHECK(rep["result"]["probes"][0]["quasipotential"].get<double>() == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(rep["result"]["probes"][4]["quasipotential"].get<double>() == 0.0);
  CHECK(fs::exists(out / "quasipotential.csv"));

  const fs::path ps = fresh_dir("psafety");
  const Run p = run({"psafety", "--scenario", "brownian1d", "--nodes", "60", "--out", ps.string()});
  CHECK(p.code == kExitOk);
  const Json pj = read_json(ps / "psafety.json");
  CHECK(pj["psafety"]["estimate"].get<double>() == doctest::Approx(0.27702).epsilon(1e-3));
}
