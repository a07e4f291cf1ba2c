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

#include "ldsafe/report.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace ldsafe {
namespace {

SolveStatus status_from(const std::string& s) {
  for (SolveStatus st : {SolveStatus::Converged, SolveStatus::NotConverged,
                         SolveStatus::TrivialDeterministicHit, SolveStatus::StartInsideUnsafeSet}) {
    if (s == to_string(st)) return st;
  }
  throw std::invalid_argument("unknown solve status '" + s + "'");
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_number(const std::string& cell) {
  std::size_t used = 0;
  const double v = std::stod(cell, &used);
  if (used != cell.size()) throw std::invalid_argument("bad number '" + cell + "' in path table");
  return v;
}

}  // namespace

Json vector_json(const Vec& v) {
  Json j = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back(v[i]);
  return j;
}

Vec vector_from_json(const Json& j) {
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  return v;
}

Json solution_json(const VariationalSolution& s) {
  Json j;
  j["kind"] = s.kind == ProblemKind::MaximumAPosteriori ? "map" : "ml";
  j["status"] = to_string(s.status);
  j["final_time"] = s.final_time;
  j["action"] = s.action;
  j["initial_cost"] = s.initial_cost;
  j["objective"] = s.objective;
  j["alpha"] = s.alpha;
  j["eps"] = s.eps;
  j["terminal_level"] = s.terminal_level;
  j["stationarity"] = s.stationarity;
  j["iterations"] = s.iterations;
  j["window"] = {s.window.lower, s.window.upper};
  j["time_at_lower_bound"] = s.time_at_lower_bound;
  j["time_at_upper_bound"] = s.time_at_upper_bound;
  j["intervals"] = s.path.grid.intervals();
  if (!s.path.states.empty()) {
    j["start"] = vector_json(s.path.states.front());
    j["end"] = vector_json(s.path.states.back());
  }
  return j;
}

Json residual_json(const ResidualReport& r, const PmpTolerances& tol) {
  Json j;
  j["free_start"] = r.free_start;
  j["interior_time"] = r.interior_time;
  j["initial_transversality"] = r.initial_transversality;
  j["final_transversality"] = r.final_transversality;
  j["complementarity"] = r.complementarity;
  j["hamiltonian_final"] = r.hamiltonian_final;
  j["hamiltonian_max"] = r.hamiltonian_max;
  j["hamiltonian_spread"] = r.hamiltonian_spread;
  j["deviation_consistency"] = r.deviation_consistency;
  j["adjoint_reintegration"] = r.adjoint_reintegration;
  j["tolerances"] = {{"transversality", tol.transversality},
                     {"complementarity", tol.complementarity},
                     {"deviation", tol.deviation},
                     {"adjoint", tol.adjoint},
                     {"hamiltonian", tol.hamiltonian}};
  j["passed"] = r.passed(tol);
  return j;
}

Json estimate_json(const EstimateWithCI& e) {
  Json j;
  j["estimate"] = e.estimate;
  j["standard_error"] = e.standard_error;
  j["samples"] = e.samples;
  j["effective_sample_size"] = e.effective_sample_size;
  j["degenerate_weights"] = e.degenerate_weights;
  return j;
}

Json psafety_json(const PsafetyEstimate& e) {
  Json j;
  j["estimate"] = e.estimate;
  j["raw"] = e.raw;
  j["error"] = e.error;
  j["probes"] = e.probes;
  j["failed_probes"] = e.failed_probes;
  j["method"] = e.method;
  return j;
}

Json report_header(const std::string& command, const ScenarioConfig& config, std::uint64_t seed) {
  Json j;
  j["report_version"] = kReportVersion;
  j["command"] = command;
  j["scenario"] = {{"name", config.name}, {"config_hash", config_hash(config)}};
  j["seed"] = seed;
  j["timings"] = Json::object();
  return j;
}

Json without_timings(const Json& report) {
  Json j = report;
  j.erase("timings");
  return j;
}

std::string dump_json(const Json& j) { return j.dump(2) + "\n"; }

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path);
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string path_csv(const Path& path, const std::vector<Vec>& adjoint) {
  path.validate();
  const bool with_w = path.has_deviations();
  const bool with_lambda = !adjoint.empty();
  if (with_lambda && adjoint.size() != path.states.size()) {
    throw DimensionError("path_csv: adjoint length does not match the path");
  }
  const Eigen::Index n = path.states.front().size();
  const Eigen::Index d = with_w ? path.deviations.front().size() : 0;
  std::string out = "t";
  for (Eigen::Index i = 0; i < n; ++i) out += ",x" + std::to_string(i);
  for (Eigen::Index i = 0; i < d; ++i) out += ",w" + std::to_string(i);
  if (with_lambda) {
    for (Eigen::Index i = 0; i < n; ++i) out += ",lambda" + std::to_string(i);
  }
  out += "\n";
  char buf[40];
  auto cell = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out += buf;
  };
  for (std::size_t k = 0; k < path.states.size(); ++k) {
    cell(path.grid[k]);
    auto row = [&](const Vec& v) {
      for (Eigen::Index i = 0; i < v.size(); ++i) {
        out += ',';
        cell(v[i]);
      }
    };
    row(path.states[k]);
    if (with_w) row(path.deviations[k]);
    if (with_lambda) row(adjoint[k]);
    out += "\n";
  }
  return out;
}

void write_path_csv(const std::string& file, const Path& path, const std::vector<Vec>& adjoint) {
  write_text(file, path_csv(path, adjoint));
}

PathTable parse_path_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("path table is empty");
  const std::vector<std::string> head = split(line);
  if (head.empty() || head.front() != "t") throw std::invalid_argument("path table must start with t");
  int n = 0, d = 0, l = 0;
  for (std::size_t i = 1; i < head.size(); ++i) {
    const std::string& h = head[i];
    if (h.rfind("lambda", 0) == 0) ++l;
    else if (h.rfind("x", 0) == 0) ++n;
    else if (h.rfind("w", 0) == 0) ++d;
    else throw std::invalid_argument("unknown path table column '" + h + "'");
  }
  if (n == 0 || (l != 0 && l != n)) throw std::invalid_argument("inconsistent path table columns");
  std::vector<double> times;
  PathTable t;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> cells = split(line);
    if (cells.size() != head.size()) throw std::invalid_argument("ragged path table row");
    std::vector<double> v;
    for (const std::string& c : cells) v.push_back(parse_number(c));
    times.push_back(v[0]);
    t.path.states.push_back(Eigen::Map<const Vec>(v.data() + 1, n));
    if (d) t.path.deviations.push_back(Eigen::Map<const Vec>(v.data() + 1 + n, d));
    if (l) t.adjoint.push_back(Eigen::Map<const Vec>(v.data() + 1 + n + d, l));
  }
  t.path.grid = TimeGrid(std::move(times));
  t.path.validate();
  return t;
}

PathTable read_path_csv(const std::string& file) { return parse_path_csv(read_text(file)); }

VariationalSolution solution_from_report(const Json& j, const PathTable& table) {
  VariationalSolution s;
  s.kind = j.at("kind").get<std::string>() == "map" ? ProblemKind::MaximumAPosteriori
                                                    : ProblemKind::MaximumLikelihood;
  s.status = status_from(j.at("status").get<std::string>());
  s.path = table.path;
  s.adjoint = table.adjoint;
  s.final_time = j.at("final_time").get<double>();
  s.action = j.at("action").get<double>();
  s.initial_cost = j.at("initial_cost").get<double>();
  s.objective = j.at("objective").get<double>();
  s.alpha = j.at("alpha").get<double>();
  s.eps = j.at("eps").get<double>();
  s.terminal_level = j.at("terminal_level").get<double>();
  s.stationarity = j.at("stationarity").get<double>();
  s.iterations = j.at("iterations").get<int>();
  s.window = {j.at("window").at(0).get<double>(), j.at("window").at(1).get<double>()};
  s.time_at_lower_bound = j.at("time_at_lower_bound").get<bool>();
  s.time_at_upper_bound = j.at("time_at_upper_bound").get<bool>();
  return s;
}

}  // namespace ldsafe
