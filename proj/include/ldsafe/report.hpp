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

#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "ldsafe/config.hpp"
#include "ldsafe/instanton_solver.hpp"
#include "ldsafe/montecarlo.hpp"
#include "ldsafe/pmp_verify.hpp"
#include "ldsafe/probability.hpp"

namespace ldsafe {

using Json = nlohmann::ordered_json;

inline constexpr const char* kReportVersion = "ldsafe-report/1";

Json vector_json(const Vec& v);
Vec vector_from_json(const Json& j);

/// T, S_T, S0, objective, alpha, status and the solver diagnostics.
Json solution_json(const VariationalSolution& solution);
Json residual_json(const ResidualReport& report, const PmpTolerances& tol);
Json estimate_json(const EstimateWithCI& estimate);
Json psafety_json(const PsafetyEstimate& estimate);

/// Report skeleton: version, command, scenario fingerprint and seed. Wall-clock data go
/// under "timings" so that everything else is reproducible.
Json report_header(const std::string& command, const ScenarioConfig& config, std::uint64_t seed);

/// Same document without "timings", for reproducibility comparisons.
Json without_timings(const Json& report);

/// Two-space indented JSON followed by a newline.
std::string dump_json(const Json& j);
void write_text(const std::string& path, const std::string& text);
std::string read_text(const std::string& path);

/// Rows of t, state, w and lambda columns, all at %.17g. Lambda columns are written when
/// the solution carries an adjoint.
struct PathTable {
  Path path;
  std::vector<Vec> adjoint;
};

std::string path_csv(const Path& path, const std::vector<Vec>& adjoint);
void write_path_csv(const std::string& file, const Path& path, const std::vector<Vec>& adjoint);
PathTable parse_path_csv(const std::string& text);
PathTable read_path_csv(const std::string& file);

/// Rebuilds the parts of a solution that residual checks need from its report entry and
/// path table.
VariationalSolution solution_from_report(const Json& summary, const PathTable& table);

}  // namespace ldsafe
