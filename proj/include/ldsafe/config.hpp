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

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ldsafe/scenarios.hpp"

namespace ldsafe {

/// Malformed or inconsistent scenario configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Plain-data description of a scenario, as read from a TOML file.
///
/// Model kinds: "brownian" (b = 0), "linear" (b = -rate x), "affine" (b = a x + c with
/// matrix sigma) and "conjunction". Unsafe set kinds: "threshold", "symmetric_threshold" and
/// "collision". The prior is either mean/covariance or, for the conjunction, per-block
/// variances.
struct ScenarioConfig {
  std::string name = "custom";
  std::string description;

  struct Model {
    std::string kind = "brownian";
    double eps = 0.1;
    double rate = 0.0;
    Mat a;
    Vec c;
    Mat sigma;
    // conjunction
    double gm = 3.986004418e14;
    Vec r1, r2;
    std::optional<Vec> v1, v2;
    double miss_distance = 7000.0;
    double noise = 1e-4;
  } model;

  struct Unsafe {
    std::string kind = "threshold";
    int component = 0;
    double threshold = 1.0;
    double gamma = 2500.0;
  } unsafe;

  struct Prior {
    Vec mean;
    Mat covariance;
    double position_variance = 1e4;  // (100 m)^2
    double velocity_variance = 1e-2;  // (0.1 m/s)^2
  } prior;

  TimeWindow window = TimeWindow::fixed(1.0);
  SolverOptions solver;
  MonteCarloDefaults mc;
};

ScenarioConfig parse_config(const std::string& text, const std::string& source = "<config>");
ScenarioConfig load_config(const std::string& path);

/// Canonical TOML text; parse_config(to_toml(c)) reproduces c.
std::string to_toml(const ScenarioConfig& config);

/// Configuration of a built-in scenario; build_scenario of it matches builtin_scenario.
ScenarioConfig builtin_config(const std::string& name);

/// Throws ConfigError for inconsistent settings.
Scenario build_scenario(const ScenarioConfig& config);

/// 64-bit FNV-1a of the canonical TOML text, as 16 hex digits.
std::string config_hash(const ScenarioConfig& config);

}  // namespace ldsafe
