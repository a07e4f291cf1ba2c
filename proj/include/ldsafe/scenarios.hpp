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
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ldsafe/action.hpp"
#include "ldsafe/dynamics.hpp"
#include "ldsafe/instanton_solver.hpp"
#include "ldsafe/unsafe_set.hpp"

namespace ldsafe {

struct MonteCarloDefaults {
  double dt = 1e-3;
  int paths = 100000;
  std::uint64_t seed = 0;
};

/// A complete problem: model, unsafe set, prior, noise scale, hitting window and defaults.
struct Scenario {
  std::string name;
  std::string description;
  DynamicsModel model;
  UnsafeSet unsafe;
  InitialDistribution prior;
  double eps = 0.1;
  TimeWindow window;
  SolverOptions solver;
  MonteCarloDefaults mc;

  /// Throws DimensionError when model, unsafe set and prior disagree.
  void validate() const;
};

/// b = 0, sigma = 1, D = {x >= level}. Prior N(mean, variance).
Scenario brownian_1d(double level, const TimeWindow& window, double eps = 0.1,
                     double prior_mean = 0.0, double prior_variance = 1.0);

/// b(x) = -rate x, sigma = 1, D = {x >= level}.
Scenario linear_1d(double rate, double level, const TimeWindow& window, double eps = 0.1,
                   double prior_mean = 0.0, double prior_variance = 1.0);

/// Gradient and Hessian of U(r) = -gm / |r|.
Eigen::Vector3d gravity_gradient(double gm, const Eigen::Vector3d& r);
Eigen::Matrix3d gravity_hessian(double gm, const Eigen::Vector3d& r);
double orbital_energy(double gm, const Eigen::Vector3d& r, const Eigen::Vector3d& v);

struct ConjunctionConfig {
  double gm = 3.986004418e14;
  Eigen::Vector3d r1{-3.7179e6, 6.1141e6, 1.4944e4};
  Eigen::Vector3d r2{-3.7129e6, 6.1141e6, 1.4944e4};
  std::optional<Eigen::Vector3d> v1;  // constructed when absent
  std::optional<Eigen::Vector3d> v2;
  double miss_distance = 7000.0;
  double gamma = 2500.0;
  double eps = 1e-3;
  double sigma = 1e-4;
  double position_variance = 1e4;  // (100 m)^2
  double velocity_variance = 1e-2;  // (0.1 m/s)^2
  TimeWindow window{3600.0, 5400.0};
};

struct ConjunctionVelocities {
  Eigen::Vector3d v1;
  Eigen::Vector3d v2;
  double approach_time = 0.0;
};

/// Object 1 on a circular polar orbit heading north; object 2 gets a velocity offset chosen
/// so that, at three quarters of object 1's period, the separation is `miss_distance`,
/// orthogonal to the relative velocity and to object 1's along-track direction.
ConjunctionVelocities construct_conjunction_velocities(double gm, const Eigen::Vector3d& r1,
                                                       const Eigen::Vector3d& r2,
                                                       double miss_distance);

/// Twelve-state mechanical model, state (r1, r2, v1, v2), f = |r1 - r2|^2 - gamma.
Scenario two_body_conjunction(const ConjunctionConfig& config = {});

struct ClosestApproach {
  double distance = 0.0;
  double time = 0.0;
};

/// Minimum separation of the deterministic flow over [begin, end], sampled on `intervals`
/// steps of [0, end] and refined by a parabola through the best sample and its neighbours.
/// Reads positions 0..2 and 3..5 of a twelve-state conjunction model.
ClosestApproach closest_approach(const DynamicsModel& model, const Vec& x0, double begin,
                                 double end, int intervals = 4000);

std::vector<std::string> builtin_scenario_names();
/// Builds "brownian1d", "ou1d", "brownian1d-free", "double-target" or "conjunction".
Scenario builtin_scenario(const std::string& name);

}  // namespace ldsafe
