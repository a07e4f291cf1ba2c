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
#include <vector>

#include "ldsafe/action.hpp"
#include "ldsafe/dynamics.hpp"
#include "ldsafe/instanton_solver.hpp"
#include "ldsafe/unsafe_set.hpp"

namespace ldsafe {

struct SimulationResult {
  Vec terminal;
  bool hit = false;
  std::optional<double> hitting_time;  // first grid time with f <= 0
  std::vector<Vec> trajectory;         // filled when requested, one state per grid time
};

struct EstimateWithCI {
  double estimate = 0.0;
  double standard_error = 0.0;
  long samples = 0;
  double effective_sample_size = 0.0;
  bool degenerate_weights = false;  // effective sample size below 10
};

/// Euler-Maruyama on ceil(T/dt) uniform steps; stream `path` of `seed` drives the noise.
/// With an unsafe set the first grid time in D is recorded; the path still runs to T.
SimulationResult simulate_em(const DynamicsModel& model, const Vec& y0, double eps, double t_end,
                             double dt, std::uint64_t seed, const UnsafeSet* unsafe = nullptr,
                             bool store_trajectory = false, std::uint64_t path = 0);

/// Crude estimate of P_y[tau <= T] with a binomial standard error.
EstimateWithCI estimate_hitting_probability(const DynamicsModel& model, const Vec& start,
                                            const UnsafeSet& unsafe, double eps, double t_end,
                                            double dt, long n, std::uint64_t seed,
                                            int threads = 1);

/// Same with initial states drawn from the prior.
EstimateWithCI estimate_hitting_probability(const DynamicsModel& model,
                                            const InitialDistribution& start,
                                            const UnsafeSet& unsafe, double eps, double t_end,
                                            double dt, long n, std::uint64_t seed,
                                            int threads = 1);

/// Fraction of paths started at phi(0) staying within Euclidean distance delta of phi
/// (linearly interpolated) at every simulation time up to phi's final time.
EstimateWithCI tube_probability(const DynamicsModel& model, const Path& phi, double delta,
                                double eps, double dt, long n, std::uint64_t seed,
                                int threads = 1);

/// Hitting probability under the drift b + sigma w(t) of `tilt`, reweighted by the
/// change-of-measure factor up to the hitting time. The tilt is zero past its final time.
EstimateWithCI importance_sampling_hitting(const DynamicsModel& model,
                                           const VariationalSolution& tilt,
                                           const UnsafeSet& unsafe, double eps, double t_end,
                                           double dt, long n, std::uint64_t seed,
                                           int threads = 1);

}  // namespace ldsafe
