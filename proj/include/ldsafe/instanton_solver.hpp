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

#include "ldsafe/action.hpp"
#include "ldsafe/dynamics.hpp"
#include "ldsafe/transcription.hpp"
#include "ldsafe/unsafe_set.hpp"

namespace ldsafe {

/// Bounds [lower, upper] on the hitting time; lower == upper fixes it.
struct TimeWindow {
  double lower = 1.0;
  double upper = 1.0;

  static TimeWindow fixed(double t) { return {t, t}; }
  bool is_fixed() const { return lower == upper; }
  void validate() const;
};

enum class InitialGuessKind { Auto, StraightLine, Deterministic };

struct SolverOptions {
  int nodes = 200;  // grid intervals
  double constraint_tol = 1e-8;   // on f / (1 + |f(start)|)
  double gradient_tol = 1e-9;     // scaled stationarity, see Transcription::stationarity
  double complementarity_tol = 1e-10;
  int max_iterations = 500;       // per inner quasi-Newton solve
  int max_outer_iterations = 40;
  int scan_points = 8;
  int lbfgs_memory = 20;
  InitialGuessKind initial_guess = InitialGuessKind::Auto;
};

enum class SolveStatus {
  Converged,
  NotConverged,
  TrivialDeterministicHit,  // the unperturbed flow already reaches D in the window
  StartInsideUnsafeSet,
};

const char* to_string(SolveStatus status);

enum class ProblemKind { MaximumLikelihood, MaximumAPosteriori };

/// Output of an ML or MAP solve.
///
/// `path` holds the node states and node deviations; `midpoint_deviations` holds the
/// interval-midpoint controls the transcription also optimizes. `adjoint` is the discrete
/// costate at the nodes (lambda(T) = -alpha grad f). `action` is the Simpson-rule action of
/// the transcription, which agrees with action_functional(path) to O(h^2).
struct VariationalSolution {
  ProblemKind kind = ProblemKind::MaximumLikelihood;
  SolveStatus status = SolveStatus::NotConverged;
  Path path;
  std::vector<Vec> midpoint_deviations;
  std::vector<Vec> adjoint;
  double final_time = 0.0;
  double alpha = 0.0;
  double action = 0.0;
  double initial_cost = 0.0;  // S0(phi(0)); zero for ML solves
  double objective = 0.0;     // Q for ML, J = S + eps S0 for MAP
  double eps = 0.0;
  double terminal_level = 0.0;  // f(phi(T))
  double stationarity = 0.0;
  TimeWindow window;
  bool time_at_lower_bound = false;
  bool time_at_upper_bound = false;
  int iterations = 0;  // total inner iterations

  bool converged() const {
    return status == SolveStatus::Converged || status == SolveStatus::TrivialDeterministicHit ||
           status == SolveStatus::StartInsideUnsafeSet;
  }
  bool trivial() const {
    return status == SolveStatus::TrivialDeterministicHit ||
           status == SolveStatus::StartInsideUnsafeSet;
  }
  bool time_interior() const {
    return !window.is_fixed() && !time_at_lower_bound && !time_at_upper_bound;
  }
  const Vec& start() const { return path.states.front(); }
};

/// Everything one solve needs. `start` is used for ML, `prior` and `eps` for MAP.
struct SolveRequest {
  ProblemKind kind = ProblemKind::MaximumLikelihood;
  const DynamicsModel* model = nullptr;
  const UnsafeSet* unsafe = nullptr;
  Vec start;
  const InitialDistribution* prior = nullptr;
  double eps = 0.0;
  TimeWindow window;
  SolverOptions options;
};

/// Optional starting point in place of the default guess (used for warm starts and
/// multi-start); controls live on the unit tau grid.
struct InitialGuess {
  ControlSamples controls;
  Vec start;
  double time = 1.0;
  double multiplier = 0.0;
};

InitialGuess guess_from(const VariationalSolution& solution);

VariationalSolution solve(const SolveRequest& request, const InitialGuess* guess = nullptr);

/// Quasi-potential problem: minimum action from a fixed start y to D within the window.
VariationalSolution solve_ml(const DynamicsModel& model, const UnsafeSet& unsafe, const Vec& y,
                             const TimeWindow& window, const SolverOptions& options = {},
                             const InitialGuess* guess = nullptr);

/// Most probable unsafe path with a free start weighted by eps S0.
VariationalSolution solve_map(const DynamicsModel& model, const UnsafeSet& unsafe,
                              const InitialDistribution& dist, double eps,
                              const TimeWindow& window, const SolverOptions& options = {},
                              const InitialGuess* guess = nullptr);

/// Q(y); zero inside D. Throws SolverError when the solve does not converge.
double quasipotential(const DynamicsModel& model, const UnsafeSet& unsafe, const Vec& y,
                      const TimeWindow& window, const SolverOptions& options = {});

struct MultiStartOptions {
  int starts = 8;
  std::uint64_t seed = 0;
  int threads = 1;
  double control_jitter = 0.5;  // relative amplitude of random control perturbations
  double time_jitter = 0.25;    // fraction of the window width
  double dedup_tol = 1e-3;      // relative sup-norm distance for duplicates
};

/// Repeated solves from randomized guesses; start 0 is the default guess. Returns the
/// converged distinct minimizers sorted by (objective, final time).
std::vector<VariationalSolution> multi_start(const SolveRequest& request,
                                             const MultiStartOptions& options);

/// Sup-norm distance between two solutions' state paths, compared on the finer grid.
double path_distance(const Path& a, const Path& b);

}  // namespace ldsafe
