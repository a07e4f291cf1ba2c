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

#include <optional>
#include <vector>

#include "ldsafe/action.hpp"
#include "ldsafe/common.hpp"
#include "ldsafe/dynamics.hpp"
#include "ldsafe/unsafe_set.hpp"

namespace ldsafe {

/// Problem shape for the shooting transcription.
///
/// Physical time is t = s tau on a uniform unit grid of `intervals` steps. Controls are
/// sampled at every node and at every interval midpoint; one RK4 step uses
/// (w_k, w_{k+1/2}, w_{k+1}) for stages (1, 2-3, 4), and the action is integrated with the
/// matching Simpson weights. The start state is fixed (`start`) or free with a Gaussian
/// cost eps S0; the time scale is fixed or free in [t_min, t_max].
struct TranscriptionSetup {
  int intervals = 200;
  Vec start;                                  // used when prior is null
  const InitialDistribution* prior = nullptr; // free start state when set
  double eps = 0.0;
  double t_min = 1.0;
  double t_max = 1.0;
  bool free_time = false;
  double reference_time = 1.0;   // fixes the control scaling
  double constraint_scale = 1.0; // level values are divided by this
};

struct ControlSamples {
  std::vector<Vec> node;  // intervals + 1
  std::vector<Vec> mid;   // intervals
};

/// Values and decision-vector gradients of the three objective pieces.
struct TranscriptionEval {
  double action = 0.0;
  double prior_cost = 0.0;  // eps S0(phi_0); zero for a fixed start
  double level = 0.0;       // f(phi_N), unscaled
  Vec grad_action;
  Vec grad_prior;
  Vec grad_level;  // gradient of f (unscaled)
};

/// Discrete adjoint quantities for a terminal multiplier alpha.
struct TranscriptionCostates {
  std::vector<Vec> node;          // lambda_k = -alpha df/dphi_k
  std::vector<Vec> control_node;  // sigma^T lambda seen by the node controls
  std::vector<Vec> control_mid;   // same for the midpoint controls
};

/// Decision vector layout: [scaled node controls | scaled midpoint controls |
/// whitened start offset (free start) | time angle (free time)].
class Transcription {
 public:
  Transcription(const DynamicsModel& model, const UnsafeSet& unsafe, TranscriptionSetup setup);

  const TranscriptionSetup& setup() const { return setup_; }
  int size() const { return size_; }
  bool free_start() const { return setup_.prior != nullptr; }

  Vec encode(const ControlSamples& controls, const Vec& start, double time) const;
  ControlSamples controls(const Vec& x) const;
  Vec initial_state(const Vec& x) const;
  double final_time(const Vec& x) const;
  std::vector<Vec> states(const Vec& x) const;

  TranscriptionEval evaluate(const Vec& x, bool with_gradient) const;
  TranscriptionCostates costates(const Vec& x, double alpha) const;

  /// Scaled stationarity residual of grad (the gradient of action + prior + alpha f in
  /// decision variables); the control part equals max |w - sigma^T lambda| / (1 + |w|).
  double stationarity(const Vec& x, const Vec& grad, double objective) const;

 private:
  struct Sweep;
  Sweep forward(const Vec& x) const;
  // Reverse pass of f(phi_N); fills physical-control, start-state and time gradients.
  void reverse(const Vec& x, const Sweep& sweep, std::vector<Vec>& node_bar,
               std::vector<Vec>& mid_bar, std::vector<Vec>* state_bar, double& time_bar) const;
  double node_weight(int k) const;
  double time_from_angle(double angle) const;
  double angle_from_time(double time) const;
  double time_derivative(double angle) const;

  const DynamicsModel& model_;
  const UnsafeSet& unsafe_;
  TranscriptionSetup setup_;
  int n_ = 0;
  int d_ = 0;
  int size_ = 0;
  int mid_offset_ = 0;
  int start_offset_ = 0;
  int time_offset_ = 0;
  Mat start_map_;  // L / sqrt(eps)
  Mat start_map_inv_t_;
};

}  // namespace ldsafe
