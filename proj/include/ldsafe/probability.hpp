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
#include <string>

#include "ldsafe/action.hpp"
#include "ldsafe/dynamics.hpp"
#include "ldsafe/instanton_solver.hpp"
#include "ldsafe/unsafe_set.hpp"

namespace ldsafe {

/// exp(-q / eps), the LDP estimate of the hitting probability without prefactor.
double ldt_hitting_probability(double q, double eps);

struct PosteriorEvaluation {
  Vec y;
  double quasipotential = 0.0;
  double prior_term = 0.0;     // eps S0(y)
  double gamma = 0.0;          // Q(y) + eps S0(y)
  double log_posterior = 0.0;  // -gamma / eps, unnormalized
};

/// Throws SolverError when Q(y) cannot be computed.
PosteriorEvaluation posterior_logdensity(const DynamicsModel& model, const UnsafeSet& unsafe,
                                         const InitialDistribution& dist, double eps,
                                         const Vec& y, const TimeWindow& window,
                                         const SolverOptions& options = {},
                                         const InitialGuess* guess = nullptr);

enum class PsafetyMethod { Auto, Quadrature, ImportanceSampling };

struct PsafetyOptions {
  PsafetyMethod method = PsafetyMethod::Auto;
  double box = 5.0;       // half-width of the whitened quadrature box
  int panels = 0;         // Gauss-Legendre panels per dimension; 0 picks 64 (1-D) or 16 (2-D)
  int samples = 256;      // importance samples
  int block = 16;         // probes per warm-start chain
  std::uint64_t seed = 0;
  int threads = 1;
  SolverOptions solver;
};

struct PsafetyEstimate {
  double estimate = 0.0;  // clamped to [0, 1]
  double raw = 0.0;
  double error = 0.0;     // coarse-vs-fine difference or standard error
  int probes = 0;
  int failed_probes = 0;
  std::string method;
};

/// Integral of exp(-Q(y)/eps) p0(y) dy with Q = 0 inside D. Tensor Gauss-Legendre in
/// whitened coordinates for n <= 2, self-normalized importance sampling around the MAP
/// start otherwise.
PsafetyEstimate weak_psafety(const DynamicsModel& model, const UnsafeSet& unsafe,
                             const InitialDistribution& dist, double eps,
                             const TimeWindow& window, const PsafetyOptions& options = {});

}  // namespace ldsafe
