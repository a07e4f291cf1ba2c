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

#include <vector>

#include "ldsafe/action.hpp"
#include "ldsafe/dynamics.hpp"
#include "ldsafe/instanton_solver.hpp"
#include "ldsafe/unsafe_set.hpp"

namespace ldsafe {

struct AdjointPath {
  TimeGrid grid;
  std::vector<Vec> lambda;
};

struct PmpTolerances {
  double transversality = 1e-6;
  double complementarity = 1e-8;
  double deviation = 1e-6;
  double adjoint = 1e-3;
  double hamiltonian = 1e-5;
};

/// Necessary-condition residuals of a solution. Each entry is divided by one plus the
/// magnitude of the terms it compares, so all of them are dimensionless.
struct ResidualReport {
  bool free_start = false;     // initial transversality applies (MAP solves)
  bool interior_time = false;  // the Hamiltonian must vanish
  double initial_transversality = 0.0;  // |lambda(0) - eps grad S0(phi(0))|
  double final_transversality = 0.0;    // |lambda(T) + alpha grad f(phi(T))|
  double complementarity = 0.0;         // |alpha f(phi(T))| / (1 + |objective|)
  double hamiltonian_final = 0.0;       // H(T)
  double hamiltonian_max = 0.0;         // max_k |H_k|
  double hamiltonian_spread = 0.0;      // (max_k H_k - min_k H_k) over the largest term
  double deviation_consistency = 0.0;   // max_k |w_k - sigma^T lambda_k|
  double adjoint_reintegration = 0.0;   // max_k |lambda_k - lambda_int(t_k)| / max_k |lambda_k|

  bool passed(const PmpTolerances& tol = {}) const;
};

/// H = -1/2 |w|^2 + lambda^T (b(x) + sigma w), with sigma w in the velocity block for
/// mechanical models.
double hamiltonian(const DynamicsModel& model, const Vec& x, const Vec& w, const Vec& lambda);

/// RK4 integration of lambda' = -(grad b(phi))^T lambda along the solution path; the state
/// between nodes is the cubic Hermite interpolant of the path.
AdjointPath integrate_adjoint(const DynamicsModel& model, const VariationalSolution& solution,
                              const Vec& lambda0);

/// sigma^T lambda (velocity block for mechanical models) at every node.
std::vector<Vec> optimal_deviation(const DynamicsModel& model, const AdjointPath& adjoint);

/// `dist` is required for MAP solutions and ignored for ML solutions.
ResidualReport transversality_residuals(const DynamicsModel& model,
                                        const VariationalSolution& solution,
                                        const InitialDistribution* dist,
                                        const UnsafeSet& unsafe, double eps);

}  // namespace ldsafe
