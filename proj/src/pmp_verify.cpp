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

#include "ldsafe/pmp_verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace ldsafe {

bool ResidualReport::passed(const PmpTolerances& tol) const {
  if (free_start && !(initial_transversality < tol.transversality)) return false;
  if (!(final_transversality < tol.transversality)) return false;
  if (!(complementarity <= tol.complementarity)) return false;
  if (!(deviation_consistency < tol.deviation)) return false;
  if (!(adjoint_reintegration < tol.adjoint)) return false;
  if (interior_time && !(hamiltonian_max < tol.hamiltonian)) return false;
  return true;
}

double hamiltonian(const DynamicsModel& model, const Vec& x, const Vec& w, const Vec& lambda) {
  require_dimension(x, model.dimension(), "hamiltonian state");
  require_dimension(w, model.noise_dimension(), "hamiltonian deviation");
  require_dimension(lambda, model.dimension(), "hamiltonian adjoint");
  return -0.5 * w.squaredNorm() + lambda.dot(model.drift(x) + model.inject(w));
}

namespace {

double inf_norm(const Vec& v) { return v.size() ? v.lpNorm<Eigen::Infinity>() : 0.0; }

// Hamiltonian at a node; `size` receives the magnitude of its terms.
double hamiltonian_terms(const DynamicsModel& model, const Vec& x, const Vec& w,
                         const Vec& lambda, double& size) {
  const double kinetic = 0.5 * w.squaredNorm();
  const double drift_term = lambda.dot(model.drift(x));
  const double noise_term = lambda.dot(model.inject(w));
  size = kinetic + std::abs(drift_term) + std::abs(noise_term);
  return -kinetic + drift_term + noise_term;
}

}  // namespace

AdjointPath integrate_adjoint(const DynamicsModel& model, const VariationalSolution& solution,
                              const Vec& lambda0) {
  const Path& path = solution.path;
  path.validate();
  require_dimension(lambda0, model.dimension(), "integrate_adjoint lambda0");
  if (!path.has_deviations()) throw std::invalid_argument("integrate_adjoint: path lacks deviations");

  AdjointPath out;
  out.grid = path.grid;
  out.lambda.reserve(path.grid.size());
  out.lambda.push_back(lambda0);
  auto rate = [&](const Vec& x, const Vec& lam) { return Vec(-model.drift_vjp(x, lam)); };
  auto velocity = [&](const Vec& x, const Vec& w) { return Vec(model.drift(x) + model.inject(w)); };

  for (std::size_t k = 0; k + 1 < path.grid.size(); ++k) {
    const double h = path.grid[k + 1] - path.grid[k];
    const Vec& x0 = path.states[k];
    const Vec& x1 = path.states[k + 1];
    const Vec& w0 = path.deviations[k];
    const Vec& w1 = path.deviations[k + 1];
    const Vec d0 = velocity(x0, w0);
    const Vec d1 = velocity(x1, w1);
    // Cubic Hermite midpoint.
    const Vec xm = 0.5 * (x0 + x1) + 0.125 * h * (d0 - d1);
    const Vec& lam = out.lambda.back();
    const Vec k1 = rate(x0, lam);
    const Vec k2 = rate(xm, lam + 0.5 * h * k1);
    const Vec k3 = rate(xm, lam + 0.5 * h * k2);
    const Vec k4 = rate(x1, lam + h * k3);
    Vec next = lam + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!next.allFinite()) throw DivergenceError("integrate_adjoint: non-finite adjoint");
    out.lambda.push_back(std::move(next));
  }
  return out;
}

std::vector<Vec> optimal_deviation(const DynamicsModel& model, const AdjointPath& adjoint) {
  std::vector<Vec> w;
  w.reserve(adjoint.lambda.size());
  for (const Vec& lam : adjoint.lambda) w.push_back(model.project_adjoint(lam));
  return w;
}

ResidualReport transversality_residuals(const DynamicsModel& model,
                                        const VariationalSolution& solution,
                                        const InitialDistribution* dist,
                                        const UnsafeSet& unsafe, double eps) {
  const Path& path = solution.path;
  path.validate();
  if (solution.adjoint.size() != path.grid.size() || !path.has_deviations()) {
    throw std::invalid_argument("transversality_residuals: solution lacks adjoint or deviations");
  }
  if (!(solution.alpha >= 0.0) || !std::isfinite(solution.alpha)) {
    throw std::invalid_argument("transversality_residuals: invalid multiplier");
  }
  ResidualReport r;
  r.free_start = solution.kind == ProblemKind::MaximumAPosteriori;
  r.interior_time = solution.time_interior();
  const std::vector<Vec>& lam = solution.adjoint;

  if (r.free_start) {
    if (!dist) throw std::invalid_argument("transversality_residuals: MAP check needs the prior");
    if (!(eps > 0.0)) throw std::invalid_argument("transversality_residuals: eps must be positive");
    const Vec target = eps * dist->cost_gradient(path.states.front());
    r.initial_transversality =
        inf_norm(lam.front() - target) / (1.0 + inf_norm(lam.front()) + inf_norm(target));
  }

  const Vec& x_end = path.states.back();
  const Vec pull = solution.alpha * unsafe.gradient(x_end);
  r.final_transversality = inf_norm(lam.back() + pull) / (1.0 + inf_norm(lam.back()) + inf_norm(pull));
  r.complementarity = std::abs(solution.alpha * unsafe.level(x_end)) / (1.0 + std::abs(solution.objective));

  double hmin = std::numeric_limits<double>::infinity();
  double hmax = -std::numeric_limits<double>::infinity();
  double hsize = 0.0;
  for (std::size_t k = 0; k < path.grid.size(); ++k) {
    const Vec& w = path.deviations[k];
    const Vec ideal = model.project_adjoint(lam[k]);
    r.deviation_consistency =
        std::max(r.deviation_consistency, inf_norm(w - ideal) / (1.0 + inf_norm(w)));
    double size = 0.0;
    const double h = hamiltonian_terms(model, path.states[k], w, lam[k], size);
    const double scaled = h / (1.0 + size);
    r.hamiltonian_max = std::max(r.hamiltonian_max, std::abs(scaled));
    hmin = std::min(hmin, h);
    hmax = std::max(hmax, h);
    hsize = std::max(hsize, size);
    if (k + 1 == path.grid.size()) r.hamiltonian_final = scaled;
  }
  r.hamiltonian_spread = (hmax - hmin) / (1.0 + hsize);

  const AdjointPath replay = integrate_adjoint(model, solution, lam.front());
  double scale = 0.0;
  double worst = 0.0;
  for (std::size_t k = 0; k < lam.size(); ++k) {
    scale = std::max(scale, inf_norm(lam[k]));
    worst = std::max(worst, inf_norm(lam[k] - replay.lambda[k]));
  }
  r.adjoint_reintegration = scale > 0.0 ? worst / scale : worst;
  return r;
}

}  // namespace ldsafe
