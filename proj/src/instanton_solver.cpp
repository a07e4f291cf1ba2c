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

#include "ldsafe/instanton_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "ldsafe/lbfgs.hpp"
#include "ldsafe/parallel.hpp"
#include "ldsafe/rng.hpp"

namespace ldsafe {

void TimeWindow::validate() const {
  if (!(lower >= 0.0) || !(upper > 0.0) || upper < lower || !std::isfinite(upper)) {
    throw std::invalid_argument("TimeWindow: need 0 <= lower <= upper, upper > 0");
  }
}

const char* to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::Converged: return "converged";
    case SolveStatus::NotConverged: return "not_converged";
    case SolveStatus::TrivialDeterministicHit: return "trivial_deterministic_hit";
    case SolveStatus::StartInsideUnsafeSet: return "start_inside_unsafe_set";
  }
  return "unknown";
}

InitialGuess guess_from(const VariationalSolution& solution) {
  InitialGuess g;
  g.controls.node = solution.path.deviations;
  g.controls.mid = solution.midpoint_deviations;
  g.start = solution.path.states.front();
  g.time = solution.final_time;
  g.multiplier = solution.alpha;
  return g;
}

namespace {

struct AlOutcome {
  Vec x;
  double alpha = 0.0;  // multiplier on the unscaled level function
  bool converged = false;
  int iterations = 0;
  double stationarity = 0.0;
};

// The penalty uses f / |grad f| in decision variables, refreshed every outer iteration,
// so rho = 10 is well matched to the unit-scaled objective whatever the units of f.
// Feasibility is judged on f / (1 + |f(start)|).
AlOutcome augmented_lagrangian(const Transcription& tr, Vec x, double alpha,
                               const SolverOptions& opt) {
  const double fs = tr.setup().constraint_scale;
  double rho = 10.0;
  AlOutcome out;
  double previous_violation = std::numeric_limits<double>::infinity();
  LbfgsOptions lb;
  lb.memory = opt.lbfgs_memory;
  lb.max_iterations = opt.max_iterations;

  for (int outer = 0; outer < opt.max_outer_iterations; ++outer) {
    const TranscriptionEval e0 = tr.evaluate(x, true);
    const double grad_norm = e0.grad_level.norm();
    const double unit = grad_norm > 1e-12 * fs ? grad_norm : fs;
    const double mu = alpha * unit;
    const double rho_k = rho;
    auto objective = [&](const Vec& v, Vec& grad) {
      const TranscriptionEval e = tr.evaluate(v, true);
      const double g = e.level / unit;
      const double shifted = std::max(0.0, mu + rho_k * g);
      grad = e.grad_action + e.grad_prior + (shifted / unit) * e.grad_level;
      return e.action + e.prior_cost + (shifted * shifted - mu * mu) / (2.0 * rho_k);
    };
    const double inner_tol = previous_violation * unit > 1e3 * opt.constraint_tol * fs
                                 ? std::max(opt.gradient_tol, 1e-6)
                                 : opt.gradient_tol;
    auto stop = [&](const Vec& v, double f, const Vec& grad) {
      return tr.stationarity(v, grad, f) <= inner_tol;
    };
    const LbfgsResult inner = minimize_lbfgs(objective, x, stop, lb);
    out.iterations += inner.iterations;
    if (inner.status == LbfgsStatus::NonFinite) break;
    x = inner.x;

    const TranscriptionEval e = tr.evaluate(x, true);
    const double g = e.level / fs;
    alpha = std::max(0.0, mu + rho * e.level / unit) / unit;
    const Vec lagrangian_grad = e.grad_action + e.grad_prior + alpha * e.grad_level;
    const double cost = e.action + e.prior_cost;
    out.stationarity = tr.stationarity(x, lagrangian_grad, cost);
    out.alpha = alpha;
    const bool feasible = g <= opt.constraint_tol;
    const bool complementary =
        std::abs(alpha * fs * g) <= opt.complementarity_tol * (1.0 + cost);
    if (feasible && complementary && out.stationarity <= opt.gradient_tol) {
      out.converged = true;
      break;
    }
    const double violation = std::abs(std::max(e.level / unit, -mu / rho));
    if (!(feasible && complementary) && violation > 0.25 * previous_violation) {
      rho = std::min(rho * 10.0, 1e12);
    }
    previous_violation = violation;
  }
  out.x = std::move(x);
  return out;
}

Vec project_to_boundary(const UnsafeSet& unsafe, const Vec& start, bool& ok) {
  Vec z = start;
  ok = false;
  for (int i = 0; i < 60; ++i) {
    const double f = unsafe.level(z);
    const Vec g = unsafe.gradient(z);
    const double gg = g.squaredNorm();
    if (!(gg > 0.0) || !std::isfinite(gg)) return start;
    if (std::abs(f) <= 1e-13 * (1.0 + std::abs(unsafe.level(start)))) {
      ok = true;
      return z;
    }
    z -= (f / gg) * g;
  }
  ok = std::abs(unsafe.level(z)) <= 1e-8 * (1.0 + std::abs(unsafe.level(start)));
  return ok ? z : start;
}

InitialGuess default_guess(const SolveRequest& req, const Vec& start, double time) {
  const DynamicsModel& model = *req.model;
  const int n_int = req.options.nodes;
  const int d = model.noise_dimension();
  InitialGuess g;
  g.start = start;
  g.time = time;
  g.controls.node.assign(n_int + 1, Vec::Zero(d));
  g.controls.mid.assign(n_int, Vec::Zero(d));

  InitialGuessKind kind = req.options.initial_guess;
  if (kind == InitialGuessKind::Auto) {
    // A straight line in phase space is not kinematically consistent for mechanical models.
    kind = model.is_mechanical() ? InitialGuessKind::Deterministic : InitialGuessKind::StraightLine;
  }
  if (kind == InitialGuessKind::Deterministic) return g;

  bool ok = false;
  const Vec target = project_to_boundary(*req.unsafe, start, ok);
  if (!ok) return g;
  const Vec rate = (target - start) / time;
  auto deviation_at = [&](double tau) {
    const Vec phi = start + tau * (target - start);
    const Vec residual = rate - model.drift(phi);
    return model.solve_sigma(model.is_mechanical() ? Vec(residual.tail(d)) : residual);
  };
  for (int k = 0; k <= n_int; ++k) g.controls.node[k] = deviation_at(static_cast<double>(k) / n_int);
  for (int k = 0; k < n_int; ++k) g.controls.mid[k] = deviation_at((k + 0.5) / n_int);
  return g;
}

Vec request_start(const SolveRequest& req) {
  return req.kind == ProblemKind::MaximumLikelihood ? req.start : req.prior->mean();
}

VariationalSolution trivial_solution(const SolveRequest& req, const Vec& start, double time,
                                     SolveStatus status) {
  const DynamicsModel& model = *req.model;
  VariationalSolution sol;
  sol.kind = req.kind;
  sol.status = status;
  sol.eps = req.eps;
  sol.window = req.window;
  sol.final_time = time;
  if (time > 0.0) {
    sol.path = flow_deterministic(model, start, time, req.options.nodes);
  } else {
    sol.path.grid = TimeGrid(std::vector<double>{0.0});
    sol.path.states = {start};
    sol.path.deviations = {Vec::Zero(model.noise_dimension())};
  }
  const std::size_t nodes = sol.path.grid.size();
  sol.midpoint_deviations.assign(nodes - 1, Vec::Zero(model.noise_dimension()));
  sol.adjoint.assign(nodes, Vec::Zero(model.dimension()));
  sol.terminal_level = req.unsafe->level(sol.path.states.back());
  sol.time_at_lower_bound = std::abs(time - req.window.lower) <= 1e-12 * (1.0 + time);
  sol.time_at_upper_bound = std::abs(time - req.window.upper) <= 1e-12 * (1.0 + time);
  return sol;
}

// First node time in the window at which the unperturbed flow lies in D.
std::optional<double> deterministic_hit(const SolveRequest& req, const Vec& start) {
  const DynamicsModel& model = *req.model;
  const UnsafeSet& unsafe = *req.unsafe;
  const int n_int = std::max(2, req.options.nodes);
  Vec x = start;
  double t = 0.0;
  if (req.window.lower > 0.0) {
    const Path lead = flow_deterministic(model, start, req.window.lower, n_int);
    x = lead.states.back();
    t = req.window.lower;
  }
  if (unsafe.level(x) <= 0.0) return t;
  if (req.window.is_fixed()) return std::nullopt;
  const double span = req.window.upper - t;
  const Path tail = flow_deterministic(model, x, span, n_int);
  for (std::size_t k = 1; k < tail.grid.size(); ++k) {
    if (unsafe.level(tail.states[k]) <= 0.0) return t + tail.grid[k];
  }
  return std::nullopt;
}

struct Attempt {
  VariationalSolution solution;
  double multiplier = 0.0;
};

Attempt run_transcription(const SolveRequest& req, const InitialGuess& guess, double t_min,
                          double t_max, bool free_time, double constraint_scale) {
  const DynamicsModel& model = *req.model;
  TranscriptionSetup setup;
  setup.intervals = req.options.nodes;
  if (req.kind == ProblemKind::MaximumLikelihood) {
    setup.start = req.start;
  } else {
    setup.prior = req.prior;
    setup.eps = req.eps;
  }
  setup.t_min = t_min;
  setup.t_max = t_max;
  setup.free_time = free_time;
  setup.reference_time = guess.time;
  setup.constraint_scale = constraint_scale;
  const Transcription tr(model, *req.unsafe, setup);

  const Vec x0 = tr.encode(guess.controls, guess.start, guess.time);
  const AlOutcome al = augmented_lagrangian(tr, x0, std::max(0.0, guess.multiplier), req.options);

  Attempt at;
  at.multiplier = al.alpha;
  VariationalSolution& sol = at.solution;
  sol.kind = req.kind;
  sol.status = al.converged ? SolveStatus::Converged : SolveStatus::NotConverged;
  sol.eps = req.eps;
  sol.window = req.window;
  sol.iterations = al.iterations;
  sol.stationarity = al.stationarity;
  sol.final_time = tr.final_time(al.x);
  sol.alpha = al.alpha;
  const ControlSamples controls = tr.controls(al.x);
  sol.path.grid = TimeGrid::uniform(sol.final_time, setup.intervals);
  sol.path.states = tr.states(al.x);
  sol.path.deviations = controls.node;
  sol.midpoint_deviations = controls.mid;
  sol.adjoint = tr.costates(al.x, sol.alpha).node;
  const TranscriptionEval e = tr.evaluate(al.x, false);
  sol.action = e.action;
  sol.terminal_level = e.level;
  if (req.kind == ProblemKind::MaximumAPosteriori) {
    sol.initial_cost = req.prior->cost(sol.path.states.front());
  }
  sol.objective = sol.action + req.eps * sol.initial_cost;
  if (req.kind == ProblemKind::MaximumLikelihood) sol.objective = sol.action;
  const double width = req.window.upper - req.window.lower;
  if (req.window.is_fixed()) {
    sol.time_at_lower_bound = sol.time_at_upper_bound = true;
  } else {
    sol.time_at_lower_bound = sol.final_time - req.window.lower <= 1e-6 * width;
    sol.time_at_upper_bound = req.window.upper - sol.final_time <= 1e-6 * width;
  }
  return at;
}

bool better(const VariationalSolution& a, const VariationalSolution& b) {
  if (a.converged() != b.converged()) return a.converged();
  return a.objective < b.objective;
}

void validate_request(const SolveRequest& req) {
  if (!req.model || !req.unsafe) throw std::invalid_argument("solve: model and unsafe set required");
  req.window.validate();
  if (req.options.nodes < 2) throw std::invalid_argument("solve: need at least 2 nodes");
  if (req.kind == ProblemKind::MaximumLikelihood) {
    require_dimension(req.start, req.model->dimension(), "solve_ml start");
  } else {
    if (!req.prior) throw std::invalid_argument("solve_map: prior required");
    if (req.prior->dimension() != req.model->dimension()) {
      throw DimensionError("solve_map: prior dimension does not match the model");
    }
    if (!(req.eps > 0.0)) throw std::invalid_argument("solve_map: eps must be positive");
  }
}

}  // namespace

VariationalSolution solve(const SolveRequest& req, const InitialGuess* guess) {
  validate_request(req);
  const Vec start = request_start(req);
  const UnsafeSet& unsafe = *req.unsafe;
  const double f_start = unsafe.level(start);
  if (f_start < 0.0) return trivial_solution(req, start, 0.0, SolveStatus::StartInsideUnsafeSet);
  if (const auto hit = deterministic_hit(req, start)) {
    return trivial_solution(req, start, *hit, SolveStatus::TrivialDeterministicHit);
  }
  const double scale = 1.0 + std::abs(f_start);
  const TimeWindow& w = req.window;

  if (w.is_fixed()) {
    const InitialGuess g = guess ? *guess : default_guess(req, start, w.lower);
    InitialGuess fixed = g;
    fixed.time = w.lower;
    return run_transcription(req, fixed, w.lower, w.lower, false, scale).solution;
  }

  const double width = w.upper - w.lower;
  VariationalSolution best;
  bool have_best = false;
  if (guess) {
    InitialGuess g = *guess;
    g.time = std::clamp(g.time, std::max(w.lower, 1e-3 * width), w.upper);
    best = run_transcription(req, g, g.time, g.time, false, scale).solution;
    have_best = true;
  } else {
    const int points = std::max(2, req.options.scan_points);
    InitialGuess chain;
    bool chained = false;
    for (int i = 0; i < points; ++i) {
      double t = w.lower + width * i / (points - 1);
      if (t <= 0.0) t = 0.5 * width / (points - 1);
      InitialGuess g = chained ? chain : default_guess(req, start, t);
      g.time = t;
      Attempt at = run_transcription(req, g, t, t, false, scale);
      chain = guess_from(at.solution);
      chained = true;
      if (!have_best || better(at.solution, best)) {
        best = std::move(at.solution);
        have_best = true;
      }
    }
  }

  // Free-time refinement from the best fixed-time point, nudged off the bounds so the
  // time angle is not at a stationary point of the parametrization.
  InitialGuess refine = guess_from(best);
  refine.time = std::clamp(best.final_time, w.lower + 1e-3 * width, w.upper - 1e-3 * width);
  refine.time = std::max(refine.time, 1e-3 * width);
  Attempt refined = run_transcription(req, refine, std::max(w.lower, 1e-9 * width), w.upper, true, scale);
  refined.solution.iterations += best.iterations;
  if (refined.solution.converged() &&
      (!best.converged() || refined.solution.objective <= best.objective + 1e-9 * (1.0 + std::abs(best.objective)))) {
    return refined.solution;
  }
  best.time_at_lower_bound = best.final_time - w.lower <= 1e-6 * width;
  best.time_at_upper_bound = w.upper - best.final_time <= 1e-6 * width;
  return best;
}

VariationalSolution solve_ml(const DynamicsModel& model, const UnsafeSet& unsafe, const Vec& y,
                             const TimeWindow& window, const SolverOptions& options,
                             const InitialGuess* guess) {
  SolveRequest req;
  req.kind = ProblemKind::MaximumLikelihood;
  req.model = &model;
  req.unsafe = &unsafe;
  req.start = y;
  req.window = window;
  req.options = options;
  return solve(req, guess);
}

VariationalSolution solve_map(const DynamicsModel& model, const UnsafeSet& unsafe,
                              const InitialDistribution& dist, double eps,
                              const TimeWindow& window, const SolverOptions& options,
                              const InitialGuess* guess) {
  SolveRequest req;
  req.kind = ProblemKind::MaximumAPosteriori;
  req.model = &model;
  req.unsafe = &unsafe;
  req.prior = &dist;
  req.eps = eps;
  req.window = window;
  req.options = options;
  return solve(req, guess);
}

double quasipotential(const DynamicsModel& model, const UnsafeSet& unsafe, const Vec& y,
                      const TimeWindow& window, const SolverOptions& options) {
  const VariationalSolution sol = solve_ml(model, unsafe, y, window, options);
  if (!sol.converged()) throw SolverError("quasipotential: solve did not converge");
  return sol.objective;
}

double path_distance(const Path& a, const Path& b) {
  double worst = 0.0;
  for (std::size_t k = 0; k < a.grid.size(); ++k) {
    worst = std::max(worst, (a.states[k] - b.state_at(a.grid[k])).lpNorm<Eigen::Infinity>());
  }
  for (std::size_t k = 0; k < b.grid.size(); ++k) {
    worst = std::max(worst, (b.states[k] - a.state_at(b.grid[k])).lpNorm<Eigen::Infinity>());
  }
  return worst;
}

std::vector<VariationalSolution> multi_start(const SolveRequest& req,
                                             const MultiStartOptions& options) {
  if (options.starts < 1) throw std::invalid_argument("multi_start: need at least one start");
  validate_request(req);
  const Vec start = request_start(req);
  const int n_int = req.options.nodes;
  std::vector<VariationalSolution> results(static_cast<std::size_t>(options.starts));

  parallel_for(results.size(), options.threads, [&](std::size_t i) {
    if (i == 0) {
      results[i] = solve(req);
      return;
    }
    // Antithetic pairs: starts 2k-1 and 2k share a draw with opposite perturbation sign.
    const std::size_t pair = (i + 1) / 2;
    const double sign = (i % 2 == 1) ? 1.0 : -1.0;
    CounterRng rng(options.seed, pair);
    const TimeWindow& w = req.window;
    double t = w.upper;
    if (!w.is_fixed()) {
      const double centre = 0.5 * (w.lower + w.upper);
      const double jitter = options.time_jitter * (w.upper - w.lower) * (2.0 * rng.uniform() - 1.0);
      t = std::clamp(centre + jitter + (rng.uniform() - 0.5) * (w.upper - w.lower), w.lower, w.upper);
      t = std::max(t, 1e-3 * (w.upper - w.lower));
    }
    InitialGuess g = default_guess(req, start, t);
    double base = 0.0;
    for (const Vec& v : g.controls.node) base = std::max(base, v.lpNorm<Eigen::Infinity>());
    const double amp = sign * options.control_jitter * (1.0 + base);
    const int d = req.model->noise_dimension();
    for (int c = 0; c < d; ++c) {
      const double a0 = amp * rng.normal();
      const double a1 = amp * rng.normal();
      const double a2 = amp * rng.normal();
      auto bump = [&](double tau) {
        return a0 + a1 * (2.0 * tau - 1.0) + a2 * std::sin(std::numbers::pi * tau);
      };
      for (int k = 0; k <= n_int; ++k) g.controls.node[k][c] += bump(static_cast<double>(k) / n_int);
      for (int k = 0; k < n_int; ++k) g.controls.mid[k][c] += bump((k + 0.5) / n_int);
    }
    if (req.kind == ProblemKind::MaximumAPosteriori) {
      Vec xi(req.model->dimension());
      for (Eigen::Index j = 0; j < xi.size(); ++j) xi[j] = rng.normal();
      g.start = req.prior->mean() + 0.5 * sign * req.prior->cholesky_factor() * xi;
    }
    results[i] = solve(req, &g);
  });

  std::vector<VariationalSolution> converged;
  for (auto& r : results) {
    if (r.converged()) converged.push_back(std::move(r));
  }
  if (converged.empty()) throw SolverError("multi_start: all starts failed");
  std::stable_sort(converged.begin(), converged.end(), [](const auto& a, const auto& b) {
    if (a.objective != b.objective) return a.objective < b.objective;
    return a.final_time < b.final_time;
  });
  std::vector<VariationalSolution> distinct;
  for (auto& cand : converged) {
    double scale = 0.0;
    for (const Vec& s : cand.path.states) scale = std::max(scale, s.lpNorm<Eigen::Infinity>());
    const bool duplicate = std::any_of(distinct.begin(), distinct.end(), [&](const auto& kept) {
      return path_distance(kept.path, cand.path) < options.dedup_tol * (1.0 + scale);
    });
    if (!duplicate) distinct.push_back(std::move(cand));
  }
  return distinct;
}

}  // namespace ldsafe
