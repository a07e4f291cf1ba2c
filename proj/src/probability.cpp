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

#include "ldsafe/probability.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <vector>

#include "ldsafe/parallel.hpp"
#include "ldsafe/rng.hpp"

namespace ldsafe {

double ldt_hitting_probability(double q, double eps) {
  if (!(q >= 0.0)) throw std::invalid_argument("ldt_hitting_probability: q must be >= 0");
  if (!(eps > 0.0)) throw std::invalid_argument("ldt_hitting_probability: eps must be > 0");
  return std::exp(-q / eps);
}

PosteriorEvaluation posterior_logdensity(const DynamicsModel& model, const UnsafeSet& unsafe,
                                         const InitialDistribution& dist, double eps,
                                         const Vec& y, const TimeWindow& window,
                                         const SolverOptions& options,
                                         const InitialGuess* guess) {
  if (!(eps > 0.0)) throw std::invalid_argument("posterior_logdensity: eps must be > 0");
  require_dimension(y, dist.dimension(), "posterior_logdensity");
  PosteriorEvaluation p;
  p.y = y;
  if (!unsafe.contains(y)) {
    const VariationalSolution sol = solve_ml(model, unsafe, y, window, options, guess);
    if (!sol.converged()) throw SolverError("posterior_logdensity: solve did not converge");
    p.quasipotential = sol.objective;
  }
  p.prior_term = eps * dist.cost(y);
  p.gamma = p.quasipotential + p.prior_term;
  p.log_posterior = -p.gamma / eps;
  return p;
}

namespace {

constexpr std::array<double, 5> kGaussNodes = {-0.9061798459386640, -0.5384693101056831, 0.0,
                                                0.5384693101056831, 0.9061798459386640};
constexpr std::array<double, 5> kGaussWeights = {0.2369268850561891, 0.4786286704993665,
                                                  0.5688888888888889, 0.4786286704993665,
                                                  0.2369268850561891};

struct Probe {
  Vec y;
  double weight = 0.0;  // quadrature or importance weight
  double value = 0.0;   // exp(-Q / eps)
  bool ok = false;
};

// Evaluates exp(-Q/eps) at every probe. Probes are split into fixed blocks; inside a block
// each solve starts from the previous probe's solution.
void evaluate_probes(std::vector<Probe>& probes, const DynamicsModel& model,
                     const UnsafeSet& unsafe, double eps, const TimeWindow& window,
                     const PsafetyOptions& opts, const InitialGuess* seed_guess) {
  const std::size_t block = static_cast<std::size_t>(std::max(1, opts.block));
  const std::size_t blocks = (probes.size() + block - 1) / block;
  parallel_for(blocks, opts.threads, [&](std::size_t b) {
    std::optional<InitialGuess> warm;
    if (seed_guess) warm = *seed_guess;
    for (std::size_t i = b * block; i < std::min(probes.size(), (b + 1) * block); ++i) {
      Probe& p = probes[i];
      if (unsafe.contains(p.y)) {
        p.value = 1.0;
        p.ok = true;
        continue;
      }
      try {
        const VariationalSolution sol =
            solve_ml(model, unsafe, p.y, window, opts.solver, warm ? &*warm : nullptr);
        if (!sol.converged()) continue;
        p.value = std::exp(-sol.objective / eps);
        p.ok = true;
        if (!sol.trivial()) warm = guess_from(sol);
      } catch (const std::runtime_error&) {
        warm.reset();
      }
    }
  });
}

struct Sums {
  double weighted = 0.0;
  double mass = 0.0;
  int failed = 0;
};

Sums accumulate(const std::vector<Probe>& probes) {
  std::vector<double> num, den;
  Sums s;
  for (const Probe& p : probes) {
    if (!p.ok) {
      ++s.failed;
      continue;
    }
    num.push_back(p.weight * p.value);
    den.push_back(p.weight);
  }
  s.weighted = pairwise_sum(num);
  s.mass = pairwise_sum(den);
  return s;
}

std::vector<Probe> tensor_probes(const InitialDistribution& dist, double box, int panels) {
  const int n = dist.dimension();
  const int per_dim = panels * static_cast<int>(kGaussNodes.size());
  const double width = 2.0 * box / panels;
  std::vector<double> nodes, weights;
  for (int p = 0; p < panels; ++p) {
    const double centre = -box + (p + 0.5) * width;
    for (std::size_t g = 0; g < kGaussNodes.size(); ++g) {
      const double u = centre + 0.5 * width * kGaussNodes[g];
      nodes.push_back(u);
      weights.push_back(0.5 * width * kGaussWeights[g] * std::exp(-0.5 * u * u) /
                        std::sqrt(2.0 * std::numbers::pi));
    }
  }
  std::vector<Probe> probes;
  Vec u(n);
  std::vector<int> idx(n, 0);
  const Mat& l = dist.cholesky_factor();
  while (true) {
    double w = 1.0;
    for (int j = 0; j < n; ++j) {
      u[j] = nodes[idx[j]];
      w *= weights[idx[j]];
    }
    probes.push_back({dist.mean() + l * u, w, 0.0, false});
    int j = n - 1;
    while (j >= 0 && ++idx[j] == per_dim) idx[j--] = 0;
    if (j < 0) break;
  }
  return probes;
}

PsafetyEstimate finish(double raw, double error, int probes, int failed, std::string method) {
  PsafetyEstimate e;
  e.raw = raw;
  e.error = error;
  e.probes = probes;
  e.failed_probes = failed;
  e.method = std::move(method);
  const double slack = error + 1e-12;
  if (raw < -slack || raw > 1.0 + slack) {
    throw SolverError("weak_psafety: estimate outside [0, 1] beyond its error bar");
  }
  e.estimate = std::clamp(raw, 0.0, 1.0);
  return e;
}

}  // namespace

PsafetyEstimate weak_psafety(const DynamicsModel& model, const UnsafeSet& unsafe,
                             const InitialDistribution& dist, double eps,
                             const TimeWindow& window, const PsafetyOptions& options) {
  if (!(eps > 0.0)) throw std::invalid_argument("weak_psafety: eps must be > 0");
  if (dist.dimension() != model.dimension()) {
    throw DimensionError("weak_psafety: prior dimension does not match the model");
  }
  window.validate();
  const int n = dist.dimension();
  PsafetyMethod method = options.method;
  if (method == PsafetyMethod::Auto) {
    method = n <= 2 ? PsafetyMethod::Quadrature : PsafetyMethod::ImportanceSampling;
  }

  if (method == PsafetyMethod::Quadrature) {
    if (n > 3) throw std::invalid_argument("weak_psafety: quadrature supports n <= 3");
    int panels = options.panels > 0 ? options.panels : (n == 1 ? 64 : 16);
    panels = std::max(2, panels + panels % 2);
    std::vector<Probe> fine = tensor_probes(dist, options.box, panels);
    std::vector<Probe> coarse = tensor_probes(dist, options.box, panels / 2);
    evaluate_probes(fine, model, unsafe, eps, window, options, nullptr);
    evaluate_probes(coarse, model, unsafe, eps, window, options, nullptr);
    const Sums f = accumulate(fine);
    const Sums c = accumulate(coarse);
    if (!(f.mass > 0.0) || !(c.mass > 0.0)) throw SolverError("weak_psafety: every probe failed");
    // Normalized by the quadrature of the prior itself, which removes the box truncation.
    const double fine_value = f.weighted / f.mass;
    const double coarse_value = c.weighted / c.mass;
    return finish(fine_value, std::abs(fine_value - coarse_value),
                  static_cast<int>(fine.size() + coarse.size()), f.failed + c.failed, "quadrature");
  }

  if (options.samples < 2) throw std::invalid_argument("weak_psafety: need at least 2 samples");
  const VariationalSolution map = solve_map(model, unsafe, dist, eps, window, options.solver);
  const Vec centre = map.converged() ? map.start() : dist.mean();
  const InitialGuess seed = guess_from(map);
  std::vector<Probe> probes(static_cast<std::size_t>(options.samples));
  const Mat& l = dist.cholesky_factor();
  for (std::size_t i = 0; i < probes.size(); ++i) {
    CounterRng rng(options.seed, i);
    Vec xi(n);
    for (int j = 0; j < n; ++j) xi[j] = rng.normal();
    probes[i].y = centre + l * xi;
    probes[i].weight = std::exp(-dist.cost(probes[i].y) + 0.5 * xi.squaredNorm());
  }
  evaluate_probes(probes, model, unsafe, eps, window, options, map.converged() ? &seed : nullptr);
  const Sums s = accumulate(probes);
  if (!(s.mass > 0.0)) throw SolverError("weak_psafety: every probe failed");
  const double est = s.weighted / s.mass;
  std::vector<double> sq;
  for (const Probe& p : probes) {
    if (p.ok) sq.push_back(p.weight * p.weight * (p.value - est) * (p.value - est));
  }
  const double se = std::sqrt(pairwise_sum(sq)) / s.mass;
  return finish(est, se, static_cast<int>(probes.size()), s.failed, "importance_sampling");
}

}  // namespace ldsafe
