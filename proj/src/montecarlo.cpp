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

#include "ldsafe/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ldsafe/parallel.hpp"
#include "ldsafe/rng.hpp"

namespace ldsafe {
namespace {

void check_common(double eps, double t_end, double dt) {
  if (!(eps >= 0.0)) throw std::invalid_argument("montecarlo: eps must be >= 0");
  if (!(t_end >= 0.0) || !std::isfinite(t_end)) throw std::invalid_argument("montecarlo: bad horizon");
  if (!(dt > 0.0)) throw std::invalid_argument("montecarlo: dt must be > 0");
}

int step_count(double t_end, double dt) {
  if (t_end == 0.0) return 0;
  return std::max(1, static_cast<int>(std::ceil(t_end / dt - 1e-9)));
}

// Piecewise-linear deviation table from node and midpoint samples.
class DeviationTable {
 public:
  explicit DeviationTable(const VariationalSolution& s) {
    const Path& p = s.path;
    const bool mids = s.midpoint_deviations.size() + 1 == p.grid.size();
    for (std::size_t k = 0; k < p.grid.size(); ++k) {
      times_.push_back(p.grid[k]);
      values_.push_back(p.deviations[k]);
      if (mids && k + 1 < p.grid.size()) {
        times_.push_back(0.5 * (p.grid[k] + p.grid[k + 1]));
        values_.push_back(s.midpoint_deviations[k]);
      }
    }
  }

  // `cursor` caches the last interval; queries with nondecreasing t walk forward from it.
  void at(double t, Vec& out, std::size_t& cursor) const {
    if (times_.size() < 2 || t > times_.back()) {
      out.setZero();
      return;
    }
    if (cursor + 1 >= times_.size() || times_[cursor] > t) cursor = 0;
    while (cursor + 2 < times_.size() && times_[cursor + 1] <= t) ++cursor;
    const std::size_t lo = cursor;
    const std::size_t hi = lo + 1;
    const double a = (t - times_[lo]) / (times_[hi] - times_[lo]);
    out = (1.0 - a) * values_[lo] + a * values_[hi];
  }

 private:
  std::vector<double> times_;
  std::vector<Vec> values_;
};

// One Euler-Maruyama path with optional tilt; the tilt weight is the log likelihood ratio.
struct PathOutcome {
  bool hit = false;
  double time = 0.0;
  double log_weight = 0.0;
};

struct Kernel {
  const DynamicsModel& model;
  double eps;
  double t_end;
  int steps;
  double h;
  const DeviationTable* tilt = nullptr;

  Kernel(const DynamicsModel& m, double e, double t, double dt)
      : model(m), eps(e), t_end(t), steps(step_count(t, dt)), h(steps ? t / steps : 0.0) {}

  // Runs one path from x (modified in place). `visit(k, x)` is called after each step and
  // may stop the path by returning false.
  template <class Visit>
  PathOutcome run(Vec& x, CounterRng& rng, Visit&& visit) const {
    const int d = model.noise_dimension();
    const bool mech = model.is_mechanical();
    const double root_h = std::sqrt(h);
    const double root_eps = std::sqrt(eps);
    Vec xi(d), noise(d), kick(d), acc(d), w = Vec::Zero(d);
    std::size_t cursor = 0;
    PathOutcome out;
    if (d == 1 && !mech) {
      const double s = model.sigma()(0, 0);
      const double scale = s * root_eps * root_h;
      for (int k = 0; k < steps; ++k) {
        const double z = rng.normal();
        double shift = 0.0;
        if (tilt) {
          tilt->at(k * h, w, cursor);
          if (eps > 0.0) out.log_weight -= w[0] * z * root_h / root_eps + 0.5 * w[0] * w[0] * h / eps;
          shift = s * h * w[0];
        }
        model.field_into(x, acc);
        x[0] += h * acc[0] + scale * z + shift;
        if (!std::isfinite(x[0])) throw DivergenceError("simulate_em: non-finite state");
        if (!visit(k + 1, x)) {
          out.time = (k + 1) * h;
          return out;
        }
      }
      out.time = t_end;
      return out;
    }
    for (int k = 0; k < steps; ++k) {
      for (int j = 0; j < d; ++j) xi[j] = rng.normal();
      if (tilt) {
        tilt->at(k * h, w, cursor);
        if (eps > 0.0) out.log_weight -= w.dot(xi) * root_h / root_eps + 0.5 * w.squaredNorm() * h / eps;
        noise = root_eps * root_h * xi + h * w;
      } else {
        noise = root_eps * root_h * xi;
      }
      kick.noalias() = model.sigma() * noise;
      model.field_into(x, acc);
      if (mech) {
        x.head(d) += h * x.tail(d);
        x.tail(d) += h * acc + kick;
      } else {
        x += h * acc + kick;
      }
      if (!x.allFinite()) throw DivergenceError("simulate_em: non-finite state");
      if (!visit(k + 1, x)) {
        out.time = (k + 1) * h;
        return out;
      }
    }
    out.time = t_end;
    return out;
  }
};

PathOutcome hitting_path(const Kernel& kernel, Vec x, const UnsafeSet& unsafe, CounterRng& rng) {
  if (unsafe.contains(x)) return {true, 0.0, 0.0};
  bool hit = false;
  PathOutcome out = kernel.run(x, rng, [&](int, const Vec& state) {
    hit = unsafe.contains(state);
    return !hit;
  });
  out.hit = hit;
  return out;
}

EstimateWithCI binomial(long hits, long n) {
  EstimateWithCI e;
  e.samples = n;
  e.estimate = static_cast<double>(hits) / static_cast<double>(n);
  e.standard_error = std::sqrt(e.estimate * (1.0 - e.estimate) / static_cast<double>(n));
  e.effective_sample_size = static_cast<double>(n);
  return e;
}

template <class Start>
EstimateWithCI crude_hitting(const Kernel& kernel, const UnsafeSet& unsafe, long n,
                             std::uint64_t seed, int threads, Start&& start) {
  if (n < 1) throw std::invalid_argument("estimate_hitting_probability: n must be >= 1");
  std::vector<unsigned char> hit(static_cast<std::size_t>(n), 0);
  parallel_for(hit.size(), threads, [&](std::size_t i) {
    CounterRng rng(seed, i);
    hit[i] = hitting_path(kernel, start(rng), unsafe, rng).hit ? 1 : 0;
  });
  long hits = 0;
  for (unsigned char v : hit) hits += v;
  return binomial(hits, n);
}

}  // namespace

SimulationResult simulate_em(const DynamicsModel& model, const Vec& y0, double eps, double t_end,
                             double dt, std::uint64_t seed, const UnsafeSet* unsafe,
                             bool store_trajectory, std::uint64_t path) {
  check_common(eps, t_end, dt);
  require_dimension(y0, model.dimension(), "simulate_em");
  const Kernel kernel(model, eps, t_end, dt);
  CounterRng rng(seed, path);
  SimulationResult r;
  if (store_trajectory) r.trajectory.push_back(y0);
  if (unsafe && unsafe->contains(y0)) {
    r.hit = true;
    r.hitting_time = 0.0;
  }
  Vec x = y0;
  kernel.run(x, rng, [&](int k, const Vec& state) {
    if (store_trajectory) r.trajectory.push_back(state);
    if (unsafe && !r.hit && unsafe->contains(state)) {
      r.hit = true;
      r.hitting_time = k * kernel.h;
    }
    return true;
  });
  r.terminal = std::move(x);
  return r;
}

EstimateWithCI estimate_hitting_probability(const DynamicsModel& model, const Vec& start,
                                            const UnsafeSet& unsafe, double eps, double t_end,
                                            double dt, long n, std::uint64_t seed, int threads) {
  check_common(eps, t_end, dt);
  require_dimension(start, model.dimension(), "estimate_hitting_probability");
  const Kernel kernel(model, eps, t_end, dt);
  return crude_hitting(kernel, unsafe, n, seed, threads, [&](CounterRng&) { return start; });
}

EstimateWithCI estimate_hitting_probability(const DynamicsModel& model,
                                            const InitialDistribution& start,
                                            const UnsafeSet& unsafe, double eps, double t_end,
                                            double dt, long n, std::uint64_t seed, int threads) {
  check_common(eps, t_end, dt);
  if (start.dimension() != model.dimension()) {
    throw DimensionError("estimate_hitting_probability: prior dimension does not match the model");
  }
  const Kernel kernel(model, eps, t_end, dt);
  const Mat& l = start.cholesky_factor();
  return crude_hitting(kernel, unsafe, n, seed, threads, [&](CounterRng& rng) {
    Vec z(start.dimension());
    for (Eigen::Index j = 0; j < z.size(); ++j) z[j] = rng.normal();
    return Vec(start.mean() + l * z);
  });
}

EstimateWithCI tube_probability(const DynamicsModel& model, const Path& phi, double delta,
                                double eps, double dt, long n, std::uint64_t seed, int threads) {
  phi.validate();
  if (!(delta > 0.0)) throw std::invalid_argument("tube_probability: delta must be > 0");
  if (n < 1) throw std::invalid_argument("tube_probability: n must be >= 1");
  const double t_end = phi.grid.final_time();
  check_common(eps, t_end, dt);
  const Kernel kernel(model, eps, t_end, dt);
  std::vector<unsigned char> inside(static_cast<std::size_t>(n), 0);
  parallel_for(inside.size(), threads, [&](std::size_t i) {
    CounterRng rng(seed, i);
    Vec x = phi.states.front();
    bool ok = true;
    kernel.run(x, rng, [&](int k, const Vec& state) {
      ok = (state - phi.state_at(k * kernel.h)).norm() <= delta;
      return ok;
    });
    inside[i] = ok ? 1 : 0;
  });
  long count = 0;
  for (unsigned char v : inside) count += v;
  return binomial(count, n);
}

EstimateWithCI importance_sampling_hitting(const DynamicsModel& model,
                                           const VariationalSolution& tilt,
                                           const UnsafeSet& unsafe, double eps, double t_end,
                                           double dt, long n, std::uint64_t seed, int threads) {
  check_common(eps, t_end, dt);
  if (!(eps > 0.0)) throw std::invalid_argument("importance_sampling_hitting: eps must be > 0");
  if (n < 1) throw std::invalid_argument("importance_sampling_hitting: n must be >= 1");
  if (!tilt.path.has_deviations() || tilt.path.states.empty()) {
    throw std::invalid_argument("importance_sampling_hitting: tilt lacks deviations");
  }
  const Vec& start = tilt.path.states.front();
  require_dimension(start, model.dimension(), "importance_sampling_hitting");
  const DeviationTable table(tilt);
  Kernel kernel(model, eps, t_end, dt);
  kernel.tilt = &table;

  std::vector<double> value(static_cast<std::size_t>(n), 0.0);
  parallel_for(value.size(), threads, [&](std::size_t i) {
    CounterRng rng(seed, i);
    const PathOutcome o = hitting_path(kernel, start, unsafe, rng);
    value[i] = o.hit ? std::exp(o.log_weight) : 0.0;
  });
  const double mean = pairwise_sum(value) / static_cast<double>(n);
  std::vector<double> dev(value.size()), sq(value.size());
  for (std::size_t i = 0; i < value.size(); ++i) {
    dev[i] = (value[i] - mean) * (value[i] - mean);
    sq[i] = value[i] * value[i];
  }
  EstimateWithCI e;
  e.samples = n;
  e.estimate = mean;
  e.standard_error = std::sqrt(pairwise_sum(dev) / static_cast<double>(n) / static_cast<double>(n));
  const double total = pairwise_sum(value);
  const double total_sq = pairwise_sum(sq);
  e.effective_sample_size = total_sq > 0.0 ? total * total / total_sq : 0.0;
  e.degenerate_weights = e.effective_sample_size < 10.0;
  return e;
}

}  // namespace ldsafe
