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

#include "ldsafe/lbfgs.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

namespace ldsafe {
namespace {

struct LinePoint {
  double step = 0.0;
  double value = 0.0;
  double slope = 0.0;
};

// Minimizer of the cubic through two points with slopes, safeguarded into [lo, hi].
double cubic_step(const LinePoint& a, const LinePoint& b) {
  const double lo = std::min(a.step, b.step);
  const double hi = std::max(a.step, b.step);
  const double d1 = a.slope + b.slope - 3.0 * (a.value - b.value) / (a.step - b.step);
  const double disc = d1 * d1 - a.slope * b.slope;
  double t = 0.5 * (lo + hi);
  if (disc >= 0.0) {
    const double d2 = std::copysign(std::sqrt(disc), b.step - a.step);
    const double denom = b.slope - a.slope + 2.0 * d2;
    if (denom != 0.0) {
      const double cand = b.step - (b.step - a.step) * (b.slope + d2 - d1) / denom;
      if (std::isfinite(cand)) t = cand;
    }
  }
  const double margin = 0.1 * (hi - lo);
  return std::clamp(t, lo + margin, hi - margin);
}

class LineSearch {
 public:
  LineSearch(const Objective& objective, const Vec& x, const Vec& dir, double f0, double d0,
             const LbfgsOptions& opts)
      : objective_(objective), x_(x), dir_(dir), opts_(opts) {
    origin_ = {0.0, f0, d0};
    roundoff_ = 1e-10 * (1.0 + std::abs(f0));
  }

  // Returns true on success; the accepted point is left in (x_new, f_new, g_new).
  bool run(double initial, Vec& x_new, double& f_new, Vec& g_new, int& evals) {
    LinePoint prev = origin_;
    double step = initial;
    for (int i = 0; i < opts_.max_line_search; ++i) {
      const LinePoint cur = evaluate(step, x_new, f_new, g_new, evals);
      if (!std::isfinite(cur.value)) {
        step = 0.5 * (prev.step + step);
        continue;
      }
      if (!sufficient(cur) || (i > 0 && cur.value >= prev.value)) {
        return zoom(prev, cur, x_new, f_new, g_new, evals);
      }
      if (curvature_ok(cur)) return true;
      if (cur.slope >= 0.0) return zoom(cur, prev, x_new, f_new, g_new, evals);
      prev = cur;
      step *= 2.0;
    }
    return false;
  }

 private:
  LinePoint evaluate(double step, Vec& x_new, double& f_new, Vec& g_new, int& evals) {
    x_new = x_ + step * dir_;
    f_new = objective_(x_new, g_new);
    ++evals;
    return {step, f_new, g_new.dot(dir_)};
  }

  bool sufficient(const LinePoint& p) const {
    if (p.value <= origin_.value + opts_.armijo * p.step * origin_.slope) return true;
    // Approximate Wolfe: decrease unresolvable in floating point, slope still bounded.
    return p.value <= origin_.value + roundoff_ && p.slope <= -0.8 * origin_.slope;
  }

  bool curvature_ok(const LinePoint& p) const {
    return std::abs(p.slope) <= -opts_.curvature * origin_.slope;
  }

  bool zoom(LinePoint lo, LinePoint hi, Vec& x_new, double& f_new, Vec& g_new, int& evals) {
    for (int i = 0; i < opts_.max_line_search; ++i) {
      const double step = cubic_step(lo, hi);
      const LinePoint cur = evaluate(step, x_new, f_new, g_new, evals);
      if (!std::isfinite(cur.value) || !sufficient(cur) || cur.value >= lo.value) {
        if (std::isfinite(cur.value) && sufficient(cur) && curvature_ok(cur) &&
            cur.value <= lo.value + roundoff_) {
          return true;
        }
        hi = cur;
      } else {
        if (curvature_ok(cur)) return true;
        if (cur.slope * (hi.step - lo.step) >= 0.0) hi = lo;
        lo = cur;
      }
      if (std::abs(hi.step - lo.step) <= 1e-16 * std::max(1.0, std::abs(lo.step))) break;
    }
    // Fall back to the best sufficient-decrease point found.
    if (lo.step > 0.0) {
      evaluate(lo.step, x_new, f_new, g_new, evals);
      return true;
    }
    return false;
  }

  const Objective& objective_;
  const Vec& x_;
  const Vec& dir_;
  const LbfgsOptions& opts_;
  LinePoint origin_;
  double roundoff_ = 0.0;
};

}  // namespace

LbfgsResult minimize_lbfgs(const Objective& objective, Vec x0, const StopTest& stop,
                           const LbfgsOptions& options) {
  LbfgsResult result;
  result.x = std::move(x0);
  result.gradient = Vec::Zero(result.x.size());
  result.value = objective(result.x, result.gradient);
  result.evaluations = 1;
  if (!std::isfinite(result.value) || !result.gradient.allFinite()) {
    result.status = LbfgsStatus::NonFinite;
    return result;
  }

  std::deque<Vec> s_hist;
  std::deque<Vec> y_hist;
  std::deque<double> rho_hist;
  Vec x_new(result.x.size());
  Vec g_new(result.x.size());

  for (int iter = 0; iter < options.max_iterations; ++iter) {
    if (stop(result.x, result.value, result.gradient)) {
      result.status = LbfgsStatus::Converged;
      return result;
    }

    // Two-loop recursion.
    Vec q = result.gradient;
    std::vector<double> a(s_hist.size());
    for (int i = static_cast<int>(s_hist.size()) - 1; i >= 0; --i) {
      a[i] = rho_hist[i] * s_hist[i].dot(q);
      q -= a[i] * y_hist[i];
    }
    if (!s_hist.empty()) {
      q *= s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
    }
    for (std::size_t i = 0; i < s_hist.size(); ++i) {
      const double b = rho_hist[i] * y_hist[i].dot(q);
      q += (a[i] - b) * s_hist[i];
    }
    Vec dir = -q;
    double slope = dir.dot(result.gradient);
    if (!(slope < 0.0)) {
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      dir = -result.gradient;
      slope = dir.dot(result.gradient);
      if (!(slope < 0.0)) {
        result.status = LbfgsStatus::LineSearchFailed;
        return result;
      }
    }

    const double initial =
        s_hist.empty() ? std::min(1.0, 1.0 / std::max(1e-300, result.gradient.lpNorm<Eigen::Infinity>()))
                       : 1.0;
    LineSearch search(objective, result.x, dir, result.value, slope, options);
    double f_new = 0.0;
    if (!search.run(initial, x_new, f_new, g_new, result.evaluations)) {
      if (!s_hist.empty()) {
        // Retry once along steepest descent with fresh curvature memory.
        s_hist.clear();
        y_hist.clear();
        rho_hist.clear();
        continue;
      }
      result.status = LbfgsStatus::LineSearchFailed;
      return result;
    }
    if (!std::isfinite(f_new) || !g_new.allFinite()) {
      result.status = LbfgsStatus::NonFinite;
      return result;
    }

    Vec s = x_new - result.x;
    Vec y = g_new - result.gradient;
    const double sy = s.dot(y);
    result.x = x_new;
    result.value = f_new;
    result.gradient = g_new;
    result.iterations = iter + 1;
    if (sy > 1e-16 * s.norm() * y.norm() && sy > 0.0) {
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(y));
      rho_hist.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > options.memory) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }
  }
  result.status =
      stop(result.x, result.value, result.gradient) ? LbfgsStatus::Converged : LbfgsStatus::MaxIterations;
  return result;
}

}  // namespace ldsafe
