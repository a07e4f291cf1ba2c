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

#include <functional>

#include "ldsafe/common.hpp"

namespace ldsafe {

enum class LbfgsStatus { Converged, MaxIterations, LineSearchFailed, NonFinite };

struct LbfgsOptions {
  int memory = 20;
  int max_iterations = 500;
  int max_line_search = 40;
  double armijo = 1e-4;
  double curvature = 0.9;
};

struct LbfgsResult {
  Vec x;
  double value = 0.0;
  Vec gradient;
  int iterations = 0;
  int evaluations = 0;
  LbfgsStatus status = LbfgsStatus::MaxIterations;
};

/// f(x), writing the gradient into `grad`.
using Objective = std::function<double(const Vec& x, Vec& grad)>;
/// Returns true when (x, f, grad) is accepted as a minimizer.
using StopTest = std::function<bool(const Vec& x, double f, const Vec& grad)>;

/// Limited-memory BFGS with a strong Wolfe line search. The line search also accepts the
/// approximate Wolfe conditions (function change at roundoff level, curvature satisfied)
/// so the iteration can keep reducing the gradient once f stalls numerically.
LbfgsResult minimize_lbfgs(const Objective& objective, Vec x0, const StopTest& stop,
                           const LbfgsOptions& options = {});

}  // namespace ldsafe
