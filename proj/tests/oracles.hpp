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

// Closed-form reference values computed independently of the library.

#include <cmath>
#include <numbers>

namespace oracle {

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

/// Minimum action of dX = sqrt(eps) dW from 0 to level L in time T.
inline double brownian_action(double level, double time) { return level * level / (2.0 * time); }

/// Minimum action of dX = -a X dt + sqrt(eps) dW from y to level L at time T, from the
/// extremal phi(t) = A e^{at} + B e^{-at}.
inline double ou_action(double a, double y, double level, double time) {
  if (a == 0.0) return (level - y) * (level - y) / (2.0 * time);
  const double gap = level - y * std::exp(-a * time);
  return a * gap * gap / (1.0 - std::exp(-2.0 * a * time));
}

/// P[max_{t <= T} sqrt(eps) W_t >= L] by the reflection principle.
inline double reflection_probability(double level, double eps, double time) {
  return std::erfc(level / std::sqrt(2.0 * eps * time));
}

/// MAP start and objective for Brownian motion, prior N(0, v), threshold L, fixed T:
/// minimize (L - y)^2 / (2T) + eps y^2 / (2v).
struct BrownianMap {
  double start;
  double objective;
};
inline BrownianMap brownian_map(double level, double time, double eps, double variance) {
  const double y = level * variance / (variance + eps * time);
  const double j = (level - y) * (level - y) / (2.0 * time) + eps * y * y / (2.0 * variance);
  return {y, j};
}

/// Integral of exp(-Q(y)/eps) N(y; 0, 1) with Q(y) = (L - y)^2 / (2T) below L and 0 above.
inline double brownian_psafety(double level, double time, double eps) {
  // Completing the square in exp(-(L - y)^2 / (2 eps T) - y^2 / 2).
  const double precision = 1.0 + 1.0 / (eps * time);
  const double mean = level / (eps * time) / precision;
  const double log_scale = -level * level / (2.0 * eps * time) + 0.5 * precision * mean * mean;
  const double below = std::exp(log_scale) / std::sqrt(precision) *
                       normal_cdf((level - mean) * std::sqrt(precision));
  return below + (1.0 - normal_cdf(level));
}

}  // namespace oracle
