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

#include "ldsafe/common.hpp"
#include "ldsafe/dynamics.hpp"

namespace ldsafe {

/// Gaussian law N(mean, covariance) of the initial state.
class InitialDistribution {
 public:
  InitialDistribution(Vec mean, Mat covariance);

  int dimension() const { return static_cast<int>(mean_.size()); }
  const Vec& mean() const { return mean_; }
  const Mat& covariance() const { return covariance_; }
  const Mat& precision() const { return precision_; }
  /// Lower Cholesky factor L with covariance = L L^T.
  const Mat& cholesky_factor() const { return chol_l_; }
  /// log of the density normalizer, -(n/2) log(2 pi) - (1/2) log det covariance.
  double log_normalizer() const { return log_normalizer_; }

  /// S0(y) = 1/2 (y - mean)^T covariance^{-1} (y - mean).
  double cost(const Vec& y) const;
  Vec cost_gradient(const Vec& y) const;
  double log_density(const Vec& y) const { return log_normalizer_ - cost(y); }

 private:
  Vec mean_;
  Mat covariance_;
  Mat precision_;
  Mat chol_l_;
  double log_normalizer_ = 0.0;
};

/// S_T = 1/2 int |w|^2 dt by the trapezoidal rule on the path grid.
double action_functional(const Path& path);

double initial_cost(const InitialDistribution& dist, const Vec& y);

/// J = S_T(path) + eps S0(phi(0)).
double map_objective(const Path& path, const InitialDistribution& dist, double eps);

/// Fills w_k = sigma^{-1} (dphi/dt - b(phi)) with central differences (one-sided at the
/// ends). Mechanical models use the velocity block only.
Path recover_deviation(const Path& path, const DynamicsModel& model);

}  // namespace ldsafe
