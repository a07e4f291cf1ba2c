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

#include "ldsafe/action.hpp"

#include <cmath>
#include <numbers>

namespace ldsafe {

InitialDistribution::InitialDistribution(Vec mean, Mat covariance)
    : mean_(std::move(mean)), covariance_(std::move(covariance)) {
  const auto n = mean_.size();
  if (n == 0) throw DimensionError("InitialDistribution: empty mean");
  if (covariance_.rows() != n || covariance_.cols() != n) {
    throw DimensionError("InitialDistribution: covariance must be n x n");
  }
  if ((covariance_ - covariance_.transpose()).cwiseAbs().maxCoeff() >
      1e-12 * (1.0 + covariance_.cwiseAbs().maxCoeff())) {
    throw std::invalid_argument("InitialDistribution: covariance must be symmetric");
  }
  Eigen::LLT<Mat> llt(covariance_);
  if (llt.info() != Eigen::Success) {
    throw std::invalid_argument("InitialDistribution: covariance must be positive definite");
  }
  chol_l_ = llt.matrixL();
  precision_ = llt.solve(Mat::Identity(n, n));
  const double log_det = 2.0 * chol_l_.diagonal().array().log().sum();
  log_normalizer_ =
      -0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi) - 0.5 * log_det;
}

double InitialDistribution::cost(const Vec& y) const {
  require_dimension(y, mean_.size(), "initial_cost");
  const Vec r = y - mean_;
  // Whitened residual keeps tiny covariances well conditioned.
  const Vec z = chol_l_.triangularView<Eigen::Lower>().solve(r);
  return 0.5 * z.squaredNorm();
}

Vec InitialDistribution::cost_gradient(const Vec& y) const {
  require_dimension(y, mean_.size(), "initial_cost_gradient");
  return precision_ * (y - mean_);
}

double action_functional(const Path& path) {
  if (!path.has_deviations()) throw std::invalid_argument("action_functional: no deviations");
  path.validate();
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < path.grid.size(); ++k) {
    const double h = path.grid[k + 1] - path.grid[k];
    total += 0.25 * h * (path.deviations[k].squaredNorm() + path.deviations[k + 1].squaredNorm());
  }
  return total;
}

double initial_cost(const InitialDistribution& dist, const Vec& y) { return dist.cost(y); }

double map_objective(const Path& path, const InitialDistribution& dist, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("map_objective: eps must be positive");
  return action_functional(path) + eps * dist.cost(path.states.front());
}

Path recover_deviation(const Path& path, const DynamicsModel& model) {
  path.validate();
  const std::size_t count = path.grid.size();
  if (count < 2) throw std::invalid_argument("recover_deviation: need at least two nodes");
  const int n = model.dimension();
  const int d = model.noise_dimension();
  Path out = path;
  out.deviations.assign(count, Vec::Zero(d));
  for (std::size_t k = 0; k < count; ++k) {
    require_dimension(path.states[k], n, "recover_deviation");
    Vec rate;
    if (k == 0) {
      rate = (path.states[1] - path.states[0]) / (path.grid[1] - path.grid[0]);
    } else if (k + 1 == count) {
      rate = (path.states[k] - path.states[k - 1]) / (path.grid[k] - path.grid[k - 1]);
    } else {
      // Non-uniform three-point derivative; central difference on uniform grids.
      const double hm = path.grid[k] - path.grid[k - 1];
      const double hp = path.grid[k + 1] - path.grid[k];
      rate = (hm * hm * path.states[k + 1] - hp * hp * path.states[k - 1] +
              (hp * hp - hm * hm) * path.states[k]) /
             (hm * hp * (hm + hp));
    }
    const Vec residual = rate - model.drift(path.states[k]);
    const Vec noise_block = model.is_mechanical() ? Vec(residual.tail(d)) : residual;
    out.deviations[k] = model.solve_sigma(noise_block);
  }
  return out;
}

}  // namespace ldsafe
