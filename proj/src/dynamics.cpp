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

#include "ldsafe/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace ldsafe {

DynamicsModel DynamicsModel::first_order(std::string name, int n, VectorField drift,
                                         JacobianField jacobian, Mat sigma) {
  if (n <= 0) throw DimensionError("first_order: dimension must be positive");
  if (!drift) throw std::invalid_argument("first_order: drift is required");
  DynamicsModel model;
  model.name_ = std::move(name);
  model.kind_ = ModelKind::FirstOrder;
  model.n_ = n;
  model.d_ = n;
  model.field_ = std::move(drift);
  model.analytic_jacobian_ = static_cast<bool>(jacobian);
  model.field_jacobian_ = std::move(jacobian);
  model.sigma_ = std::move(sigma);
  model.finalize();
  return model;
}

DynamicsModel DynamicsModel::mechanical(std::string name, int m, VectorField acceleration,
                                        JacobianField jacobian, Mat sigma) {
  if (m <= 0) throw DimensionError("mechanical: position dimension must be positive");
  if (!acceleration) throw std::invalid_argument("mechanical: acceleration is required");
  DynamicsModel model;
  model.name_ = std::move(name);
  model.kind_ = ModelKind::Mechanical;
  model.n_ = 2 * m;
  model.d_ = m;
  model.field_ = std::move(acceleration);
  model.analytic_jacobian_ = static_cast<bool>(jacobian);
  model.field_jacobian_ = std::move(jacobian);
  model.sigma_ = std::move(sigma);
  model.finalize();
  return model;
}

DynamicsModel DynamicsModel::affine(std::string name, Mat a, Vec c, Mat sigma) {
  const int n = static_cast<int>(a.rows());
  if (n <= 0 || a.cols() != n || c.size() != n) {
    throw DimensionError("affine: a must be square and match c");
  }
  if (!a.allFinite() || !c.allFinite()) throw std::invalid_argument("affine: coefficients are not finite");
  auto field = [a, c](const Vec& x) { return Vec(a * x + c); };
  auto jacobian = [a](const Vec&) { return a; };
  DynamicsModel model = first_order(std::move(name), n, field, jacobian, std::move(sigma));
  model.affine_ = true;
  model.affine_a_ = std::move(a);
  model.affine_c_ = std::move(c);
  return model;
}

void DynamicsModel::finalize() {
  if (sigma_.rows() != d_ || sigma_.cols() != d_) {
    throw DimensionError(name_ + ": sigma must be " + std::to_string(d_) + "x" +
                         std::to_string(d_));
  }
  if (!sigma_.allFinite()) throw std::invalid_argument(name_ + ": sigma is not finite");
  covariance_ = sigma_ * sigma_.transpose();
  sigma_lu_ = Eigen::FullPivLU<Mat>(sigma_);
  if (!sigma_lu_.isInvertible()) {
    throw std::invalid_argument(name_ + ": sigma must be invertible");
  }
}

Vec DynamicsModel::field(const Vec& x) const {
  if (!is_mechanical()) return field_(x);
  return field_(x.head(d_));
}

void DynamicsModel::field_into(const Vec& x, Vec& out) const {
  if (affine_) {
    out = affine_c_;
    out.noalias() += affine_a_ * x;
    return;
  }
  out = field(x);
}

Mat DynamicsModel::field_jacobian(const Vec& x) const {
  const Vec arg = is_mechanical() ? Vec(x.head(d_)) : x;
  if (analytic_jacobian_) return field_jacobian_(arg);
  return finite_difference_jacobian(field_, arg);
}

Vec DynamicsModel::drift(const Vec& x) const {
  require_dimension(x, n_, "drift");
  if (!is_mechanical()) return field_(x);
  Vec out(n_);
  out.head(d_) = x.tail(d_);
  out.tail(d_) = field_(x.head(d_));
  return out;
}

Mat DynamicsModel::drift_jacobian(const Vec& x) const {
  require_dimension(x, n_, "drift_jacobian");
  if (!is_mechanical()) return field_jacobian(x);
  Mat jac = Mat::Zero(n_, n_);
  jac.topRightCorner(d_, d_).setIdentity();
  jac.bottomLeftCorner(d_, d_) = field_jacobian(x);
  return jac;
}

Vec DynamicsModel::drift_vjp(const Vec& x, const Vec& v) const {
  if (!is_mechanical()) return field_jacobian(x).transpose() * v;
  Vec out(n_);
  out.head(d_) = field_jacobian(x).transpose() * v.tail(d_);
  out.tail(d_) = v.head(d_);
  return out;
}

Vec DynamicsModel::inject(const Vec& w) const {
  require_dimension(w, d_, "inject");
  if (!is_mechanical()) return sigma_ * w;
  Vec out = Vec::Zero(n_);
  out.tail(d_) = sigma_ * w;
  return out;
}

Vec DynamicsModel::project_adjoint(const Vec& lambda) const {
  require_dimension(lambda, n_, "project_adjoint");
  if (!is_mechanical()) return sigma_.transpose() * lambda;
  return sigma_.transpose() * lambda.tail(d_);
}

Vec DynamicsModel::solve_sigma(const Vec& r) const {
  require_dimension(r, d_, "solve_sigma");
  return sigma_lu_.solve(r);
}

Mat finite_difference_jacobian(const DynamicsModel::VectorField& field, const Vec& x) {
  const double step = 1e-6 * (1.0 + x.norm());
  const Vec f0 = field(x);
  Mat jac(f0.size(), x.size());
  Vec probe = x;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    probe[j] = x[j] + step;
    const Vec fp = field(probe);
    probe[j] = x[j] - step;
    const Vec fm = field(probe);
    probe[j] = x[j];
    jac.col(j) = (fp - fm) / (2.0 * step);
  }
  return jac;
}

TimeGrid::TimeGrid(std::vector<double> times) : times_(std::move(times)) {
  if (times_.empty()) throw std::invalid_argument("TimeGrid: no nodes");
  if (times_.front() != 0.0) throw std::invalid_argument("TimeGrid: must start at t = 0");
  for (std::size_t k = 1; k < times_.size(); ++k) {
    if (!(times_[k] > times_[k - 1])) {
      throw std::invalid_argument("TimeGrid: node times must be strictly increasing");
    }
  }
}

TimeGrid TimeGrid::uniform(double duration, int intervals) {
  if (intervals < 1) throw std::invalid_argument("TimeGrid: need at least one interval");
  if (!(duration > 0.0)) throw std::invalid_argument("TimeGrid: duration must be positive");
  std::vector<double> t(static_cast<std::size_t>(intervals) + 1);
  for (int k = 0; k <= intervals; ++k) t[k] = duration * k / intervals;
  t.back() = duration;
  return TimeGrid(std::move(t));
}

void Path::validate() const {
  if (states.size() != grid.size()) {
    throw DimensionError("Path: state count does not match the grid");
  }
  if (has_deviations() && deviations.size() != grid.size()) {
    throw DimensionError("Path: deviation count does not match the grid");
  }
}

Vec Path::state_at(double t) const {
  const auto& times = grid.times();
  if (t <= times.front()) return states.front();
  if (t >= times.back()) return states.back();
  const auto it = std::upper_bound(times.begin(), times.end(), t);
  const std::size_t k = static_cast<std::size_t>(it - times.begin()) - 1;
  const double theta = (t - times[k]) / (times[k + 1] - times[k]);
  return (1.0 - theta) * states[k] + theta * states[k + 1];
}

Vec drift(const DynamicsModel& model, const Vec& x) { return model.drift(x); }

Vec rk4_step(const DynamicsModel& model, const Vec& x, double h, const Vec& w_begin,
             const Vec& w_mid, const Vec& w_end) {
  const Vec k1 = model.drift(x) + model.inject(w_begin);
  const Vec k2 = model.drift(x + 0.5 * h * k1) + model.inject(w_mid);
  const Vec k3 = model.drift(x + 0.5 * h * k2) + model.inject(w_mid);
  const Vec k4 = model.drift(x + h * k3) + model.inject(w_end);
  return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

Path flow_deterministic(const DynamicsModel& model, const Vec& x0, double duration,
                        int intervals) {
  require_dimension(x0, model.dimension(), "flow_deterministic");
  if (intervals < 2) throw std::invalid_argument("flow_deterministic: need N >= 2");
  Path path;
  path.grid = TimeGrid::uniform(duration, intervals);
  path.states.reserve(path.grid.size());
  path.states.push_back(x0);
  const double h = duration / intervals;
  const Vec zero = Vec::Zero(model.noise_dimension());
  Vec x = x0;
  for (int k = 0; k < intervals; ++k) {
    x = rk4_step(model, x, h, zero, zero, zero);
    if (!x.allFinite()) {
      throw DivergenceError("flow_deterministic: non-finite state at step " +
                            std::to_string(k + 1));
    }
    path.states.push_back(x);
  }
  path.deviations.assign(path.grid.size(), zero);
  return path;
}

}  // namespace ldsafe
