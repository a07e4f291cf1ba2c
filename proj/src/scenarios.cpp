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

#include "ldsafe/scenarios.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace ldsafe {

void Scenario::validate() const {
  if (prior.dimension() != model.dimension()) {
    throw DimensionError("scenario " + name + ": prior dimension does not match the model");
  }
  for (int c : unsafe.components()) {
    if (c < 0 || c >= model.dimension()) {
      throw DimensionError("scenario " + name + ": unsafe set reads a component out of range");
    }
  }
  window.validate();
  if (!(eps > 0.0)) throw std::invalid_argument("scenario " + name + ": eps must be positive");
}

namespace {

Scenario scalar_scenario(std::string name, std::string description, DynamicsModel model,
                         double level, const TimeWindow& window, double eps, double mean,
                         double variance) {
  Scenario s{std::move(name),
             std::move(description),
             std::move(model),
             UnsafeSet::threshold(0, level),
             InitialDistribution(Vec::Constant(1, mean), Mat::Constant(1, 1, variance)),
             eps,
             window,
             {},
             {}};
  s.validate();
  return s;
}

}  // namespace

Scenario brownian_1d(double level, const TimeWindow& window, double eps, double prior_mean,
                     double prior_variance) {
  if (!(level >= 0.0)) throw std::invalid_argument("brownian_1d: level must be nonnegative");
  auto model = DynamicsModel::affine("brownian", Mat::Zero(1, 1), Vec::Zero(1), Mat::Identity(1, 1));
  return scalar_scenario("brownian1d", "standard Brownian motion against a threshold",
                         std::move(model), level, window, eps, prior_mean, prior_variance);
}

Scenario linear_1d(double rate, double level, const TimeWindow& window, double eps,
                   double prior_mean, double prior_variance) {
  if (!(rate >= 0.0)) throw std::invalid_argument("linear_1d: rate must be nonnegative");
  auto model = DynamicsModel::affine("linear", Mat::Constant(1, 1, -rate), Vec::Zero(1),
                                     Mat::Identity(1, 1));
  return scalar_scenario("ou1d", "Ornstein-Uhlenbeck process against a threshold",
                         std::move(model), level, window, eps, prior_mean, prior_variance);
}

Eigen::Vector3d gravity_gradient(double gm, const Eigen::Vector3d& r) {
  const double n = r.norm();
  if (!(n > 0.0)) throw std::invalid_argument("gravity_gradient: zero radius");
  return gm * r / (n * n * n);
}

Eigen::Matrix3d gravity_hessian(double gm, const Eigen::Vector3d& r) {
  const double n = r.norm();
  if (!(n > 0.0)) throw std::invalid_argument("gravity_hessian: zero radius");
  const double n3 = n * n * n;
  return gm * (Eigen::Matrix3d::Identity() / n3 - 3.0 * r * r.transpose() / (n3 * n * n));
}

double orbital_energy(double gm, const Eigen::Vector3d& r, const Eigen::Vector3d& v) {
  return 0.5 * v.squaredNorm() - gm / r.norm();
}

namespace {

using Vec6 = Eigen::Matrix<double, 6, 1>;

Vec6 kepler_rhs(double gm, const Vec6& s) {
  Vec6 d;
  d.head<3>() = s.tail<3>();
  d.tail<3>() = -gravity_gradient(gm, s.head<3>());
  return d;
}

Vec6 propagate(double gm, Vec6 s, double duration, int steps) {
  const double h = duration / steps;
  for (int i = 0; i < steps; ++i) {
    const Vec6 k1 = kepler_rhs(gm, s);
    const Vec6 k2 = kepler_rhs(gm, s + 0.5 * h * k1);
    const Vec6 k3 = kepler_rhs(gm, s + 0.5 * h * k2);
    const Vec6 k4 = kepler_rhs(gm, s + h * k3);
    s += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return s;
}

}  // namespace

ConjunctionVelocities construct_conjunction_velocities(double gm, const Eigen::Vector3d& r1,
                                                       const Eigen::Vector3d& r2,
                                                       double miss_distance) {
  const double radius = r1.norm();
  if (!(radius > 0.0) || !(r2.norm() > 0.0)) {
    throw std::invalid_argument("conjunction: zero-radius position");
  }
  const Eigen::Vector3d up = r1 / radius;
  Eigen::Vector3d north = Eigen::Vector3d::UnitZ() - up.z() * up;
  if (north.norm() < 1e-9) throw std::invalid_argument("conjunction: start over a pole");
  north.normalize();

  ConjunctionVelocities out;
  out.v1 = std::sqrt(gm / radius) * north;
  const double period = 2.0 * std::numbers::pi * std::sqrt(radius * radius * radius / gm);
  out.approach_time = 0.75 * period;
  const int steps = 4000;

  Vec6 s1;
  s1 << r1, out.v1;
  const Vec6 f1 = propagate(gm, s1, out.approach_time, steps);
  const Eigen::Vector3d along = f1.tail<3>().normalized();

  auto residual = [&](const Eigen::Vector3d& dv) {
    Vec6 s2;
    s2 << r2, out.v1 + dv;
    const Vec6 f2 = propagate(gm, s2, out.approach_time, steps);
    const Eigen::Vector3d dr = f2.head<3>() - f1.head<3>();
    const Eigen::Vector3d dvel = f2.tail<3>() - f1.tail<3>();
    Eigen::Vector3d res;
    res << (dr.squaredNorm() - miss_distance * miss_distance) / (2.0 * miss_distance),
        dr.dot(dvel) / (dvel.norm() + 1e-3), dr.dot(along);
    return res;
  };

  Eigen::Vector3d dv = Eigen::Vector3d::Zero();
  Eigen::Vector3d res = residual(dv);
  for (int it = 0; it < 60 && res.norm() > 1e-9 * miss_distance; ++it) {
    Eigen::Matrix3d jac;
    for (int c = 0; c < 3; ++c) {
      Eigen::Vector3d step = Eigen::Vector3d::Zero();
      step[c] = 1e-5;
      jac.col(c) = (residual(dv + step) - residual(dv - step)) / 2e-5;
    }
    const Eigen::Vector3d delta = jac.fullPivLu().solve(-res);
    double t = 1.0;
    for (int ls = 0; ls < 30; ++ls, t *= 0.5) {
      const Eigen::Vector3d trial = dv + t * delta;
      const Eigen::Vector3d trial_res = residual(trial);
      if (trial_res.norm() < res.norm()) {
        dv = trial;
        res = trial_res;
        break;
      }
    }
  }
  if (!(res.norm() <= 1e-6 * miss_distance)) {
    throw SolverError("conjunction: velocity construction did not converge");
  }
  out.v2 = out.v1 + dv;
  return out;
}

Scenario two_body_conjunction(const ConjunctionConfig& config) {
  if (!(config.gm > 0.0)) throw std::invalid_argument("conjunction: gm must be positive");
  if (!(config.r1.norm() > 0.0) || !(config.r2.norm() > 0.0)) {
    throw std::invalid_argument("conjunction: zero-radius position");
  }
  if (config.v1.has_value() != config.v2.has_value()) {
    throw std::invalid_argument("conjunction: give both velocities or neither");
  }
  Eigen::Vector3d v1, v2;
  if (config.v1) {
    v1 = *config.v1;
    v2 = *config.v2;
  } else {
    const ConjunctionVelocities c =
        construct_conjunction_velocities(config.gm, config.r1, config.r2, config.miss_distance);
    v1 = c.v1;
    v2 = c.v2;
  }
  const double gm = config.gm;
  auto acceleration = [gm](const Vec& eta) {
    Vec a(6);
    a.head<3>() = -gravity_gradient(gm, eta.head<3>());
    a.tail<3>() = -gravity_gradient(gm, eta.tail<3>());
    return a;
  };
  auto jacobian = [gm](const Vec& eta) {
    Mat j = Mat::Zero(6, 6);
    j.topLeftCorner<3, 3>() = -gravity_hessian(gm, eta.head<3>());
    j.bottomRightCorner<3, 3>() = -gravity_hessian(gm, eta.tail<3>());
    return j;
  };
  auto model = DynamicsModel::mechanical("two_body", 6, acceleration, jacobian,
                                         config.sigma * Mat::Identity(6, 6));
  Vec mean(12);
  mean << config.r1, config.r2, v1, v2;
  Vec var(12);
  var << Vec::Constant(6, config.position_variance), Vec::Constant(6, config.velocity_variance);
  Scenario s{"conjunction",
             "two objects in Earth orbit with a close approach",
             std::move(model),
             UnsafeSet::collision(0, 3, config.gamma),
             InitialDistribution(mean, var.asDiagonal().toDenseMatrix()),
             config.eps,
             config.window,
             {},
             {}};
  s.mc.dt = 1.0;
  s.mc.paths = 10000;
  s.validate();
  return s;
}

ClosestApproach closest_approach(const DynamicsModel& model, const Vec& x0, double begin,
                                 double end, int intervals) {
  require_dimension(x0, 12, "closest_approach");
  if (!(end > begin) || begin < 0.0) throw std::invalid_argument("closest_approach: bad interval");
  const Path flow = flow_deterministic(model, x0, end, intervals);
  auto dist = [&](std::size_t k) {
    return (flow.states[k].segment<3>(0) - flow.states[k].segment<3>(3)).norm();
  };
  std::size_t first = 0;
  while (first + 1 < flow.grid.size() && flow.grid[first] < begin) ++first;
  std::size_t best = first;
  for (std::size_t k = first + 1; k < flow.grid.size(); ++k) {
    if (dist(k) < dist(best)) best = k;
  }
  ClosestApproach out{dist(best), flow.grid[best]};
  if (best > first && best + 1 < flow.grid.size()) {
    const double a = dist(best - 1), b = dist(best), c = dist(best + 1);
    const double curvature = a - 2.0 * b + c;
    if (curvature > 0.0) {
      const double shift = 0.5 * (a - c) / curvature;
      const double h = flow.grid[best + 1] - flow.grid[best];
      out.time = flow.grid[best] + shift * h;
      out.distance = b - 0.25 * (a - c) * shift;
    }
  }
  return out;
}

std::vector<std::string> builtin_scenario_names() {
  return {"brownian1d", "brownian1d-free", "ou1d", "double-target", "conjunction"};
}

Scenario builtin_scenario(const std::string& name) {
  if (name == "brownian1d") return brownian_1d(1.0, TimeWindow::fixed(1.0));
  if (name == "brownian1d-free") {
    Scenario s = brownian_1d(1.0, TimeWindow{0.5, 2.0});
    s.name = name;
    s.description = "Brownian motion with a free hitting time in [0.5, 2]";
    return s;
  }
  if (name == "ou1d") return linear_1d(1.0, 1.0, TimeWindow::fixed(1.0));
  if (name == "double-target") {
    Scenario s = brownian_1d(1.0, TimeWindow::fixed(1.0));
    s.name = name;
    s.description = "Brownian motion against a symmetric two-sided threshold";
    s.unsafe = UnsafeSet::symmetric_threshold(0, 1.0);
    return s;
  }
  if (name == "conjunction") return two_body_conjunction();
  throw std::invalid_argument("unknown scenario: " + name);
}

}  // namespace ldsafe
