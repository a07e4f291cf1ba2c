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

#include <doctest.h>

#include <cmath>
#include <numbers>

#include "ldsafe/action.hpp"

using namespace ldsafe;

namespace {

Path poly_path(int intervals) {
  Path p;
  p.grid = TimeGrid::uniform(1.0, intervals);
  for (std::size_t k = 0; k < p.grid.size(); ++k) {
    const double t = p.grid[k];
    Vec x(1), w(2);
    x << t;
    w << t * t, 1.0;
    p.states.push_back(x);
    p.deviations.push_back(w);
  }
  return p;
}

}  // namespace

TEST_CASE("action of constant deviation is exact") {
  Path p;
  p.grid = TimeGrid::uniform(2.0, 7);
  for (std::size_t k = 0; k < p.grid.size(); ++k) {
    p.states.push_back(Vec::Constant(1, 0.0));
    p.deviations.push_back(Vec::Constant(1, 0.5));
  }
  CHECK(action_functional(p) == doctest::Approx(0.25));
}

TEST_CASE("action converges to the integral") {
  // 1/2 int_0^1 (t^4 + 1) dt = 3/5.
  const double coarse = std::abs(action_functional(poly_path(50)) - 0.6);
  const double fine = std::abs(action_functional(poly_path(100)) - 0.6);
  CHECK(fine < 1e-4);
  CHECK(coarse / fine == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("action is exactly quadratic in the deviation") {
  const Path p = poly_path(37);
  const double base = action_functional(p);
  for (double c : {0.5, 2.0, 3.0}) {
    Path q = p;
    for (Vec& w : q.deviations) w *= c;
    CHECK(action_functional(q) == doctest::Approx(c * c * base).epsilon(1e-15));
  }
}

TEST_CASE("action requires deviations") {
  Path p;
  p.grid = TimeGrid::uniform(1.0, 1);
  p.states = {Vec::Zero(1), Vec::Zero(1)};
  CHECK_THROWS_AS(action_functional(p), std::invalid_argument);
}

TEST_CASE("Gaussian prior cost, gradient and normalizer") {
  Mat cov(2, 2);
  cov << 2.0, 0.5, 0.5, 1.0;
  Vec mean(2);
  mean << 1.0, -1.0;
  const InitialDistribution d(mean, cov);
  Vec y(2);
  y << 0.0, 0.5;
  const Vec r = y - mean;
  CHECK(d.cost(y) == doctest::Approx(0.5 * r.dot(cov.inverse() * r)));
  CHECK(initial_cost(d, mean) == 0.0);
  const double h = 1e-6;
  for (int i = 0; i < 2; ++i) {
    Vec yp = y, ym = y;
    yp[i] += h;
    ym[i] -= h;
    CHECK(d.cost_gradient(y)[i] == doctest::Approx((d.cost(yp) - d.cost(ym)) / (2 * h)).epsilon(1e-7));
  }
  CHECK(d.log_normalizer() ==
        doctest::Approx(-std::log(2.0 * std::numbers::pi) - 0.5 * std::log(cov.determinant())));
  CHECK((d.cholesky_factor() * d.cholesky_factor().transpose() - cov).norm() < 1e-14);
}

TEST_CASE("invalid priors are rejected") {
  CHECK_THROWS_AS(InitialDistribution(Vec::Zero(2), Mat::Identity(3, 3)), DimensionError);
  Mat bad(2, 2);
  bad << 1.0, 2.0, 2.0, 1.0;
  CHECK_THROWS_AS(InitialDistribution(Vec::Zero(2), bad), std::invalid_argument);
  Mat asym(2, 2);
  asym << 1.0, 0.1, 0.0, 1.0;
  CHECK_THROWS_AS(InitialDistribution(Vec::Zero(2), asym), std::invalid_argument);
}

TEST_CASE("MAP objective adds the weighted prior cost") {
  Path p = poly_path(20);
  const InitialDistribution d(Vec::Constant(1, 1.0), Mat::Constant(1, 1, 4.0));
  p.states.front()[0] = 3.0;
  CHECK(map_objective(p, d, 0.1) == doctest::Approx(action_functional(p) + 0.1 * 0.5));
  CHECK_THROWS(map_objective(p, d, 0.0));
}

TEST_CASE("deviation recovery on a straight Brownian path") {
  const DynamicsModel m =
      DynamicsModel::affine("brownian", Mat::Zero(1, 1), Vec::Zero(1), Mat::Identity(1, 1));
  Path p;
  p.grid = TimeGrid::uniform(2.0, 10);
  for (std::size_t k = 0; k < p.grid.size(); ++k) p.states.push_back(Vec::Constant(1, 0.5 * p.grid[k]));
  const Path r = recover_deviation(p, m);
  for (const Vec& w : r.deviations) CHECK(w[0] == doctest::Approx(0.5));
  CHECK(action_functional(r) == doctest::Approx(0.25));
}

TEST_CASE("deviation recovery on the OU extremal") {
  // phi(t) = sinh(t) / sinh(1) with dphi = -phi + w gives w = phi' + phi = e^t / sinh(1).
  const DynamicsModel m =
      DynamicsModel::affine("ou", Mat::Constant(1, 1, -1.0), Vec::Zero(1), Mat::Identity(1, 1));
  Path p;
  p.grid = TimeGrid::uniform(1.0, 400);
  for (std::size_t k = 0; k < p.grid.size(); ++k) {
    p.states.push_back(Vec::Constant(1, std::sinh(p.grid[k]) / std::sinh(1.0)));
  }
  const Path r = recover_deviation(p, m);
  const double t = p.grid[200];
  CHECK(r.deviations[200][0] == doctest::Approx((std::cosh(t) + std::sinh(t)) / std::sinh(1.0)).epsilon(1e-5));
}
