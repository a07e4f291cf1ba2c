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

#include "ldsafe/dynamics.hpp"
#include "ldsafe/unsafe_set.hpp"

using namespace ldsafe;

namespace {

DynamicsModel rotation_model() {
  Mat a(2, 2);
  a << -0.5, 1.0, -1.0, -0.5;
  Vec c(2);
  c << 0.1, -0.2;
  Mat sigma(2, 2);
  sigma << 1.0, 0.0, 0.3, 0.8;
  return DynamicsModel::affine("rotation", a, c, sigma);
}

DynamicsModel pendulum() {
  return DynamicsModel::mechanical(
      "pendulum", 1, [](const Vec& q) { return Vec(Vec::Constant(1, -std::sin(q[0]))); },
      [](const Vec& q) { return Mat(Mat::Constant(1, 1, -std::cos(q[0]))); },
      Mat::Constant(1, 1, 0.5));
}

}  // namespace

TEST_CASE("affine drift and allocation-free field agree") {
  const DynamicsModel m = rotation_model();
  Vec x(2);
  x << 0.3, -1.2;
  Vec out(2);
  m.field_into(x, out);
  CHECK((out - m.field(x)).norm() == doctest::Approx(0.0));
  CHECK(out[0] == doctest::Approx(-0.5 * 0.3 - 1.2 + 0.1));
  CHECK(out[1] == doctest::Approx(-0.3 + 0.6 - 0.2));
  CHECK((m.drift_jacobian(x) - finite_difference_jacobian([&](const Vec& z) { return m.field(z); }, x))
            .norm() < 1e-8);
}

TEST_CASE("mechanical drift stacks velocity and acceleration") {
  const DynamicsModel m = pendulum();
  CHECK(m.dimension() == 2);
  CHECK(m.noise_dimension() == 1);
  CHECK(m.is_mechanical());
  Vec x(2);
  x << 0.4, 0.7;
  const Vec b = m.drift(x);
  CHECK(b[0] == doctest::Approx(0.7));
  CHECK(b[1] == doctest::Approx(-std::sin(0.4)));
  const Mat j = m.drift_jacobian(x);
  CHECK(j(0, 0) == 0.0);
  CHECK(j(0, 1) == 1.0);
  CHECK(j(1, 0) == doctest::Approx(-std::cos(0.4)));
  Vec v(2);
  v << 1.5, -2.0;
  CHECK((m.drift_vjp(x, v) - j.transpose() * v).norm() < 1e-14);
  const Vec w = Vec::Constant(1, 2.0);
  const Vec injected = m.inject(w);
  CHECK(injected[0] == 0.0);
  CHECK(injected[1] == doctest::Approx(1.0));
  CHECK(m.project_adjoint(v)[0] == doctest::Approx(-1.0));
  CHECK(m.solve_sigma(Vec::Constant(1, 1.0))[0] == doctest::Approx(2.0));
}

TEST_CASE("finite-difference Jacobian is used without an analytic one") {
  const DynamicsModel m = DynamicsModel::first_order(
      "cubic", 1, [](const Vec& x) { return Vec(x.array().cube()); }, {}, Mat::Identity(1, 1));
  CHECK_FALSE(m.has_analytic_jacobian());
  CHECK(m.drift_jacobian(Vec::Constant(1, 2.0))(0, 0) == doctest::Approx(12.0).epsilon(1e-7));
}

TEST_CASE("invalid models are rejected") {
  CHECK_THROWS_AS(DynamicsModel::affine("bad", Mat::Identity(2, 2), Vec::Zero(2), Mat::Zero(2, 2)),
                  std::invalid_argument);
  CHECK_THROWS_AS(DynamicsModel::affine("bad", Mat::Identity(2, 2), Vec::Zero(2), Mat::Identity(1, 1)),
                  DimensionError);
  CHECK_THROWS_AS(DynamicsModel::affine("bad", Mat::Identity(2, 2), Vec::Zero(3), Mat::Identity(2, 2)),
                  DimensionError);
  const DynamicsModel m = rotation_model();
  CHECK_THROWS_AS(m.drift(Vec::Zero(3)), DimensionError);
}

TEST_CASE("time grid and path interpolation") {
  const TimeGrid g = TimeGrid::uniform(2.0, 4);
  CHECK(g.intervals() == 4);
  CHECK(g[1] == doctest::Approx(0.5));
  CHECK(g.final_time() == 2.0);
  CHECK_THROWS(TimeGrid(std::vector<double>{0.0, 1.0, 0.5}));
  CHECK_THROWS(TimeGrid(std::vector<double>{0.1, 1.0}));
  Path p;
  p.grid = TimeGrid::uniform(1.0, 2);
  p.states = {Vec::Constant(1, 0.0), Vec::Constant(1, 1.0), Vec::Constant(1, 4.0)};
  CHECK(p.state_at(0.25)[0] == doctest::Approx(0.5));
  CHECK(p.state_at(0.75)[0] == doctest::Approx(2.5));
  CHECK(p.state_at(5.0)[0] == doctest::Approx(4.0));
}

TEST_CASE("RK4 flow of a linear model matches the exponential") {
  const DynamicsModel m =
      DynamicsModel::affine("decay", Mat::Constant(1, 1, -1.0), Vec::Zero(1), Mat::Identity(1, 1));
  const Path flow = flow_deterministic(m, Vec::Constant(1, 1.0), 2.0, 100);
  CHECK(flow.states.size() == 101);
  CHECK(flow.states.back()[0] == doctest::Approx(std::exp(-2.0)).epsilon(1e-9));
  const Vec step = rk4_step(m, Vec::Constant(1, 0.0), 0.1, Vec::Constant(1, 1.0),
                            Vec::Constant(1, 1.0), Vec::Constant(1, 1.0));
  CHECK(step[0] == doctest::Approx(1.0 - std::exp(-0.1)).epsilon(1e-6));
}

TEST_CASE("RK4 flow conserves the pendulum energy closely") {
  const DynamicsModel m = pendulum();
  Vec x0(2);
  x0 << 1.0, 0.0;
  const Path flow = flow_deterministic(m, x0, 10.0, 2000);
  auto energy = [](const Vec& x) { return 0.5 * x[1] * x[1] - std::cos(x[0]); };
  CHECK(std::abs(energy(flow.states.back()) - energy(x0)) < 1e-10);
}

TEST_CASE("unsafe set levels and gradients") {
  const UnsafeSet t = UnsafeSet::threshold(1, 2.0);
  Vec x(2);
  x << 0.0, 1.5;
  CHECK(t.level(x) == doctest::Approx(0.5));
  CHECK_FALSE(t.contains(x));
  x[1] = 2.0;
  CHECK(t.contains(x));
  CHECK(t.gradient(x)[0] == 0.0);
  CHECK(t.gradient(x)[1] == -1.0);

  const UnsafeSet s = UnsafeSet::symmetric_threshold(0, 1.0);
  CHECK(s.contains(Vec::Constant(1, -1.5)));
  CHECK_FALSE(s.contains(Vec::Constant(1, 0.5)));
  CHECK(s.gradient(Vec::Constant(1, 0.5))[0] == doctest::Approx(-1.0));

  const UnsafeSet c = UnsafeSet::collision(0, 3, 4.0);
  Vec y = Vec::Zero(12);
  y[3] = 3.0;
  CHECK(c.level(y) == doctest::Approx(5.0));
  const Vec g = c.gradient(y);
  CHECK(g[0] == doctest::Approx(-6.0));
  CHECK(g[3] == doctest::Approx(6.0));
  CHECK(g.tail(6).norm() == 0.0);
}
