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

#include "ldsafe/pmp_verify.hpp"
#include "ldsafe/scenarios.hpp"

using namespace ldsafe;

TEST_CASE("Hamiltonian of a simple state") {
  const DynamicsModel m =
      DynamicsModel::affine("ou", Mat::Constant(1, 1, -2.0), Vec::Zero(1), Mat::Constant(1, 1, 3.0));
  // -1/2 w^2 + lambda (-2 x + 3 w)
  CHECK(hamiltonian(m, Vec::Constant(1, 0.5), Vec::Constant(1, 1.0), Vec::Constant(1, 2.0)) ==
        doctest::Approx(-0.5 + 2.0 * (-1.0 + 3.0)));
}

TEST_CASE("adjoint of the OU model grows exponentially") {
  const Scenario o = linear_1d(1.0, 1.0, TimeWindow::fixed(1.0));
  const VariationalSolution s = solve_ml(o.model, o.unsafe, Vec::Zero(1), o.window);
  REQUIRE(s.converged());
  const AdjointPath a = integrate_adjoint(o.model, s, Vec::Constant(1, 1.0));
  REQUIRE(a.lambda.size() == s.path.grid.size());
  for (std::size_t k = 0; k < a.lambda.size(); k += 50) {
    CHECK(a.lambda[k][0] == doctest::Approx(std::exp(a.grid[k])).epsilon(1e-9));
  }
  const std::vector<Vec> w = optimal_deviation(o.model, a);
  CHECK(w.back()[0] == doctest::Approx(std::exp(1.0)).epsilon(1e-9));
}

TEST_CASE("ML solutions satisfy the necessary conditions") {
  for (const Scenario& sc : {brownian_1d(1.0, TimeWindow::fixed(1.0)),
                             linear_1d(1.0, 1.0, TimeWindow::fixed(1.0)),
                             brownian_1d(1.0, TimeWindow{0.5, 2.0})}) {
    const VariationalSolution s = solve_ml(sc.model, sc.unsafe, Vec::Zero(1), sc.window);
    REQUIRE(s.converged());
    const ResidualReport r = transversality_residuals(sc.model, s, nullptr, sc.unsafe, sc.eps);
    CHECK_FALSE(r.free_start);
    CHECK_FALSE(r.interior_time);
    CHECK(r.final_transversality < 1e-6);
    CHECK(r.complementarity <= 1e-8);
    CHECK(r.deviation_consistency < 1e-6);
    CHECK(r.adjoint_reintegration < 1e-3);
    CHECK(r.hamiltonian_spread < 1e-6);
    CHECK(r.passed());
  }
}

TEST_CASE("MAP solution satisfies the initial condition") {
  const Scenario b = brownian_1d(1.0, TimeWindow::fixed(1.0), 0.1);
  const VariationalSolution s = solve_map(b.model, b.unsafe, b.prior, b.eps, b.window);
  REQUIRE(s.converged());
  const ResidualReport r = transversality_residuals(b.model, s, &b.prior, b.unsafe, b.eps);
  CHECK(r.free_start);
  CHECK(r.initial_transversality < 1e-6);
  CHECK(r.passed());
  // lambda(0) = eps grad S0(y) = eps y for the N(0, 1) prior.
  CHECK(s.adjoint.front()[0] == doctest::Approx(b.eps * s.start()[0]).epsilon(1e-6));
  CHECK_THROWS(transversality_residuals(b.model, s, nullptr, b.unsafe, b.eps));
}

TEST_CASE("corrupted solutions fail the residual checks") {
  const Scenario b = brownian_1d(1.0, TimeWindow::fixed(1.0));
  const VariationalSolution s = solve_ml(b.model, b.unsafe, Vec::Zero(1), b.window);
  REQUIRE(s.converged());

  VariationalSolution wrong_alpha = s;
  wrong_alpha.alpha *= 1.01;
  CHECK(transversality_residuals(b.model, wrong_alpha, nullptr, b.unsafe, b.eps).final_transversality > 1e-3);

  VariationalSolution wrong_w = s;
  wrong_w.path.deviations[10][0] += 1e-3;
  const ResidualReport r = transversality_residuals(b.model, wrong_w, nullptr, b.unsafe, b.eps);
  CHECK(r.deviation_consistency > 1e-4);
  CHECK_FALSE(r.passed());

  VariationalSolution no_adjoint = s;
  no_adjoint.adjoint.clear();
  CHECK_THROWS(transversality_residuals(b.model, no_adjoint, nullptr, b.unsafe, b.eps));

  VariationalSolution negative = s;
  negative.alpha = -1.0;
  CHECK_THROWS(transversality_residuals(b.model, negative, nullptr, b.unsafe, b.eps));
}

TEST_CASE("thresholds are strict") {
  ResidualReport r;
  r.final_transversality = 2e-6;
  CHECK_FALSE(r.passed());
  r.final_transversality = 0.0;
  r.interior_time = true;
  r.hamiltonian_max = 1e-4;
  CHECK_FALSE(r.passed());
  r.interior_time = false;
  CHECK(r.passed());
}
