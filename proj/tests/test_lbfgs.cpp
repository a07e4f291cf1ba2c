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
#include <limits>

#include "ldsafe/lbfgs.hpp"

using namespace ldsafe;

namespace {

StopTest gradient_below(double tol) {
  return [tol](const Vec&, double, const Vec& g) { return g.lpNorm<Eigen::Infinity>() <= tol; };
}

}  // namespace

TEST_CASE("minimizes the Rosenbrock function") {
  const Objective rosen = [](const Vec& x, Vec& g) {
    const double a = 1.0 - x[0], b = x[1] - x[0] * x[0];
    g.resize(2);
    g[0] = -2.0 * a - 400.0 * x[0] * b;
    g[1] = 200.0 * b;
    return a * a + 100.0 * b * b;
  };
  Vec x0(2);
  x0 << -1.2, 1.0;
  const LbfgsResult r = minimize_lbfgs(rosen, x0, gradient_below(1e-10));
  CHECK(r.status == LbfgsStatus::Converged);
  CHECK(r.x[0] == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(r.x[1] == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(r.iterations < 200);
}

TEST_CASE("solves an ill-conditioned quadratic") {
  const int n = 60;
  Vec diag(n), b(n);
  for (int i = 0; i < n; ++i) {
    diag[i] = std::pow(10.0, 4.0 * i / (n - 1));
    b[i] = std::cos(i);
  }
  const Objective quad = [&](const Vec& x, Vec& g) {
    g = diag.cwiseProduct(x) - b;
    return 0.5 * x.dot(diag.cwiseProduct(x)) - b.dot(x);
  };
  LbfgsOptions opts;
  opts.max_iterations = 2000;
  const LbfgsResult r = minimize_lbfgs(quad, Vec::Zero(n), gradient_below(1e-9), opts);
  CHECK(r.status == LbfgsStatus::Converged);
  CHECK((r.x - b.cwiseQuotient(diag)).lpNorm<Eigen::Infinity>() < 1e-9);
}

TEST_CASE("starting at a minimizer returns immediately") {
  const Objective quad = [](const Vec& x, Vec& g) {
    g = x;
    return 0.5 * x.squaredNorm();
  };
  const LbfgsResult r = minimize_lbfgs(quad, Vec::Zero(3), gradient_below(1e-12));
  CHECK(r.status == LbfgsStatus::Converged);
  CHECK(r.iterations == 0);
}

TEST_CASE("iteration cap is reported") {
  const Objective quad = [](const Vec& x, Vec& g) {
    g = x;
    g[1] *= 1e4;
    return 0.5 * (x[0] * x[0] + 1e4 * x[1] * x[1]);
  };
  LbfgsOptions o;
  o.max_iterations = 1;
  Vec x0(2);
  x0 << 1.0, 1.0;
  const LbfgsResult r = minimize_lbfgs(quad, x0, gradient_below(1e-14), o);
  CHECK(r.status == LbfgsStatus::MaxIterations);
  CHECK(r.iterations == 1);
}

TEST_CASE("non-finite objective at the start is reported") {
  const Objective bad = [](const Vec& x, Vec& g) {
    g = x;
    return std::numeric_limits<double>::quiet_NaN();
  };
  const LbfgsResult r = minimize_lbfgs(bad, Vec::Ones(2), gradient_below(1e-8));
  CHECK(r.status == LbfgsStatus::NonFinite);
}
