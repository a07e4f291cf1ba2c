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

#include "ldsafe/probability.hpp"
#include "ldsafe/scenarios.hpp"
#include "oracles.hpp"

using namespace ldsafe;

TEST_CASE("LDP hitting probability") {
  CHECK(ldt_hitting_probability(0.5, 0.25) == doctest::Approx(std::exp(-2.0)));
  CHECK(ldt_hitting_probability(0.5, 0.0625) == doctest::Approx(std::exp(-8.0)));
  CHECK(ldt_hitting_probability(0.0, 0.1) == 1.0);
  CHECK_THROWS(ldt_hitting_probability(-1.0, 0.1));
  CHECK_THROWS(ldt_hitting_probability(1.0, 0.0));
}

TEST_CASE("posterior log density combines Q and the prior") {
  const Scenario b = brownian_1d(1.0, TimeWindow::fixed(1.0), 0.1);
  const Vec y = Vec::Constant(1, 0.3);
  const PosteriorEvaluation p = posterior_logdensity(b.model, b.unsafe, b.prior, b.eps, y, b.window);
  CHECK(p.quasipotential == doctest::Approx(0.7 * 0.7 / 2.0).epsilon(1e-7));
  CHECK(p.prior_term == doctest::Approx(0.1 * 0.045));
  CHECK(p.gamma == doctest::Approx(p.quasipotential + p.prior_term));
  CHECK(p.log_posterior == doctest::Approx(-p.gamma / 0.1));
  const PosteriorEvaluation inside =
      posterior_logdensity(b.model, b.unsafe, b.prior, b.eps, Vec::Constant(1, 1.2), b.window);
  CHECK(inside.quasipotential == 0.0);
  CHECK_THROWS_AS(posterior_logdensity(b.model, b.unsafe, b.prior, b.eps, Vec::Zero(2), b.window),
                  DimensionError);
}

TEST_CASE("the posterior mode is the MAP start") {
  const Scenario b = brownian_1d(1.0, TimeWindow::fixed(1.0), 0.1);
  const double mode = oracle::brownian_map(1.0, 1.0, 0.1, 1.0).start;
  const double at = posterior_logdensity(b.model, b.unsafe, b.prior, b.eps, Vec::Constant(1, mode), b.window).log_posterior;
  for (double d : {-0.05, 0.05}) {
    const Vec y = Vec::Constant(1, mode + d);
    CHECK(posterior_logdensity(b.model, b.unsafe, b.prior, b.eps, y, b.window).log_posterior < at);
  }
}

TEST_CASE("weak p-safety of Brownian motion against the closed form") {
  const Scenario b = brownian_1d(1.0, TimeWindow::fixed(1.0), 0.1);
  const PsafetyEstimate e = weak_psafety(b.model, b.unsafe, b.prior, b.eps, b.window);
  CHECK(e.method == "quadrature");
  CHECK(e.failed_probes == 0);
  CHECK(e.estimate == doctest::Approx(oracle::brownian_psafety(1.0, 1.0, 0.1)).epsilon(1e-5));
  CHECK(e.error < 1e-4);
}

TEST_CASE("prior concentrated inside the unsafe set") {
  const Scenario b = brownian_1d(1.0, TimeWindow::fixed(1.0), 0.1, 3.0, 0.01);
  const PsafetyEstimate e = weak_psafety(b.model, b.unsafe, b.prior, b.eps, b.window);
  CHECK(e.estimate == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("p-safety decreases with the noise scale for a distant prior") {
  double previous = 1.0;
  for (double eps : {0.2, 0.1, 0.05}) {
    const Scenario b = brownian_1d(1.0, TimeWindow::fixed(1.0), eps, -1.0, 0.04);
    PsafetyOptions o;
    o.panels = 16;
    const PsafetyEstimate e = weak_psafety(b.model, b.unsafe, b.prior, eps, b.window, o);
    CHECK(e.estimate < previous);
    previous = e.estimate;
  }
}

TEST_CASE("importance sampling variant agrees with the closed form") {
  const Scenario b = brownian_1d(1.0, TimeWindow::fixed(1.0), 0.1);
  PsafetyOptions o;
  o.method = PsafetyMethod::ImportanceSampling;
  o.samples = 64;
  o.seed = 5;
  const PsafetyEstimate e = weak_psafety(b.model, b.unsafe, b.prior, b.eps, b.window, o);
  CHECK(e.method == "importance_sampling");
  CHECK(e.error > 0.0);
  CHECK(std::abs(e.estimate - oracle::brownian_psafety(1.0, 1.0, 0.1)) < 4.0 * e.error);
}

TEST_CASE("p-safety is independent of the thread count") {
  const Scenario b = brownian_1d(1.0, TimeWindow::fixed(1.0), 0.1);
  PsafetyOptions one;
  one.panels = 8;
  PsafetyOptions many = one;
  many.threads = 3;
  CHECK(weak_psafety(b.model, b.unsafe, b.prior, b.eps, b.window, one).raw ==
        weak_psafety(b.model, b.unsafe, b.prior, b.eps, b.window, many).raw);
}

TEST_CASE("p-safety argument checks") {
  const Scenario b = brownian_1d(1.0, TimeWindow::fixed(1.0), 0.1);
  CHECK_THROWS(weak_psafety(b.model, b.unsafe, b.prior, 0.0, b.window));
  const InitialDistribution two(Vec::Zero(2), Mat::Identity(2, 2));
  CHECK_THROWS_AS(weak_psafety(b.model, b.unsafe, two, 0.1, b.window), DimensionError);
}
