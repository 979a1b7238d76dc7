// Copyright 2026 The stanfc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <doctest.h>

#include <chrono>
#include <cmath>

#include "stan/baselines/compartmental.hpp"
#include "stan/baselines/nelder_mead.hpp"
#include "stan/common/error.hpp"

using namespace stan;
using namespace stan::baselines;

TEST_SUITE("baselines") {

TEST_CASE("no transmission leaves geometric decay") {
  const auto tr = simulate_sir({0.0, 0.1, 100.0, 0.0}, 1e4, 30);
  for (std::size_t t = 0; t < 30; ++t) {
    CHECK(tr.infected[t] == doctest::Approx(100.0 * std::pow(0.9, static_cast<double>(t))).epsilon(1e-12));
    CHECK(tr.susceptible[t] == 1e4 - 100.0);
  }
}

TEST_CASE("sir and seir conserve the population") {
  const auto a = simulate_sir({0.6, 0.2, 10, 5}, 5e3, 200);
  const auto b = simulate_seir({0.9, 0.3, 0.4, 10, 5, 20}, 5e3, 200);
  for (std::size_t t = 0; t < 200; ++t) {
    CHECK(a.susceptible[t] + a.infected[t] + a.recovered[t] == doctest::Approx(5e3).epsilon(1e-13));
    CHECK(b.susceptible[t] + b.exposed[t] + b.infected[t] + b.recovered[t] ==
          doctest::Approx(5e3).epsilon(1e-13));
    CHECK(a.exposed[t] == 0.0);
    CHECK(b.susceptible[t] >= 0.0);
  }
}

TEST_CASE("seir with unit incubation delays each infection by one day") {
  const double n = 2e4, beta = 0.5, gamma = 0.2;
  const auto tr = simulate_seir({beta, gamma, 1.0, 30, 0, 0}, n, 60);
  double s = n - 30, i = 30, r = 0, pending = 0;
  for (std::size_t t = 1; t < 60; ++t) {
    const double inf = beta * s * i / n, rec = gamma * i;
    s -= inf;
    i += pending - rec;
    r += rec;
    pending = inf;
    CHECK(tr.infected[t] == doctest::Approx(i).epsilon(1e-12));
    CHECK(tr.exposed[t] == doctest::Approx(pending).epsilon(1e-12));
  }
}

TEST_CASE("flows are clamped at the available mass") {
  const auto s = step_sir({10, 0, 990, 0}, 1.0, 1.0, 1000);
  CHECK(s.susceptible == 10 - 1.0 * 10 * 990 / 1000);
  CHECK(s.infected >= 0.0);
  const auto big = step_sir({500, 0, 500, 0}, 1.0, 1.0, 100);
  CHECK(big.susceptible == 0.0);
  CHECK(big.infected == 500.0);
  CHECK(big.recovered == 500.0);
}

TEST_CASE("parameter validation") {
  CHECK_THROWS_AS(simulate_sir({1.5, 0.1, 1, 0}, 100, 5), RangeError);
  CHECK_THROWS_AS(simulate_sir({0.5, 0.1, -1, 0}, 100, 5), ValidationError);
  CHECK_THROWS_AS(simulate_sir({0.5, 0.1, 90, 20}, 100, 5), ValidationError);
  CHECK_THROWS_AS(simulate_seir({0.5, 0.1, -0.1, 1, 0, 0}, 100, 5), RangeError);
  CHECK(parse_family("SEIR") == Family::seir);
  CHECK_THROWS_AS(parse_family("sis"), ConfigError);
}

TEST_CASE("noiseless sir fit recovers the generating rates") {
  const auto start = std::chrono::steady_clock::now();
  for (int seed = 0; seed < 20; ++seed) {
    CAPTURE(seed);
    // Vary the initial condition so each repetition is a distinct problem.
    const double i0 = 5.0 + 3.0 * seed;
    const auto tr = simulate_sir({0.3, 0.1, i0, 0.0}, 1e5, 90);
    const auto fit = fit_compartmental(tr.infected, 1e5, Family::sir);
    CHECK(std::abs(fit.params.beta - 0.3) <= 0.01);
    CHECK(std::abs(fit.params.gamma - 0.1) <= 0.01);
    CHECK(fit.offset == 0);
  }
  CHECK(std::chrono::steady_clock::now() - start < std::chrono::minutes(1));
}

TEST_CASE("seir fit reproduces an seir trajectory") {
  const auto tr = simulate_seir({0.5, 0.15, 0.3, 20, 0, 0}, 5e4, 80);
  const auto fit = fit_compartmental(tr.infected, 5e4, Family::seir);
  CHECK(fit.params.beta == doctest::Approx(0.5).epsilon(0.05));
  CHECK(fit.params.gamma == doctest::Approx(0.15).epsilon(0.05));
  CHECK(fit.params.sigma == doctest::Approx(0.3).epsilon(0.1));
}

TEST_CASE("pure decay fits a near-zero transmission rate") {
  std::vector<double> y;
  for (int t = 0; t < 40; ++t) y.push_back(500.0 * std::pow(0.9, t));
  const auto fit = fit_compartmental(y, 1e5, Family::sir);
  CHECK(fit.params.beta <= 0.02);
  CHECK(fit.params.gamma == doctest::Approx(0.1).epsilon(0.05));
}

TEST_CASE("leading zeros shift the fit window") {
  auto tr = simulate_sir({0.3, 0.1, 10.0, 0.0}, 1e5, 60);
  std::vector<double> y(7, 0.0);
  y.insert(y.end(), tr.infected.begin(), tr.infected.end());
  const auto fit = fit_compartmental(y, 1e5, Family::sir);
  CHECK(fit.offset == 7);
  CHECK(fit.params.i0 == 10.0);
  const auto back = fit.trajectory(y.size());
  REQUIRE(back.size() == y.size());
  for (std::size_t t = 0; t < 7; ++t) {
    CHECK(back.infected[t] == 0.0);
    CHECK(back.susceptible[t] == 1e5);
  }
  CHECK(fitted_state(fit, 3).susceptible == 1e5);
  CHECK(fit.residual == doctest::Approx(fit_residual(Family::sir, fit.params, y, 1e5, 7)));
}

TEST_CASE("observed recovered count seeds R0") {
  const auto tr = simulate_sir({0.3, 0.1, 10.0, 40.0}, 1e5, 60);
  const auto fit = fit_compartmental(tr.infected, 1e5, Family::sir, std::span<const double>(tr.recovered));
  CHECK(fit.params.r0 == 40.0);
  CHECK(std::abs(fit.params.beta - 0.3) <= 0.01);
}

TEST_CASE("degenerate and invalid fit inputs") {
  CHECK_THROWS_AS(fit_compartmental(std::vector<double>(10, 0.0), 100, Family::sir), DegenerateError);
  CHECK_THROWS_AS(fit_compartmental(std::vector<double>{0, 0, 0, 0, 0, 3}, 100, Family::sir), DegenerateError);
  CHECK_THROWS_AS(fit_compartmental(std::vector<double>{1, 2, 3}, 100, Family::sir), ValidationError);
  CHECK_THROWS_AS(fit_compartmental(std::vector<double>{1, 2, -3, 4, 5}, 100, Family::sir), ValidationError);
  CHECK_THROWS_AS(fit_compartmental(std::vector<double>{1, 2, NAN, 4, 5}, 100, Family::sir), ValidationError);
}

TEST_CASE("forecast continues the fitted recurrence") {
  const auto tr = simulate_sir({0.25, 0.08, 30.0, 0.0}, 2e4, 50);
  const auto fit = fit_compartmental(tr.infected, 2e4, Family::sir);
  const auto full = fit.trajectory(56);
  const auto f = forecast_compartmental(Family::sir, fit.params, fitted_state(fit, 49), 2e4, 6);
  REQUIRE(f.size() == 6);
  for (std::size_t h = 0; h < 6; ++h) CHECK(f[h] == doctest::Approx(full.infected[50 + h]).epsilon(1e-12));
  const auto states = forecast_states(Family::sir, fit.params, fitted_state(fit, 49), 2e4, 6);
  CHECK(states[5].recovered == doctest::Approx(full.recovered[55]).epsilon(1e-12));
}

TEST_CASE("persistence repeats the last observation") {
  CHECK(persistence_forecast(std::vector<double>{1, 4, 9}, 3) == std::vector<double>{9, 9, 9});
  CHECK_THROWS_AS(persistence_forecast(std::vector<double>{}, 3), RangeError);
}

TEST_CASE("nelder mead minimises smooth test functions") {
  const auto rosen = [](std::span<const double> x) {
    return 100 * std::pow(x[1] - x[0] * x[0], 2) + std::pow(1 - x[0], 2);
  };
  NelderMeadOptions o;
  o.max_evaluations = 20000;
  o.initial_step = 0.5;
  const auto r = nelder_mead(rosen, std::vector<double>{-1.2, 1.0}, o);
  CHECK(r.x[0] == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(r.x[1] == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(r.converged);
  const auto bowl = [](std::span<const double> x) {
    return (x[0] - 3) * (x[0] - 3) + 2 * (x[1] + 1) * (x[1] + 1) + (x[2] - 0.5) * (x[2] - 0.5);
  };
  const auto b = nelder_mead(bowl, std::vector<double>{0, 0, 0}, o);
  CHECK(b.value < 1e-12);
  const auto nan_edge = [](std::span<const double> x) { return x[0] < 0 ? NAN : (x[0] - 1) * (x[0] - 1); };
  const auto c = nelder_mead(nan_edge, std::vector<double>{0.2}, o);
  CHECK(c.x[0] == doctest::Approx(1.0).epsilon(1e-4));
}

}  // TEST_SUITE
