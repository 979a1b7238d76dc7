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

#include <cmath>

#include "model_fixture.hpp"
#include "stan/common/error.hpp"
#include "stan/training/trainer.hpp"
#include "test_util.hpp"

using namespace stan;
using namespace stan::training;

namespace {

data::EpiDataset constant_series(double level, std::size_t days) {
  data::EpiDataset ds;
  graph::Location l;
  l.id = "solo";
  l.population = 1000;
  ds.locations = {l};
  ds.dates = data::date_axis("2021-01-01", days);
  ds.feature_count = 4;
  ds.infected.assign(days, level);
  ds.recovered.assign(days, 2.0 * level);
  for (std::size_t d = 0; d < days; ++d) {
    ds.dynamic.insert(ds.dynamic.end(), {level, 3.0 * level, 1.0, 0.0});
  }
  ds.validate();
  return ds;
}

TrainConfig small_config() {
  TrainConfig c;
  c.input_window = 3;
  c.horizon = 2;
  c.dims = {2, 4, 3, 3, 4};
  c.learning_rate = 0.01;
  c.epochs = 5;
  c.rollout = dynamics::RolloutForm::mass_action;
  return c;
}

bool same_params(const model::StanParams& a, const model::StanParams& b) {
  const auto fa = testing::flatten(a, true), fb = testing::flatten(b, true);
  if (fa.size() != fb.size()) return false;
  for (std::size_t i = 0; i < fa.size(); ++i) {
    if (!(fa[i] == fb[i])) return false;
  }
  return true;
}

}  // namespace

TEST_SUITE("training") {

TEST_CASE("window anchors cover every complete input and target span") {
  const auto a = make_windows(10, 3, 2);
  CHECK(a == std::vector<std::size_t>{2, 3, 4, 5, 6, 7});
  CHECK(make_windows(5, 3, 2) == std::vector<std::size_t>{2});
  CHECK_THROWS_AS(make_windows(4, 3, 2), ScheduleError);
  CHECK_THROWS_AS(make_windows(4, 0, 2), RangeError);
}

TEST_CASE("window samples hold day-over-day increments and the seed state") {
  const auto [ds, g] = testing::tiny_outbreak(2, 12, 3);
  const auto w = window_samples(ds, 1, 3, 2);
  REQUIRE(w.size() == 8);
  for (const auto& s : w) {
    CHECK(s.input_begin == s.anchor - 2);
    CHECK(s.target_begin == s.anchor + 1);
    CHECK(s.target_end == s.anchor + 2);
    for (std::size_t k = 0; k < 2; ++k) {
      const std::size_t day = s.anchor + 1 + k;
      CHECK(s.delta_infected[k] == ds.I(1, day) - ds.I(1, day - 1));
      CHECK(s.delta_recovered[k] == ds.R(1, day) - ds.R(1, day - 1));
    }
    CHECK(s.seed.infected == ds.I(1, s.anchor));
    CHECK(s.seed.recovered == ds.R(1, s.anchor));
    CHECK(s.seed.population == ds.locations[1].population);
  }
}

TEST_CASE("adam matches the bias-corrected update by hand") {
  ad::Tensor p = ad::Tensor::row({1.0, -2.0});
  Adam opt({&p}, AdamOptions{0.1, 0.9, 0.999, 1e-8}, 5);
  double m[2] = {0, 0}, v[2] = {0, 0}, x[2] = {1.0, -2.0};
  const double grads[3][2] = {{0.5, -3.0}, {-1.0, 2.0}, {0.25, 0.0}};
  for (int t = 1; t <= 3; ++t) {
    ad::Tape tape;
    const auto leaf = tape.parameter(5, p);
    const auto g = tape.backward(tape.sum(tape.mul(leaf, tape.constant(ad::Tensor::row({grads[t - 1][0], grads[t - 1][1]})))));
    opt.step(g);
    for (int k = 0; k < 2; ++k) {
      m[k] = 0.9 * m[k] + 0.1 * grads[t - 1][k];
      v[k] = 0.999 * v[k] + 0.001 * grads[t - 1][k] * grads[t - 1][k];
      const double mh = m[k] / (1 - std::pow(0.9, t)), vh = v[k] / (1 - std::pow(0.999, t));
      x[k] -= 0.1 * mh / (std::sqrt(vh) + 1e-8);
      CHECK(p[k] == doctest::Approx(x[k]).epsilon(1e-14));
    }
  }
  CHECK(opt.steps() == 3);
}

TEST_CASE("config validation and mode parsing") {
  auto c = small_config();
  c.learning_rate = 0.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = small_config();
  c.mode = Mode::stan_graph;
  c.share_gat = true;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  CHECK(parse_mode("stan-pc") == Mode::stan_pc);
  CHECK(parse_mode("stan_pc") == Mode::stan_pc);
  CHECK(parse_mode("stan-graph") == Mode::stan_graph);
  CHECK_THROWS_AS(parse_mode("stan"), ConfigError);
}

TEST_CASE("zero epochs returns the initial model") {
  const auto [ds, g] = testing::tiny_outbreak(3, 14, 5);
  auto c = small_config();
  c.epochs = 0;
  const auto r = train(ds, g, c);
  const auto init = initial_model(ds, c);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(same_params(r.model.params[i], init.params[i]));
    CHECK(r.history[i].empty());
  }
}

TEST_CASE("constant series is learned to near-zero prediction loss") {
  const auto ds = constant_series(40.0, 30);
  const auto g = graph::build_graph(ds.locations, {});
  auto c = small_config();
  c.mode = Mode::stan_pc;
  c.epochs = 200;
  const auto r = train(ds, g, c);
  const double final_loss = evaluate_loss(ds, g, r.model, 0);
  CHECK(final_loss < 1e-2);
  CHECK(r.history[0].front() > final_loss);
}

TEST_CASE("training is deterministic and independent of the thread count") {
  const auto [ds, g] = testing::tiny_outbreak(4, 16, 6);
  auto c = small_config();
  c.threads = 1;
  const auto a = train(ds, g, c);
  c.threads = 3;
  const auto b = train(ds, g, c);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(same_params(a.model.params[i], b.model.params[i]));
    CHECK(a.history[i] == b.history[i]);
  }
  c.seed = 1;
  const auto d = train(ds, g, c);
  CHECK_FALSE(same_params(a.model.params[0], d.model.params[0]));
}

TEST_CASE("loss decreases over training in every mode") {
  const auto [ds, g] = testing::tiny_outbreak(3, 20, 7);
  for (auto mode : {Mode::full, Mode::stan_pc, Mode::stan_graph}) {
    CAPTURE(to_string(mode));
    auto c = small_config();
    c.mode = mode;
    c.epochs = 60;
    const auto r = train(ds, g, c);
    for (std::size_t i = 0; i < 3; ++i) {
      REQUIRE(r.history[i].size() == 60);
      CHECK(r.history[i].back() < r.history[i].front());
      // history holds the loss before each step
      CHECK(r.history[i].front() == doctest::Approx(evaluate_loss(ds, g, initial_model(ds, c), i)).epsilon(1e-12));
    }
  }
}

TEST_CASE("stan-pc epoch-0 loss is the full-mode prediction term") {
  const auto [ds, g] = testing::tiny_outbreak(3, 20, 8);
  auto full = small_config();
  full.mode = Mode::full;
  auto pc = full;
  pc.mode = Mode::stan_pc;
  pc.epochs = 1;
  const auto r = train(ds, g, pc);
  const auto start = initial_model(ds, full);
  for (std::size_t i = 0; i < 3; ++i) {
    ad::Tape tape;
    const auto terms = testing::location_terms(tape, ds, g, start, i, start.params[i]);
    REQUIRE(terms.dynamics);
    CHECK(terms.dynamics->value().item() > 0.0);
    CHECK(r.history[i][0] == doctest::Approx(terms.prediction.value().item()).epsilon(1e-12));
  }
}

TEST_CASE("shared attention layers stay identical across locations") {
  const auto [ds, g] = testing::tiny_outbreak(3, 14, 8);
  auto c = small_config();
  c.share_gat = true;
  c.epochs = 10;
  const auto r = train(ds, g, c);
  const auto init = initial_model(ds, c);
  for (std::size_t i = 1; i < 3; ++i) {
    CHECK(r.model.params[i].gat1.transform[0] == r.model.params[0].gat1.transform[0]);
    CHECK(r.model.params[i].gat2.attention[1] == r.model.params[0].gat2.attention[1]);
    CHECK_FALSE(r.model.params[i].gru.w_update == r.model.params[0].gru.w_update);
  }
  CHECK_FALSE(r.model.params[0].gat1.transform[0] == init.params[0].gat1.transform[0]);
  CHECK(init.params[0].gat1.transform[0] == init.params[2].gat1.transform[0]);
}

TEST_CASE("too-short training data raises a schedule error") {
  const auto [ds, g] = testing::tiny_outbreak(2, 4, 9);
  CHECK_THROWS_AS(train(ds, g, small_config()), ScheduleError);
}

TEST_CASE("forecast totals accumulate increments from the last observation") {
  const std::vector<double> d{1.5, -2.0, 4.0};
  CHECK(cumulative_totals(10.0, d) == std::vector<double>{11.5, 9.5, 13.5});
  const auto [ds, g] = testing::tiny_outbreak(2, 14, 10);
  auto c = small_config();
  c.epochs = 2;
  const auto r = train(ds, g, c);
  const auto f = predict_future(r.model, ds, g, 2);
  REQUIRE(f.size() == 2);
  CHECK(f[1].last_infected == ds.I(1, 13));
  CHECK(f[1].total_infected == cumulative_totals(ds.I(1, 13), f[1].delta_infected));
  CHECK(f[0].location_id == ds.locations[0].id);
  CHECK(f[0].beta > 0.0);
  CHECK(f[0].beta < 1.0);
  CHECK_THROWS_AS(predict_future(r.model, ds, g, 3), ContractError);
}

TEST_CASE("prediction rejects a dataset with different locations") {
  const auto [ds, g] = testing::tiny_outbreak(2, 14, 11);
  auto c = small_config();
  c.epochs = 1;
  const auto r = train(ds, g, c);
  auto other = ds;
  other.locations[0].id = "elsewhere";
  CHECK_THROWS_AS(predict_future(r.model, other, g, 2), ValidationError);
}

}  // TEST_SUITE
