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

#include <algorithm>
#include <cmath>
#include <numeric>

#include "model_fixture.hpp"
#include "stan/common/error.hpp"
#include "stan/common/random.hpp"
#include "stan/model/stan_model.hpp"
#include "test_util.hpp"

using namespace stan;
using namespace stan::model;

namespace {

ModelShape small_shape(std::size_t input, std::size_t heads = 3) {
  ModelShape s;
  s.dims = {heads, 6, 5, 4, 7};
  s.node_input = input;
  s.horizon = 3;
  return s;
}

}  // namespace

TEST_SUITE("model") {

TEST_CASE("attention rows sum to one and respect the mask") {
  for (std::uint64_t trial = 0; trial < 100; ++trial) {
    CAPTURE(trial);
    const std::size_t n = 2 + trial % 11;
    const auto g = testing::random_graph(n, trial);
    const auto params = init_params(small_shape(4), trial);
    ad::Tape tape;
    ad::ParamId next = 0;
    const auto bound = bind(tape, params, next);
    const auto x = tape.constant(testing::random_tensor({n, 4}, 1000 + trial, -3, 3));
    for (auto mode : {AttentionMode::masked, AttentionMode::dense, AttentionMode::masked_log_weight}) {
      const auto ctx = GraphContext::make(g, mode);
      for (const auto& a : attention_weights(tape, x, ctx, bound.gat1)) {
        for (std::size_t i = 0; i < n; ++i) {
          double s = 0.0;
          for (std::size_t j = 0; j < n; ++j) {
            s += a(i, j);
            if (mode != AttentionMode::dense && !g.adjacent(i, j)) CHECK(a(i, j) == 0.0);
          }
          CHECK(std::abs(s - 1.0) <= 1e-12);
        }
      }
    }
  }
}

TEST_CASE("attention and node outputs are permutation equivariant") {
  for (std::uint64_t trial = 0; trial < 25; ++trial) {
    CAPTURE(trial);
    const std::size_t n = 3 + trial % 8;
    const auto g = testing::random_graph(n, 77 + trial);
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng(trial);
    std::shuffle(perm.begin(), perm.end(), rng);
    const auto gp = testing::permuted(g, perm);
    const auto xv = testing::random_tensor({n, 4}, 500 + trial, -2, 2);
    const auto params = init_params(small_shape(4), trial);

    ad::Tape tape;
    ad::ParamId next = 0;
    const auto bound = bind(tape, params, next);
    const auto x = tape.constant(xv);
    const auto xp = tape.constant(testing::permute_rows(xv, perm));
    const auto ctx = GraphContext::make(g, AttentionMode::masked);
    const auto ctxp = GraphContext::make(gp, AttentionMode::masked);
    const auto a = attention_weights(tape, x, ctx, bound.gat1);
    const auto ap = attention_weights(tape, xp, ctxp, bound.gat1);
    for (std::size_t k = 0; k < a.size(); ++k) {
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) CHECK(ap[k](perm[i], perm[j]) == a[k](i, j));
      }
    }
    const auto z = gat_layer_forward(tape, gat_layer_forward(tape, x, ctx, bound.gat1), ctx, bound.gat2);
    const auto zp = gat_layer_forward(tape, gat_layer_forward(tape, xp, ctxp, bound.gat1), ctxp, bound.gat2);
    CHECK(testing::max_abs_diff(testing::permute_rows(z.value(), perm).storage(), zp.value().storage()) < 1e-12);
    CHECK(testing::max_abs_diff(graph_embedding(tape, z).value().storage(),
                                graph_embedding(tape, zp).value().storage()) < 1e-12);
  }
}

TEST_CASE("zero attention vectors give uniform or weight-proportional attention") {
  const auto g = testing::random_graph(6, 5);
  auto params = init_params(small_shape(4, 1), 3);
  params.gat1.attention[0] = ad::Tensor(params.gat1.attention[0].shape());
  ad::Tape tape;
  ad::ParamId next = 0;
  const auto bound = bind(tape, params, next);
  const auto x = tape.constant(testing::random_tensor({6, 4}, 9));
  const auto a = attention_weights(tape, x, GraphContext::make(g, AttentionMode::masked), bound.gat1)[0];
  const auto b = attention_weights(tape, x, GraphContext::make(g, AttentionMode::masked_log_weight), bound.gat1)[0];
  for (std::size_t i = 0; i < 6; ++i) {
    double deg = 0.0, wsum = 0.0;
    for (std::size_t j = 0; j < 6; ++j) {
      if (g.adjacent(i, j)) {
        deg += 1.0;
        wsum += g.weight(i, j);
      }
    }
    for (std::size_t j = 0; j < 6; ++j) {
      CHECK(a(i, j) == doctest::Approx(g.adjacent(i, j) ? 1.0 / deg : 0.0).epsilon(1e-14));
      CHECK(b(i, j) == doctest::Approx(g.adjacent(i, j) ? g.weight(i, j) / wsum : 0.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("gat layer averages heads of attention-weighted projections") {
  const auto g = testing::random_graph(4, 8);
  const auto params = init_params(small_shape(3, 2), 4);
  ad::Tape tape;
  ad::ParamId next = 0;
  const auto bound = bind(tape, params, next);
  const auto xv = testing::random_tensor({4, 3}, 10);
  const auto ctx = GraphContext::make(g, AttentionMode::masked);
  const auto x = tape.constant(xv);
  const auto out = gat_layer_forward(tape, x, ctx, bound.gat1).value();
  const auto att = attention_weights(tape, x, ctx, bound.gat1);
  // Plain loops: out = 1/K sum_k A_k (X W_k)
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t c = 0; c < 6; ++c) {
      double acc = 0.0;
      for (std::size_t k = 0; k < 2; ++k) {
        for (std::size_t j = 0; j < 4; ++j) {
          double xw = 0.0;
          for (std::size_t f = 0; f < 3; ++f) xw += xv(j, f) * params.gat1.transform[k](f, c);
          acc += att[k](i, j) * xw;
        }
      }
      CHECK(out(i, c) == doctest::Approx(acc / 2.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("attention logits use LeakyReLU of target plus source scores") {
  const auto g = testing::random_graph(3, 2);
  const graph::LocationGraph dense(g.nodes(), g.weights(), 0.0);
  const auto params = init_params(small_shape(2, 1), 6);
  ad::Tape tape;
  ad::ParamId next = 0;
  const auto bound = bind(tape, params, next);
  const auto xv = testing::random_tensor({3, 2}, 3);
  const auto a = attention_weights(tape, tape.constant(xv), GraphContext::make(dense, AttentionMode::masked),
                                   bound.gat1)[0];
  const auto& w = params.gat1.transform[0];
  const auto& av = params.gat1.attention[0];
  auto proj = [&](std::size_t i, std::size_t c) { return xv(i, 0) * w(0, c) + xv(i, 1) * w(1, c); };
  for (std::size_t i = 0; i < 3; ++i) {
    std::vector<double> e(3);
    for (std::size_t j = 0; j < 3; ++j) {
      double s = 0.0;
      for (std::size_t c = 0; c < 6; ++c) s += av(c, 0) * proj(i, c) + av(6 + c, 0) * proj(j, c);
      e[j] = s > 0 ? s : 0.01 * s;
    }
    const double z = std::exp(e[0]) + std::exp(e[1]) + std::exp(e[2]);
    for (std::size_t j = 0; j < 3; ++j) CHECK(a(i, j) == doctest::Approx(std::exp(e[j]) / z).epsilon(1e-12));
  }
}

TEST_CASE("gru cell matches hand-written recurrence") {
  const auto params = init_params(small_shape(2), 12);
  auto gp = params.gru;
  gp.b_update = testing::random_tensor(gp.b_update.shape(), 1);
  gp.b_reset = testing::random_tensor(gp.b_reset.shape(), 2);
  gp.b_candidate = testing::random_tensor(gp.b_candidate.shape(), 3);
  const std::size_t in = gp.input_size(), h = gp.hidden_size();
  const auto seq = testing::random_tensor({3, in}, 4);
  ad::Tape tape;
  ad::ParamId next = 0;
  const auto states = gru_forward(tape, tape.constant(seq), bind_gru(tape, gp, next));
  REQUIRE(states.size() == 3);
  std::vector<double> hv(h, 0.0);
  auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
  for (std::size_t s = 0; s < 3; ++s) {
    std::vector<double> z(h), r(h), nn(h);
    for (std::size_t c = 0; c < h; ++c) {
      double az = gp.b_update(0, c), ar = gp.b_reset(0, c);
      for (std::size_t f = 0; f < in; ++f) {
        az += seq(s, f) * gp.w_update(f, c);
        ar += seq(s, f) * gp.w_reset(f, c);
      }
      for (std::size_t q = 0; q < h; ++q) {
        az += hv[q] * gp.u_update(q, c);
        ar += hv[q] * gp.u_reset(q, c);
      }
      z[c] = sig(az);
      r[c] = sig(ar);
    }
    for (std::size_t c = 0; c < h; ++c) {
      double an = gp.b_candidate(0, c);
      for (std::size_t f = 0; f < in; ++f) an += seq(s, f) * gp.w_candidate(f, c);
      for (std::size_t q = 0; q < h; ++q) an += r[q] * hv[q] * gp.u_candidate(q, c);
      nn[c] = std::tanh(an);
    }
    for (std::size_t c = 0; c < h; ++c) hv[c] = (1 - z[c]) * hv[c] + z[c] * nn[c];
    for (std::size_t c = 0; c < h; ++c) CHECK(states[s].value()(0, c) == doctest::Approx(hv[c]).epsilon(1e-12));
  }
}

TEST_CASE("heads emit sigmoid rates and 2 L_p increments") {
  const auto params = init_params(small_shape(2), 13);
  ad::Tape tape;
  ad::ParamId next = 0;
  const auto hb = bind_heads(tape, params.heads, next);
  const auto hidden = tape.constant(testing::random_tensor({5, 4}, 6, -20, 20));
  const auto out = predict_heads(tape, hidden, hb);
  CHECK(out.beta.value().shape() == ad::Shape{5, 1});
  CHECK(out.delta_infected.value().shape() == ad::Shape{5, 3});
  CHECK(out.delta_recovered.value().shape() == ad::Shape{5, 3});
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(out.beta.value()[i] >= 0.0);
    CHECK(out.beta.value()[i] <= 1.0);
    CHECK(out.gamma.value()[i] >= 0.0);
    CHECK(out.gamma.value()[i] <= 1.0);
  }
}

TEST_CASE("initialisation is deterministic and Glorot-bounded") {
  const auto s = small_shape(10);
  const auto a = init_params(s, 99), b = init_params(s, 99), c = init_params(s, 100);
  CHECK(a.gru.w_update == b.gru.w_update);
  CHECK_FALSE(a.gru.w_update == c.gru.w_update);
  const double bound = std::sqrt(6.0 / (10 + 6));
  for (double v : a.gat1.transform[0].storage()) CHECK(std::abs(v) <= bound);
  for (double v : a.gru.b_update.storage()) CHECK(v == 0.0);
  CHECK(a.parameter_count(false) < a.parameter_count(true));
  auto bad = s;
  bad.dims.heads = 0;
  CHECK_THROWS_AS(init_params(bad, 1), ConfigError);
  CHECK(parse_profile("toy").gat1 == 16);
  CHECK(parse_profile("reference").gat1 == 650);
  CHECK_THROWS_AS(parse_profile("huge"), ConfigError);
}

TEST_CASE("feature scaler standardises columns and keeps constant ones") {
  const auto [ds, g] = testing::tiny_outbreak(3, 10, 1);
  const auto sc = FeatureScaler::fit(ds, 10, FeatureSet::all);
  REQUIRE(sc.width() == 4 + ds.feature_count);
  std::vector<double> m(sc.width(), 0.0);
  for (std::size_t l = 0; l < 3; ++l) {
    for (std::size_t d = 0; d < 10; ++d) {
      const auto row = base_features(ds, l, d, FeatureSet::all);
      for (std::size_t c = 0; c < row.size(); ++c) m[c] += row[c] / 30.0;
    }
  }
  for (std::size_t c = 0; c < sc.width(); ++c) CHECK(sc.mean[c] == doctest::Approx(m[c]).epsilon(1e-12));
  for (std::size_t c = 0; c < sc.width(); ++c) CHECK(sc.scale[c] > 0.0);
  const auto in = build_inputs(ds, sc, 2, 10, FeatureSet::all);
  CHECK(in.width == 2 * sc.width());
  CHECK(in.stacked.rows() == 30);
  CHECK_THROWS_AS(build_inputs(ds, sc, 2, 10, FeatureSet::active_only), DimensionError);
}

TEST_CASE("full model loss gradients match central differences") {
  const auto [ds0, g] = testing::tiny_outbreak(3, 9, 2);
  const auto ds = testing::with_feature_count(ds0, 4);
  training::TrainConfig cfg;
  cfg.input_window = 2;
  cfg.horizon = 2;
  cfg.dims = {2, 4, 3, 3, 4};
  cfg.rollout = dynamics::RolloutForm::literal;
  for (auto mode : {training::Mode::full, training::Mode::stan_pc, training::Mode::stan_graph}) {
    for (bool own : {false, true}) {
      if (mode != training::Mode::full && own) continue;
      CAPTURE(training::to_string(mode));
      CAPTURE(own);
      cfg.mode = mode;
      cfg.concat_own_embedding = own;
      const auto model = training::initial_model(ds, cfg);
      const auto r = ad::finite_difference_check(testing::location_loss_builder(ds, g, model, 1),
                                                 testing::flatten(model.params[1], cfg.uses_graph()), 1e-5);
      CHECK(r.finite);
      // The loss is O(1e5) in raw counts; smaller steps drown in rounding.
      CHECK(r.max_rel_error < 1e-5);
    }
  }
}

TEST_CASE("stan_forward agrees with the loss path and is deterministic") {
  const auto [ds, g] = testing::tiny_outbreak(3, 12, 4);
  training::TrainConfig cfg;
  cfg.input_window = 3;
  cfg.horizon = 2;
  cfg.dims = {2, 4, 3, 3, 4};
  const auto model = training::initial_model(ds, cfg);
  const auto p1 = stan_forward(ds, g, 1, 8, model.params[1], cfg.forward(), model.scaler, 3, cfg.features);
  const auto p2 = stan_forward(ds, g, 1, 8, model.params[1], cfg.forward(), model.scaler, 3, cfg.features);
  CHECK(p1.delta_infected == p2.delta_infected);
  CHECK(p1.delta_infected.size() == 2);
  const std::vector<std::size_t> origins{8};
  const auto rolled = training::predict_rolling(model, ds, g, origins);
  CHECK(rolled[0][1].delta_infected == p1.delta_infected);
  CHECK(rolled[0][1].beta == p1.beta);
  CHECK_THROWS_AS(stan_forward(ds, g, 5, 8, model.params[1], cfg.forward(), model.scaler, 3, cfg.features),
                  RangeError);
}

TEST_CASE("mode parsers") {
  CHECK(parse_attention_mode("dense") == AttentionMode::dense);
  CHECK(parse_attention_mode("masked") == AttentionMode::masked);
  CHECK(parse_feature_set("active") == FeatureSet::active_only);
  CHECK_THROWS_AS(parse_attention_mode("global"), ConfigError);
}

}  // TEST_SUITE
