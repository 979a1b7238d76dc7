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

#include "stan/model/params.hpp"

#include <cmath>
#include <random>
#include <string>

#include "stan/common/error.hpp"
#include "stan/common/random.hpp"

namespace stan::model {

Dims parse_profile(std::string_view name) {
  if (name == "reference") return Dims::reference();
  if (name == "toy") return Dims::toy();
  throw ConfigError("unknown dimension profile '" + std::string(name) + "'");
}

std::size_t ModelShape::gru_input() const noexcept {
  if (!use_graph) return node_input;
  return concat_own_embedding ? 2 * dims.gat2 : dims.gat2;
}

namespace {

template <class Params, class Fn>
void visit(Params& p, Fn&& fn, bool include_gat) {
  std::string name;
  if (include_gat) {
    auto layer = [&](const char* prefix, auto& g) {
      for (std::size_t k = 0; k < g.transform.size(); ++k) {
        name = std::string(prefix) + ".head" + std::to_string(k) + ".transform";
        fn(name, g.transform[k]);
        name = std::string(prefix) + ".head" + std::to_string(k) + ".attention";
        fn(name, g.attention[k]);
      }
    };
    layer("gat1", p.gat1);
    layer("gat2", p.gat2);
  }
  fn("gru.w_update", p.gru.w_update);
  fn("gru.w_reset", p.gru.w_reset);
  fn("gru.w_candidate", p.gru.w_candidate);
  fn("gru.u_update", p.gru.u_update);
  fn("gru.u_reset", p.gru.u_reset);
  fn("gru.u_candidate", p.gru.u_candidate);
  fn("gru.b_update", p.gru.b_update);
  fn("gru.b_reset", p.gru.b_reset);
  fn("gru.b_candidate", p.gru.b_candidate);
  auto mlp = [&](const char* prefix, auto& m) {
    fn(std::string(prefix) + ".w1", m.w1);
    fn(std::string(prefix) + ".b1", m.b1);
    fn(std::string(prefix) + ".w2", m.w2);
    fn(std::string(prefix) + ".b2", m.b2);
  };
  mlp("rate", p.heads.rate);
  mlp("increment", p.heads.increment);
}

class Initializer {
 public:
  explicit Initializer(std::uint64_t seed) : rng_(seed) {}

  ad::Tensor glorot(std::size_t rows, std::size_t cols) {
    const double a = std::sqrt(6.0 / static_cast<double>(rows + cols));
    std::uniform_real_distribution<double> dist(-a, a);
    ad::Tensor t({rows, cols});
    for (auto& v : t.values()) v = dist(rng_);
    return t;
  }

  static ad::Tensor bias(std::size_t cols) { return ad::Tensor({1, cols}); }

  MlpParams mlp(std::size_t in, std::size_t hidden, std::size_t out) {
    MlpParams m;
    m.w1 = glorot(in, hidden);
    m.b1 = bias(hidden);
    m.w2 = glorot(hidden, out);
    m.b2 = bias(out);
    return m;
  }

  GatLayerParams gat(std::size_t heads, std::size_t in, std::size_t out) {
    GatLayerParams g;
    for (std::size_t k = 0; k < heads; ++k) {
      g.transform.push_back(glorot(in, out));
      // Fan of the 1 x 2F attention row.
      g.attention.push_back(glorot(2 * out, 1));
    }
    return g;
  }

 private:
  Rng rng_;
};

}  // namespace

void StanParams::for_each(const std::function<void(std::string_view, ad::Tensor&)>& fn,
                          bool include_gat) {
  visit(*this, fn, include_gat);
}

void StanParams::for_each(const std::function<void(std::string_view, const ad::Tensor&)>& fn,
                          bool include_gat) const {
  visit(*this, fn, include_gat);
}

std::size_t StanParams::parameter_count(bool include_gat) const {
  std::size_t n = 0;
  for_each([&](std::string_view, const ad::Tensor& t) { n += t.size(); }, include_gat);
  return n;
}

StanParams init_params(const ModelShape& shape, std::uint64_t seed, std::string location_id) {
  const Dims& d = shape.dims;
  if (d.heads == 0 || d.gat1 == 0 || d.gat2 == 0 || d.gru_hidden == 0 || d.mlp_hidden == 0 ||
      shape.node_input == 0 || shape.horizon == 0) {
    throw ConfigError("init_params: every dimension must be positive");
  }
  Initializer init(seed);
  StanParams p;
  p.location_id = std::move(location_id);
  if (shape.use_graph) {
    p.gat1 = init.gat(d.heads, shape.node_input, d.gat1);
    p.gat2 = init.gat(d.heads, d.gat1, d.gat2);
  }
  const std::size_t in = shape.gru_input(), h = d.gru_hidden;
  p.gru.w_update = init.glorot(in, h);
  p.gru.w_reset = init.glorot(in, h);
  p.gru.w_candidate = init.glorot(in, h);
  p.gru.u_update = init.glorot(h, h);
  p.gru.u_reset = init.glorot(h, h);
  p.gru.u_candidate = init.glorot(h, h);
  p.gru.b_update = Initializer::bias(h);
  p.gru.b_reset = Initializer::bias(h);
  p.gru.b_candidate = Initializer::bias(h);
  p.heads.rate = init.mlp(h, d.mlp_hidden, 2);
  p.heads.increment = init.mlp(h, d.mlp_hidden, 2 * shape.horizon);
  return p;
}

}  // namespace stan::model
