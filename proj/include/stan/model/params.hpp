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

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "stan/autodiff/tensor.hpp"

namespace stan::model {

// Layer widths. The defaults follow the reference configuration; `toy()` is
// the small profile used for gradient checks and quick runs.
struct Dims {
  std::size_t heads = 4;
  std::size_t gat1 = 650;
  std::size_t gat2 = 400;
  std::size_t gru_hidden = 200;
  std::size_t mlp_hidden = 100;

  static Dims reference() { return {}; }
  static Dims toy() { return {4, 16, 8, 8, 16}; }
};

Dims parse_profile(std::string_view name);

// Per-head tensors of one attention layer. transform[k] is stored input-major
// (F_in x F_out) so that node rows multiply on the left; attention[k] is the
// 2 F_out x 1 column whose first half scores the receiving node and second
// half the sending node.
struct GatLayerParams {
  std::vector<ad::Tensor> transform;
  std::vector<ad::Tensor> attention;

  std::size_t heads() const noexcept { return transform.size(); }
  std::size_t in_features() const { return transform.at(0).rows(); }
  std::size_t out_features() const { return transform.at(0).cols(); }
};

// Standard GRU cell: input maps (F x H), recurrent maps (H x H), biases (1 x H).
struct GruParams {
  ad::Tensor w_update, w_reset, w_candidate;
  ad::Tensor u_update, u_reset, u_candidate;
  ad::Tensor b_update, b_reset, b_candidate;

  std::size_t input_size() const noexcept { return w_update.rows(); }
  std::size_t hidden_size() const noexcept { return w_update.cols(); }
};

// One hidden layer with LeakyReLU.
struct MlpParams {
  ad::Tensor w1, b1, w2, b2;

  std::size_t out_features() const noexcept { return w2.cols(); }
};

struct HeadParams {
  MlpParams rate;       // -> (beta, gamma) before the sigmoid
  MlpParams increment;  // -> (dI_1..dI_Lp, dR_1..dR_Lp)

  std::size_t horizon() const noexcept { return increment.out_features() / 2; }
};

struct StanParams {
  std::string location_id;
  GatLayerParams gat1;
  GatLayerParams gat2;
  GruParams gru;
  HeadParams heads;

  // Visits every tensor in a fixed order with a stable dotted name. The GAT
  // tensors are skipped when `include_gat` is false (graph-free mode).
  void for_each(const std::function<void(std::string_view, ad::Tensor&)>& fn,
                bool include_gat = true);
  void for_each(const std::function<void(std::string_view, const ad::Tensor&)>& fn,
                bool include_gat = true) const;

  std::size_t parameter_count(bool include_gat = true) const;
};

// Shape description the initialiser works from.
struct ModelShape {
  Dims dims;
  std::size_t node_input = 0;  // L_I * (F_S + F_D) in graph mode, GRU input otherwise
  std::size_t horizon = 5;
  bool use_graph = true;
  bool concat_own_embedding = false;

  std::size_t gru_input() const noexcept;
};

// Glorot-uniform weights in (-a, a), a = sqrt(6 / (fan_in + fan_out)); zero
// biases. Identical seeds give identical tensors.
StanParams init_params(const ModelShape& shape, std::uint64_t seed, std::string location_id = {});

}  // namespace stan::model
