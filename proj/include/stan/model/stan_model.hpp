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

// Forward pass on an autodiff tape: two attention layers per day, max-pooled
// graph embedding, GRU over the day sequence, and the two MLP heads.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "stan/autodiff/tape.hpp"
#include "stan/data/dataset.hpp"
#include "stan/graph/graph.hpp"
#include "stan/model/params.hpp"

namespace stan::model {

enum class AttentionMode {
  masked,             // softmax over the graph neighbourhood (self included)
  dense,              // softmax over all N nodes
  masked_log_weight,  // masked, with ln(w_ij) added to each logit
};

AttentionMode parse_attention_mode(std::string_view text);
std::string_view to_string(AttentionMode mode);

enum class FeatureSet {
  all,          // static + every dynamic column
  active_only,  // active-case column only
};

FeatureSet parse_feature_set(std::string_view text);
std::string_view to_string(FeatureSet set);

struct ForwardConfig {
  AttentionMode attention = AttentionMode::masked;
  bool use_graph = true;
  bool concat_own_embedding = false;
};

// Per-column z-score statistics of the base feature vector
// [static (4) ; dynamic (F_D)] restricted to the selected feature set.
struct FeatureScaler {
  std::vector<double> mean;
  std::vector<double> scale;  // standard deviation, 1 where it vanishes

  std::size_t width() const noexcept { return mean.size(); }

  static FeatureScaler fit(const data::EpiDataset& ds, std::size_t days, FeatureSet set);
};

// Base feature vector of one node-day under a feature set, unscaled.
std::vector<double> base_features(const data::EpiDataset& ds, std::size_t loc, std::size_t day,
                                  FeatureSet set);

// Standardised input windows for days [0, days) of every node, stacked
// day-major: row (day * N + node).
struct NodeInputs {
  std::size_t nodes = 0;
  std::size_t days = 0;
  std::size_t width = 0;  // window * base width
  ad::Tensor stacked;

  // days x width block of a single node.
  ad::Tensor node_sequence(std::size_t node, std::size_t day_count) const;
  // (day_count * nodes) x width prefix.
  ad::Tensor prefix(std::size_t day_count) const;
};

NodeInputs build_inputs(const data::EpiDataset& ds, const FeatureScaler& scaler,
                        std::size_t window, std::size_t days, FeatureSet set);

// Attention mask and optional log-weight bias shared by every layer.
struct GraphContext {
  std::size_t nodes = 0;
  std::shared_ptr<const std::vector<std::uint8_t>> mask;
  std::optional<ad::Tensor> log_weights;

  static GraphContext make(const graph::LocationGraph& graph, AttentionMode mode);
};

struct BoundGat {
  std::vector<ad::Var> transform;
  std::vector<ad::Var> attention;
  // Halves of each attention column, sliced once at bind time.
  std::vector<ad::Var> attention_target;
  std::vector<ad::Var> attention_source;
};

struct BoundGru {
  ad::Var w_update, w_reset, w_candidate;
  ad::Var u_update, u_reset, u_candidate;
  ad::Var b_update, b_reset, b_candidate;
};

struct BoundMlp {
  ad::Var w1, b1, w2, b2;
};

struct BoundHeads {
  BoundMlp rate;
  BoundMlp increment;
  std::size_t horizon = 0;
};

struct BoundParams {
  BoundGat gat1;
  BoundGat gat2;
  BoundGru gru;
  BoundHeads heads;
};

// Places tensors on the tape as parameter leaves, numbering them from
// `next_id` in StanParams::for_each order and advancing `next_id`.
BoundGat bind_gat(ad::Tape& tape, const GatLayerParams& p, ad::ParamId& next_id);
BoundGru bind_gru(ad::Tape& tape, const GruParams& p, ad::ParamId& next_id);
BoundHeads bind_heads(ad::Tape& tape, const HeadParams& p, ad::ParamId& next_id);
BoundParams bind(ad::Tape& tape, const StanParams& p, ad::ParamId& next_id,
                 bool include_gat = true);

// z_i = (1/K) sum_k sum_j a_ij^k (x_j W^k)
ad::Var gat_layer_forward(ad::Tape& tape, ad::Var x, const GraphContext& ctx, const BoundGat& p);

// Same layer when the per-head projections x W^k are already on the tape.
ad::Var gat_attend(ad::Tape& tape, std::span<const ad::Var> projected, const GraphContext& ctx,
                   const BoundGat& p);

// Per-head attention matrices of one layer (N x N each), for inspection.
std::vector<ad::Tensor> attention_weights(ad::Tape& tape, ad::Var x, const GraphContext& ctx,
                                          const BoundGat& p);

// Columnwise max over nodes.
ad::Var graph_embedding(ad::Tape& tape, ad::Var z);

// Hidden states h_1..h_D for the D x F sequence, starting from h_0 = 0.
std::vector<ad::Var> gru_forward(ad::Tape& tape, ad::Var sequence, const BoundGru& p);

struct HeadOutputs {
  ad::Var beta;             // A x 1
  ad::Var gamma;            // A x 1
  ad::Var delta_infected;   // A x L_p
  ad::Var delta_recovered;  // A x L_p
};

HeadOutputs predict_heads(ad::Tape& tape, ad::Var hidden, const BoundHeads& p);

struct GraphEncoding {
  ad::Var pooled;                    // D x F_z, row s = pooled embedding of day s
  std::vector<ad::Var> node_output;  // per day, N x F_z
};

// Two attention layers and pooling for days [0, day_count).
GraphEncoding encode_graph(ad::Tape& tape, const BoundGat& gat1, const BoundGat& gat2,
                           const GraphContext& ctx, const NodeInputs& inputs,
                           std::size_t day_count);

// GRU input sequence for one location: pooled embeddings, optionally joined
// with the location's own node embedding, or its raw input windows in
// graph-free mode.
ad::Var location_sequence(ad::Tape& tape, const GraphEncoding* encoding,
                          const NodeInputs& inputs, std::size_t location, std::size_t day_count,
                          const ForwardConfig& config);

struct Prediction {
  double beta = 0.0;
  double gamma = 0.0;
  std::vector<double> delta_infected;
  std::vector<double> delta_recovered;
};

// Full pipeline for one location anchored at day t (inputs cover days 0..t).
Prediction stan_forward(const data::EpiDataset& ds, const graph::LocationGraph& graph,
                        std::size_t location, std::size_t t, const StanParams& params,
                        const ForwardConfig& config, const FeatureScaler& scaler,
                        std::size_t window, FeatureSet set);

}  // namespace stan::model
