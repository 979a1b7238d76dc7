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

#include "stan/model/stan_model.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <string>

#include "stan/common/error.hpp"

namespace stan::model {

AttentionMode parse_attention_mode(std::string_view text) {
  if (text == "masked") return AttentionMode::masked;
  if (text == "dense") return AttentionMode::dense;
  if (text == "masked-log-weight" || text == "masked_log_weight") {
    return AttentionMode::masked_log_weight;
  }
  throw ConfigError("unknown attention mode '" + std::string(text) + "'");
}

std::string_view to_string(AttentionMode mode) {
  switch (mode) {
    case AttentionMode::masked: return "masked";
    case AttentionMode::dense: return "dense";
    case AttentionMode::masked_log_weight: return "masked-log-weight";
  }
  return "masked";
}

FeatureSet parse_feature_set(std::string_view text) {
  if (text == "all") return FeatureSet::all;
  if (text == "active" || text == "active-only") return FeatureSet::active_only;
  throw ConfigError("unknown feature set '" + std::string(text) + "'");
}

std::string_view to_string(FeatureSet set) { return set == FeatureSet::all ? "all" : "active"; }

std::vector<double> base_features(const data::EpiDataset& ds, std::size_t loc, std::size_t day,
                                  FeatureSet set) {
  if (set == FeatureSet::active_only) return {ds.I(loc, day)};
  const auto statics = ds.locations[loc].static_features();
  std::vector<double> out(statics.begin(), statics.end());
  for (std::size_t f = 0; f < ds.feature_count; ++f) out.push_back(ds.feature(loc, day, f));
  return out;
}

FeatureScaler FeatureScaler::fit(const data::EpiDataset& ds, std::size_t days, FeatureSet set) {
  if (days == 0 || days > ds.days()) throw RangeError("FeatureScaler::fit: bad day count");
  const std::size_t width = base_features(ds, 0, 0, set).size();
  std::vector<double> sum(width, 0.0), sum_sq(width, 0.0);
  const double count = static_cast<double>(ds.size() * days);
  for (std::size_t loc = 0; loc < ds.size(); ++loc) {
    for (std::size_t d = 0; d < days; ++d) {
      const auto row = base_features(ds, loc, d, set);
      for (std::size_t c = 0; c < width; ++c) sum[c] += row[c];
    }
  }
  FeatureScaler s;
  s.mean.resize(width);
  s.scale.resize(width);
  for (std::size_t c = 0; c < width; ++c) s.mean[c] = sum[c] / count;
  // Second pass around the mean keeps the variance accurate for large counts.
  for (std::size_t loc = 0; loc < ds.size(); ++loc) {
    for (std::size_t d = 0; d < days; ++d) {
      const auto row = base_features(ds, loc, d, set);
      for (std::size_t c = 0; c < width; ++c) {
        const double dv = row[c] - s.mean[c];
        sum_sq[c] += dv * dv;
      }
    }
  }
  for (std::size_t c = 0; c < width; ++c) {
    const double sd = std::sqrt(sum_sq[c] / count);
    s.scale[c] = sd > 1e-12 * std::max(1.0, std::abs(s.mean[c])) ? sd : 1.0;
  }
  return s;
}

ad::Tensor NodeInputs::node_sequence(std::size_t node, std::size_t day_count) const {
  if (day_count == 0 || day_count > days || node >= nodes) {
    throw RangeError("node_sequence: request outside the prepared inputs");
  }
  std::vector<double> v;
  v.reserve(day_count * width);
  for (std::size_t d = 0; d < day_count; ++d) {
    const double* row = stacked.data() + (d * nodes + node) * width;
    v.insert(v.end(), row, row + width);
  }
  return ad::Tensor::matrix(day_count, width, std::move(v));
}

ad::Tensor NodeInputs::prefix(std::size_t day_count) const {
  if (day_count == 0 || day_count > days) throw RangeError("prefix: day count outside inputs");
  if (day_count == days) return stacked;
  std::vector<double> v(stacked.data(), stacked.data() + day_count * nodes * width);
  return ad::Tensor::matrix(day_count * nodes, width, std::move(v));
}

NodeInputs build_inputs(const data::EpiDataset& ds, const FeatureScaler& scaler,
                        std::size_t window, std::size_t days, FeatureSet set) {
  if (window == 0) throw RangeError("build_inputs: window must be >= 1");
  if (days == 0 || days > ds.days()) {
    throw RangeError("build_inputs: " + std::to_string(days) + " days requested from a " +
                     std::to_string(ds.days()) + "-day dataset");
  }
  const std::size_t base = scaler.width();
  if (base != base_features(ds, 0, 0, set).size()) {
    throw DimensionError("build_inputs: scaler width does not match the feature set");
  }
  NodeInputs in;
  in.nodes = ds.size();
  in.days = days;
  in.width = window * base;
  std::vector<double> v;
  v.reserve(days * in.nodes * in.width);
  for (std::size_t d = 0; d < days; ++d) {
    for (std::size_t loc = 0; loc < in.nodes; ++loc) {
      std::vector<double> raw;
      if (set == FeatureSet::all) {
        raw = data::feature_window(ds, loc, d, window);
      } else {
        raw.assign(window, 0.0);
        for (std::size_t b = 0; b < window; ++b) {
          const std::size_t back = window - 1 - b;
          if (back <= d) raw[b] = ds.I(loc, d - back);
        }
      }
      for (std::size_t k = 0; k < raw.size(); ++k) {
        const std::size_t c = k % base;
        v.push_back((raw[k] - scaler.mean[c]) / scaler.scale[c]);
      }
    }
  }
  in.stacked = ad::Tensor::matrix(days * in.nodes, in.width, std::move(v));
  return in;
}

GraphContext GraphContext::make(const graph::LocationGraph& graph, AttentionMode mode) {
  GraphContext ctx;
  ctx.nodes = graph.size();
  if (mode == AttentionMode::dense) {
    ctx.mask = std::make_shared<const std::vector<std::uint8_t>>(ctx.nodes * ctx.nodes, 1);
  } else {
    ctx.mask = std::make_shared<const std::vector<std::uint8_t>>(graph.mask());
  }
  if (mode == AttentionMode::masked_log_weight) {
    ad::Tensor lw({ctx.nodes, ctx.nodes});
    for (std::size_t i = 0; i < lw.size(); ++i) lw[i] = std::log(std::max(graph.weights()[i], DBL_MIN));
    ctx.log_weights = std::move(lw);
  }
  return ctx;
}

BoundGat bind_gat(ad::Tape& tape, const GatLayerParams& p, ad::ParamId& next_id) {
  BoundGat g;
  for (std::size_t k = 0; k < p.heads(); ++k) {
    g.transform.push_back(tape.parameter(next_id++, p.transform[k]));
    g.attention.push_back(tape.parameter(next_id++, p.attention[k]));
    const std::size_t f = p.transform[k].cols();
    if (p.attention[k].rows() != 2 * f || p.attention[k].cols() != 1) {
      throw DimensionError("attention column must be " + std::to_string(2 * f) + " x 1, got " +
                           p.attention[k].shape_string());
    }
    g.attention_target.push_back(tape.slice_rows(g.attention.back(), 0, f));
    g.attention_source.push_back(tape.slice_rows(g.attention.back(), f, 2 * f));
  }
  return g;
}

BoundGru bind_gru(ad::Tape& tape, const GruParams& p, ad::ParamId& next_id) {
  BoundGru g;
  g.w_update = tape.parameter(next_id++, p.w_update);
  g.w_reset = tape.parameter(next_id++, p.w_reset);
  g.w_candidate = tape.parameter(next_id++, p.w_candidate);
  g.u_update = tape.parameter(next_id++, p.u_update);
  g.u_reset = tape.parameter(next_id++, p.u_reset);
  g.u_candidate = tape.parameter(next_id++, p.u_candidate);
  g.b_update = tape.parameter(next_id++, p.b_update);
  g.b_reset = tape.parameter(next_id++, p.b_reset);
  g.b_candidate = tape.parameter(next_id++, p.b_candidate);
  return g;
}

namespace {

BoundMlp bind_mlp(ad::Tape& tape, const MlpParams& p, ad::ParamId& next_id) {
  BoundMlp m;
  m.w1 = tape.parameter(next_id++, p.w1);
  m.b1 = tape.parameter(next_id++, p.b1);
  m.w2 = tape.parameter(next_id++, p.w2);
  m.b2 = tape.parameter(next_id++, p.b2);
  return m;
}

ad::Var mlp_forward(ad::Tape& tape, ad::Var x, const BoundMlp& m) {
  const ad::Var hidden = tape.leaky_relu(tape.add_row(tape.matmul(x, m.w1), m.b1));
  return tape.add_row(tape.matmul(hidden, m.w2), m.b2);
}

ad::Var head_attention(ad::Tape& tape, ad::Var projected, const GraphContext& ctx,
                       const BoundGat& p, std::size_t k) {
  if (projected.value().rows() != ctx.nodes) {
    throw DimensionError("gat_layer_forward: " + std::to_string(projected.value().rows()) +
                         " node rows for a " + std::to_string(ctx.nodes) + "-node graph");
  }
  const ad::Var target = tape.matmul(projected, p.attention_target[k]);
  const ad::Var source = tape.matmul(projected, p.attention_source[k]);
  ad::Var logits = tape.leaky_relu(tape.outer_sum(target, source));
  if (ctx.log_weights) logits = tape.add(logits, tape.constant(*ctx.log_weights));
  return tape.masked_softmax(logits, ctx.mask);
}

}  // namespace

BoundHeads bind_heads(ad::Tape& tape, const HeadParams& p, ad::ParamId& next_id) {
  BoundHeads h;
  h.rate = bind_mlp(tape, p.rate, next_id);
  h.increment = bind_mlp(tape, p.increment, next_id);
  h.horizon = p.horizon();
  return h;
}

BoundParams bind(ad::Tape& tape, const StanParams& p, ad::ParamId& next_id, bool include_gat) {
  BoundParams b;
  if (include_gat) {
    b.gat1 = bind_gat(tape, p.gat1, next_id);
    b.gat2 = bind_gat(tape, p.gat2, next_id);
  }
  b.gru = bind_gru(tape, p.gru, next_id);
  b.heads = bind_heads(tape, p.heads, next_id);
  return b;
}

ad::Var gat_attend(ad::Tape& tape, std::span<const ad::Var> projected, const GraphContext& ctx,
                   const BoundGat& p) {
  if (projected.size() != p.transform.size() || projected.empty()) {
    throw DimensionError("gat_attend: one projection per head required");
  }
  ad::Var acc;
  for (std::size_t k = 0; k < projected.size(); ++k) {
    const ad::Var attn = head_attention(tape, projected[k], ctx, p, k);
    const ad::Var head = tape.matmul(attn, projected[k]);
    acc = k == 0 ? head : tape.add(acc, head);
  }
  return tape.affine(acc, 1.0 / static_cast<double>(projected.size()), 0.0);
}

ad::Var gat_layer_forward(ad::Tape& tape, ad::Var x, const GraphContext& ctx, const BoundGat& p) {
  std::vector<ad::Var> projected;
  projected.reserve(p.transform.size());
  for (const auto& w : p.transform) projected.push_back(tape.matmul(x, w));
  return gat_attend(tape, projected, ctx, p);
}

std::vector<ad::Tensor> attention_weights(ad::Tape& tape, ad::Var x, const GraphContext& ctx,
                                          const BoundGat& p) {
  std::vector<ad::Tensor> out;
  for (std::size_t k = 0; k < p.transform.size(); ++k) {
    out.push_back(head_attention(tape, tape.matmul(x, p.transform[k]), ctx, p, k).value());
  }
  return out;
}

ad::Var graph_embedding(ad::Tape& tape, ad::Var z) { return tape.column_max(z); }

std::vector<ad::Var> gru_forward(ad::Tape& tape, ad::Var sequence, const BoundGru& p) {
  const std::size_t steps = sequence.value().rows();
  const std::size_t hidden = p.u_update.value().rows();
  if (sequence.value().cols() != p.w_update.value().rows()) {
    throw DimensionError("gru_forward: input width " + std::to_string(sequence.value().cols()) +
                         " but cell expects " + std::to_string(p.w_update.value().rows()));
  }
  // Input projections for every step at once.
  const ad::Var xz = tape.add_row(tape.matmul(sequence, p.w_update), p.b_update);
  const ad::Var xr = tape.add_row(tape.matmul(sequence, p.w_reset), p.b_reset);
  const ad::Var xn = tape.add_row(tape.matmul(sequence, p.w_candidate), p.b_candidate);

  ad::Var h = tape.constant(ad::Tensor({1, hidden}));
  std::vector<ad::Var> states;
  states.reserve(steps);
  for (std::size_t s = 0; s < steps; ++s) {
    const ad::Var z = tape.sigmoid(tape.add(tape.slice_rows(xz, s, s + 1), tape.matmul(h, p.u_update)));
    const ad::Var r = tape.sigmoid(tape.add(tape.slice_rows(xr, s, s + 1), tape.matmul(h, p.u_reset)));
    const ad::Var n = tape.tanh(
        tape.add(tape.slice_rows(xn, s, s + 1), tape.matmul(tape.mul(r, h), p.u_candidate)));
    h = tape.add(tape.mul(tape.affine(z, -1.0, 1.0), h), tape.mul(z, n));
    states.push_back(h);
  }
  return states;
}

HeadOutputs predict_heads(ad::Tape& tape, ad::Var hidden, const BoundHeads& p) {
  const std::size_t lp = p.horizon;
  const ad::Var rates = tape.sigmoid(mlp_forward(tape, hidden, p.rate));
  const ad::Var inc = mlp_forward(tape, hidden, p.increment);
  if (rates.value().cols() != 2 || inc.value().cols() != 2 * lp) {
    throw DimensionError("predict_heads: head output widths do not match the horizon");
  }
  return {tape.slice_cols(rates, 0, 1), tape.slice_cols(rates, 1, 2), tape.slice_cols(inc, 0, lp),
          tape.slice_cols(inc, lp, 2 * lp)};
}

GraphEncoding encode_graph(ad::Tape& tape, const BoundGat& gat1, const BoundGat& gat2,
                           const GraphContext& ctx, const NodeInputs& inputs,
                           std::size_t day_count) {
  if (inputs.nodes != ctx.nodes) throw DimensionError("encode_graph: inputs and graph disagree on N");
  const std::size_t n = ctx.nodes;
  const ad::Var x = tape.constant(inputs.prefix(day_count));
  // Layer-1 projections for all days in one product per head.
  std::vector<ad::Var> projected_all;
  for (const auto& w : gat1.transform) projected_all.push_back(tape.matmul(x, w));

  GraphEncoding enc;
  std::vector<ad::Var> pooled;
  std::vector<ad::Var> day_proj(projected_all.size());
  for (std::size_t s = 0; s < day_count; ++s) {
    for (std::size_t k = 0; k < projected_all.size(); ++k) {
      day_proj[k] = tape.slice_rows(projected_all[k], s * n, (s + 1) * n);
    }
    const ad::Var z1 = gat_attend(tape, day_proj, ctx, gat1);
    const ad::Var z2 = gat_layer_forward(tape, z1, ctx, gat2);
    enc.node_output.push_back(z2);
    pooled.push_back(graph_embedding(tape, z2));
  }
  enc.pooled = tape.concat_rows(pooled);
  return enc;
}

ad::Var location_sequence(ad::Tape& tape, const GraphEncoding* encoding,
                          const NodeInputs& inputs, std::size_t location, std::size_t day_count,
                          const ForwardConfig& config) {
  if (!config.use_graph) return tape.constant(inputs.node_sequence(location, day_count));
  if (encoding == nullptr) throw ContractError("location_sequence: graph mode needs an encoding");
  ad::Var seq = day_count == encoding->node_output.size()
                    ? encoding->pooled
                    : tape.slice_rows(encoding->pooled, 0, day_count);
  if (!config.concat_own_embedding) return seq;
  std::vector<ad::Var> own;
  for (std::size_t s = 0; s < day_count; ++s) {
    own.push_back(tape.slice_rows(encoding->node_output[s], location, location + 1));
  }
  return tape.concat_cols(seq, tape.concat_rows(own));
}

Prediction stan_forward(const data::EpiDataset& ds, const graph::LocationGraph& graph,
                        std::size_t location, std::size_t t, const StanParams& params,
                        const ForwardConfig& config, const FeatureScaler& scaler,
                        std::size_t window, FeatureSet set) {
  if (location >= ds.size()) throw RangeError("stan_forward: location index out of range");
  if (t >= ds.days()) throw RangeError("stan_forward: anchor day beyond the series");
  if (graph.size() != ds.size()) throw DimensionError("stan_forward: graph and dataset sizes differ");
  const std::size_t days = t + 1;
  const NodeInputs inputs = build_inputs(ds, scaler, window, days, set);
  ad::Tape tape;
  ad::ParamId next = 0;
  const BoundParams bound = bind(tape, params, next, config.use_graph);
  std::optional<GraphEncoding> enc;
  if (config.use_graph) {
    const GraphContext ctx = GraphContext::make(graph, config.attention);
    enc = encode_graph(tape, bound.gat1, bound.gat2, ctx, inputs, days);
  }
  const ad::Var seq = location_sequence(tape, enc ? &*enc : nullptr, inputs, location, days, config);
  const auto states = gru_forward(tape, seq, bound.gru);
  const HeadOutputs out = predict_heads(tape, states.back(), bound.heads);
  Prediction p;
  p.beta = out.beta.value().item();
  p.gamma = out.gamma.value().item();
  p.delta_infected = out.delta_infected.value().storage();
  p.delta_recovered = out.delta_recovered.value().storage();
  return p;
}

}  // namespace stan::model
