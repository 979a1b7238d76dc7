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
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stan/autodiff/tape.hpp"
#include "stan/data/dataset.hpp"
#include "stan/dynamics/dynamics.hpp"
#include "stan/graph/graph.hpp"
#include "stan/model/params.hpp"
#include "stan/model/stan_model.hpp"

namespace stan::training {

enum class Mode {
  full,        // prediction loss + dynamics loss
  stan_pc,     // prediction loss only
  stan_graph,  // no attention layers; the location's own windows feed the GRU
};

Mode parse_mode(std::string_view text);
std::string_view to_string(Mode mode);

struct TrainConfig {
  std::size_t input_window = 5;  // L_I
  std::size_t horizon = 5;       // L_p
  std::size_t epochs = 100;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
  Mode mode = Mode::full;
  model::AttentionMode attention = model::AttentionMode::masked;
  dynamics::RolloutForm rollout = dynamics::RolloutForm::literal;
  dynamics::LossReduction reduction = dynamics::LossReduction::sum;
  model::Dims dims = model::Dims::reference();
  model::FeatureSet features = model::FeatureSet::all;
  bool share_gat = false;
  bool concat_own_embedding = false;
  std::size_t threads = 0;  // 0: hardware concurrency

  void validate() const;
  bool uses_graph() const noexcept { return mode != Mode::stan_graph; }
  bool uses_dynamics_loss() const noexcept { return mode != Mode::stan_pc; }
  model::ForwardConfig forward() const;
  model::ModelShape shape(std::size_t base_width) const;
};

struct AdamOptions {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Adaptive-moment descent over a fixed list of tensors. Gradients are looked
// up under ParamId (first_id + position).
class Adam {
 public:
  Adam(std::vector<ad::Tensor*> params, AdamOptions options, ad::ParamId first_id = 0);

  void step(const ad::GradientMap& grads);
  std::size_t steps() const noexcept { return steps_; }
  const std::vector<ad::Tensor>& first_moments() const noexcept { return m_; }
  const std::vector<ad::Tensor>& second_moments() const noexcept { return v_; }

 private:
  std::vector<ad::Tensor*> params_;
  AdamOptions options_;
  ad::ParamId first_id_;
  std::vector<ad::Tensor> m_;
  std::vector<ad::Tensor> v_;
  std::size_t steps_ = 0;
};

// Anchor days L_I - 1 .. days - L_p - 1. Throws ScheduleError naming the
// minimum series length when empty.
std::vector<std::size_t> make_windows(std::size_t days, std::size_t input_window,
                                      std::size_t horizon);

struct WindowSample {
  std::size_t anchor = 0;
  std::size_t input_begin = 0;   // anchor - L_I + 1
  std::size_t target_begin = 0;  // anchor + 1
  std::size_t target_end = 0;    // anchor + L_p, inclusive
  std::vector<double> delta_infected;
  std::vector<double> delta_recovered;
  dynamics::SeedState seed;
};

std::vector<WindowSample> window_samples(const data::EpiDataset& ds, std::size_t location,
                                         std::size_t input_window, std::size_t horizon);

struct TrainedModel {
  TrainConfig config;
  model::FeatureScaler scaler;
  std::vector<model::StanParams> params;  // one per location, dataset order
};

struct TrainResult {
  TrainedModel model;
  std::vector<std::vector<double>> history;  // [location][epoch], loss before each step
};

struct LossTerms {
  ad::Var prediction;
  std::optional<ad::Var> dynamics;
  ad::Var total;
};

// Summed training objective of one location over its windows.
LossTerms location_loss(ad::Tape& tape, const model::BoundParams& bound,
                        const model::GraphEncoding* encoding, const model::NodeInputs& inputs,
                        std::size_t location, std::span<const WindowSample> windows,
                        const TrainConfig& config);

// Objective of fixed parameters without taking a step.
double evaluate_loss(const data::EpiDataset& ds, const graph::LocationGraph& graph,
                     const TrainedModel& model, std::size_t location);

// Freshly initialised, untrained parameters for every location.
TrainedModel initial_model(const data::EpiDataset& ds, const TrainConfig& config);

TrainResult train(const data::EpiDataset& ds, const graph::LocationGraph& graph,
                  const TrainConfig& config);

struct Forecast {
  std::string location_id;
  double beta = 0.0;
  double gamma = 0.0;
  double last_infected = 0.0;
  std::vector<double> delta_infected;
  std::vector<double> delta_recovered;
  std::vector<double> total_infected;
};

// last + prefix sums of the increments.
std::vector<double> cumulative_totals(double last, std::span<const double> deltas);

// Forecasts the `horizon` days after the last day of `history`. The horizon
// must equal the trained head width (ContractError otherwise).
std::vector<Forecast> predict_future(const TrainedModel& model, const data::EpiDataset& history,
                                     const graph::LocationGraph& graph, std::size_t horizon);

// Forecasts from several origins at once: entry [k][loc] uses days
// 0..origins[k] of `ds` as history. Equivalent to predict_future on each
// truncated prefix, since every input window only looks backwards.
std::vector<std::vector<Forecast>> predict_rolling(const TrainedModel& model,
                                                   const data::EpiDataset& ds,
                                                   const graph::LocationGraph& graph,
                                                   std::span<const std::size_t> origins);

}  // namespace stan::training
