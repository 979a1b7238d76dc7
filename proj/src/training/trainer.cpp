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

#include "stan/training/trainer.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <sstream>
#include <thread>

#include "stan/common/error.hpp"
#include "stan/common/random.hpp"

namespace stan::training {
namespace {

constexpr std::uint64_t kSharedGatStream = 0x6a7;

template <class Fn>
void run_parallel(std::size_t jobs, std::size_t threads, Fn&& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, jobs);
  std::vector<std::exception_ptr> errors(jobs);
  if (threads <= 1) {
    for (std::size_t j = 0; j < jobs; ++j) {
      try {
        fn(j);
      } catch (...) {
        errors[j] = std::current_exception();
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < threads; ++w) {
      pool.emplace_back([&] {
        for (std::size_t j = next++; j < jobs; j = next++) {
          try {
            fn(j);
          } catch (...) {
            errors[j] = std::current_exception();
          }
        }
      });
    }
  }
  // Lowest failing job wins so the reported error is independent of scheduling.
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::vector<ad::Tensor*> tensors_of(model::StanParams& p, bool gat, bool rest) {
  std::vector<ad::Tensor*> out;
  p.for_each([&](std::string_view name, ad::Tensor& t) {
    const bool is_gat = name.rfind("gat", 0) == 0;
    if ((is_gat && gat) || (!is_gat && rest)) out.push_back(&t);
  });
  return out;
}

std::size_t last_anchor_days(std::span<const WindowSample> windows) {
  return windows.back().anchor + 1;
}

void check_finite(double loss, std::size_t epoch, const std::string& location) {
  if (!std::isfinite(loss)) {
    throw NumericError("non-finite training loss at epoch " + std::to_string(epoch) +
                       " for location '" + location + "'");
  }
}

}  // namespace

Mode parse_mode(std::string_view text) {
  if (text == "full") return Mode::full;
  if (text == "stan-pc" || text == "stan_pc") return Mode::stan_pc;
  if (text == "stan-graph" || text == "stan_graph") return Mode::stan_graph;
  throw ConfigError("unknown training mode '" + std::string(text) + "'");
}

std::string_view to_string(Mode mode) {
  switch (mode) {
    case Mode::full: return "full";
    case Mode::stan_pc: return "stan-pc";
    case Mode::stan_graph: return "stan-graph";
  }
  return "full";
}

void TrainConfig::validate() const {
  if (input_window == 0) throw ConfigError("input_window must be >= 1");
  if (horizon == 0) throw ConfigError("horizon must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (share_gat && !uses_graph()) throw ConfigError("share_gat requires a graph mode");
}

model::ForwardConfig TrainConfig::forward() const {
  return {attention, uses_graph(), concat_own_embedding};
}

model::ModelShape TrainConfig::shape(std::size_t base_width) const {
  model::ModelShape s;
  s.dims = dims;
  s.node_input = input_window * base_width;
  s.horizon = horizon;
  s.use_graph = uses_graph();
  s.concat_own_embedding = concat_own_embedding;
  return s;
}

Adam::Adam(std::vector<ad::Tensor*> params, AdamOptions options, ad::ParamId first_id)
    : params_(std::move(params)), options_(options), first_id_(first_id) {
  for (const ad::Tensor* p : params_) {
    m_.push_back(ad::Tensor::zeros_like(*p));
    v_.push_back(ad::Tensor::zeros_like(*p));
  }
}

void Adam::step(const ad::GradientMap& grads) {
  ++steps_;
  const double b1 = options_.beta1, b2 = options_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const ad::ParamId id = first_id_ + i;
    if (!grads.contains(id)) continue;
    const ad::Tensor& g = grads.at(id);
    ad::Tensor& p = *params_[i];
    if (g.shape() != p.shape()) throw DimensionError("adam: gradient shape mismatch");
    for (std::size_t k = 0; k < p.size(); ++k) {
      m_[i][k] = b1 * m_[i][k] + (1.0 - b1) * g[k];
      v_[i][k] = b2 * v_[i][k] + (1.0 - b2) * g[k] * g[k];
      const double mhat = m_[i][k] / c1;
      const double vhat = v_[i][k] / c2;
      p[k] -= options_.learning_rate * mhat / (std::sqrt(vhat) + options_.epsilon);
    }
  }
}

std::vector<std::size_t> make_windows(std::size_t days, std::size_t input_window,
                                      std::size_t horizon) {
  if (input_window == 0 || horizon == 0) throw RangeError("make_windows: L_I and L_p must be >= 1");
  const std::size_t minimum = input_window + horizon;
  if (days < minimum) {
    throw ScheduleError("need at least " + std::to_string(minimum) + " days for L_I = " +
                            std::to_string(input_window) + ", L_p = " + std::to_string(horizon) +
                            ", got " + std::to_string(days),
                        static_cast<int>(minimum));
  }
  std::vector<std::size_t> anchors;
  for (std::size_t t = input_window - 1; t + horizon < days; ++t) anchors.push_back(t);
  return anchors;
}

std::vector<WindowSample> window_samples(const data::EpiDataset& ds, std::size_t location,
                                         std::size_t input_window, std::size_t horizon) {
  std::vector<WindowSample> out;
  const double pop = ds.locations.at(location).population;
  for (std::size_t t : make_windows(ds.days(), input_window, horizon)) {
    WindowSample w;
    w.anchor = t;
    w.input_begin = t + 1 - input_window;
    w.target_begin = t + 1;
    w.target_end = t + horizon;
    for (std::size_t s = t + 1; s <= t + horizon; ++s) {
      w.delta_infected.push_back(ds.I(location, s) - ds.I(location, s - 1));
      w.delta_recovered.push_back(ds.R(location, s) - ds.R(location, s - 1));
    }
    w.seed = {ds.I(location, t), ds.R(location, t), pop};
    out.push_back(std::move(w));
  }
  return out;
}

LossTerms location_loss(ad::Tape& tape, const model::BoundParams& bound,
                        const model::GraphEncoding* encoding, const model::NodeInputs& inputs,
                        std::size_t location, std::span<const WindowSample> windows,
                        const TrainConfig& config) {
  if (windows.empty()) throw ContractError("location_loss: no windows");
  const std::size_t days = last_anchor_days(windows);
  const ad::Var seq =
      model::location_sequence(tape, encoding, inputs, location, days, config.forward());
  const auto states = model::gru_forward(tape, seq, bound.gru);

  std::vector<ad::Var> picked;
  std::vector<double> target_i, target_r;
  std::vector<dynamics::SeedState> seeds;
  for (const auto& w : windows) {
    picked.push_back(states[w.anchor]);
    target_i.insert(target_i.end(), w.delta_infected.begin(), w.delta_infected.end());
    target_r.insert(target_r.end(), w.delta_recovered.begin(), w.delta_recovered.end());
    seeds.push_back(w.seed);
  }
  const std::size_t a = windows.size(), lp = config.horizon;
  const ad::Tensor truth_i = ad::Tensor::matrix(a, lp, std::move(target_i));
  const ad::Tensor truth_r = ad::Tensor::matrix(a, lp, std::move(target_r));

  const auto heads = model::predict_heads(tape, tape.concat_rows(picked), bound.heads);
  LossTerms terms;
  terms.prediction = dynamics::squared_error_loss(tape, heads.delta_infected,
                                                  heads.delta_recovered, truth_i, truth_r,
                                                  config.reduction);
  terms.total = terms.prediction;
  if (config.uses_dynamics_loss()) {
    const auto roll =
        dynamics::dynamics_rollout(tape, heads.beta, heads.gamma, seeds, lp, config.rollout);
    terms.dynamics = dynamics::squared_error_loss(tape, roll.delta_infected, roll.delta_recovered,
                                                  truth_i, truth_r, config.reduction);
    terms.total = tape.add(terms.prediction, *terms.dynamics);
  }
  return terms;
}

TrainedModel initial_model(const data::EpiDataset& ds, const TrainConfig& config) {
  config.validate();
  TrainedModel m;
  m.config = config;
  m.scaler = model::FeatureScaler::fit(ds, ds.days(), config.features);
  const auto shape = config.shape(m.scaler.width());
  for (std::size_t loc = 0; loc < ds.size(); ++loc) {
    m.params.push_back(model::init_params(shape, derive_seed(config.seed, loc), ds.locations[loc].id));
  }
  if (config.share_gat) {
    const auto shared = model::init_params(shape, derive_seed(config.seed, kSharedGatStream));
    for (auto& p : m.params) {
      p.gat1 = shared.gat1;
      p.gat2 = shared.gat2;
    }
  }
  return m;
}

double evaluate_loss(const data::EpiDataset& ds, const graph::LocationGraph& graph,
                     const TrainedModel& model, std::size_t location) {
  const auto& config = model.config;
  const auto windows = window_samples(ds, location, config.input_window, config.horizon);
  const std::size_t days = last_anchor_days(windows);
  const auto inputs = model::build_inputs(ds, model.scaler, config.input_window, days, config.features);
  ad::Tape tape;
  ad::ParamId next = 0;
  const auto bound = model::bind(tape, model.params.at(location), next, config.uses_graph());
  std::optional<model::GraphEncoding> enc;
  if (config.uses_graph()) {
    const auto ctx = model::GraphContext::make(graph, config.attention);
    enc = model::encode_graph(tape, bound.gat1, bound.gat2, ctx, inputs, days);
  }
  return location_loss(tape, bound, enc ? &*enc : nullptr, inputs, location, windows, config)
      .total.value()
      .item();
}

TrainResult train(const data::EpiDataset& ds, const graph::LocationGraph& graph,
                  const TrainConfig& config) {
  config.validate();
  if (graph.size() != ds.size()) throw DimensionError("train: graph and dataset sizes differ");
  TrainResult result;
  result.model = initial_model(ds, config);
  auto& model = result.model;
  const std::size_t n = ds.size();

  std::vector<std::vector<WindowSample>> windows(n);
  for (std::size_t loc = 0; loc < n; ++loc) {
    windows[loc] = window_samples(ds, loc, config.input_window, config.horizon);
  }
  result.history.assign(n, {});
  if (config.epochs == 0) return result;

  const std::size_t days = last_anchor_days(windows[0]);
  const auto inputs = model::build_inputs(ds, model.scaler, config.input_window, days, config.features);
  const auto ctx = model::GraphContext::make(graph, config.attention);
  const AdamOptions adam_opts{config.learning_rate};

  if (!config.share_gat) {
    run_parallel(n, config.threads, [&](std::size_t loc) {
      auto& params = model.params[loc];
      Adam adam(tensors_of(params, true, true), adam_opts);
      auto& history = result.history[loc];
      for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        ad::Tape tape;
        ad::ParamId next = 0;
        const auto bound = model::bind(tape, params, next, config.uses_graph());
        std::optional<model::GraphEncoding> enc;
        if (config.uses_graph()) enc = model::encode_graph(tape, bound.gat1, bound.gat2, ctx, inputs, days);
        const auto terms =
            location_loss(tape, bound, enc ? &*enc : nullptr, inputs, loc, windows[loc], config);
        const double loss = terms.total.value().item();
        check_finite(loss, epoch, ds.locations[loc].id);
        history.push_back(loss);
        adam.step(tape.backward(terms.total));
      }
    });
    return result;
  }

  // Shared attention layers: one joint objective over all locations. The
  // GAT tensors of location 0 are the trained copy.
  std::vector<ad::Tensor*> tensors = tensors_of(model.params[0], true, false);
  const std::size_t gat_count = tensors.size();
  for (auto& p : model.params) {
    auto rest = tensors_of(p, false, true);
    tensors.insert(tensors.end(), rest.begin(), rest.end());
  }
  Adam adam(tensors, adam_opts);
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    ad::Tape tape;
    ad::ParamId next = 0;
    const auto gat1 = model::bind_gat(tape, model.params[0].gat1, next);
    const auto gat2 = model::bind_gat(tape, model.params[0].gat2, next);
    if (next != gat_count) throw ContractError("train: shared GAT id layout mismatch");
    const auto enc = model::encode_graph(tape, gat1, gat2, ctx, inputs, days);
    ad::Var total;
    for (std::size_t loc = 0; loc < n; ++loc) {
      model::BoundParams bound;
      bound.gat1 = gat1;
      bound.gat2 = gat2;
      bound.gru = model::bind_gru(tape, model.params[loc].gru, next);
      bound.heads = model::bind_heads(tape, model.params[loc].heads, next);
      const auto terms = location_loss(tape, bound, &enc, inputs, loc, windows[loc], config);
      const double loss = terms.total.value().item();
      check_finite(loss, epoch, ds.locations[loc].id);
      result.history[loc].push_back(loss);
      total = loc == 0 ? terms.total : tape.add(total, terms.total);
    }
    adam.step(tape.backward(total));
  }
  for (std::size_t loc = 1; loc < n; ++loc) {
    model.params[loc].gat1 = model.params[0].gat1;
    model.params[loc].gat2 = model.params[0].gat2;
  }
  return result;
}

std::vector<double> cumulative_totals(double last, std::span<const double> deltas) {
  std::vector<double> out;
  out.reserve(deltas.size());
  double acc = last;
  for (double d : deltas) {
    acc += d;
    out.push_back(acc);
  }
  return out;
}

std::vector<std::vector<Forecast>> predict_rolling(const TrainedModel& model,
                                                   const data::EpiDataset& ds,
                                                   const graph::LocationGraph& graph,
                                                   std::span<const std::size_t> origins) {
  const auto& config = model.config;
  if (ds.size() != model.params.size() || graph.size() != ds.size()) {
    throw DimensionError("predict: model, dataset and graph disagree on the location count");
  }
  for (std::size_t loc = 0; loc < ds.size(); ++loc) {
    if (ds.locations[loc].id != model.params[loc].location_id) {
      throw ValidationError("predict: dataset location '" + ds.locations[loc].id +
                            "' does not match model location '" + model.params[loc].location_id + "'");
    }
  }
  std::size_t days = 0;
  for (std::size_t t : origins) {
    if (t >= ds.days()) throw RangeError("predict: origin " + std::to_string(t) + " is past the data");
    days = std::max(days, t + 1);
  }
  std::vector<std::vector<Forecast>> out(origins.size(), std::vector<Forecast>(ds.size()));
  if (origins.empty()) return out;
  const auto inputs = model::build_inputs(ds, model.scaler, config.input_window, days, config.features);
  const auto ctx = model::GraphContext::make(graph, config.attention);
  run_parallel(ds.size(), config.threads, [&](std::size_t loc) {
    ad::Tape tape;
    ad::ParamId next = 0;
    const auto bound = model::bind(tape, model.params[loc], next, config.uses_graph());
    std::optional<model::GraphEncoding> enc;
    if (config.uses_graph()) enc = model::encode_graph(tape, bound.gat1, bound.gat2, ctx, inputs, days);
    const auto seq = model::location_sequence(tape, enc ? &*enc : nullptr, inputs, loc, days,
                                              config.forward());
    const auto states = model::gru_forward(tape, seq, bound.gru);
    for (std::size_t k = 0; k < origins.size(); ++k) {
      const std::size_t t = origins[k];
      const auto heads = model::predict_heads(tape, states[t], bound.heads);
      Forecast f;
      f.location_id = ds.locations[loc].id;
      f.beta = heads.beta.value().item();
      f.gamma = heads.gamma.value().item();
      f.last_infected = ds.I(loc, t);
      f.delta_infected = heads.delta_infected.value().storage();
      f.delta_recovered = heads.delta_recovered.value().storage();
      f.total_infected = cumulative_totals(f.last_infected, f.delta_infected);
      out[k][loc] = std::move(f);
    }
  });
  return out;
}

std::vector<Forecast> predict_future(const TrainedModel& model, const data::EpiDataset& history,
                                     const graph::LocationGraph& graph, std::size_t horizon) {
  const auto& config = model.config;
  if (horizon != config.horizon) {
    throw ContractError("predict: horizon " + std::to_string(horizon) +
                        " does not match the trained head width " + std::to_string(config.horizon));
  }
  if (history.days() < config.input_window) {
    throw RangeError("predict: history of " + std::to_string(history.days()) +
                     " days is shorter than the input window " +
                     std::to_string(config.input_window));
  }
  const std::size_t origin = history.days() - 1;
  return std::move(predict_rolling(model, history, graph, std::span(&origin, 1)).front());
}

}  // namespace stan::training
