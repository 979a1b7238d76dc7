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

#include "stan/cli/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "stan/common/csv.hpp"
#include "stan/common/error.hpp"

namespace stan::cli {
namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::uint64_t parse_unsigned(std::string_view key, std::string_view v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size()) {
    throw ConfigError(std::string(key) + ": expected a nonnegative integer, got '" + std::string(v) + "'");
  }
  return out;
}

double parse_real(std::string_view key, std::string_view v) {
  try {
    return csv::parse_double(v, key);
  } catch (const Error&) {
    throw ConfigError(std::string(key) + ": expected a number, got '" + std::string(v) + "'");
  }
}

bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError(std::string(key) + ": expected true or false, got '" + std::string(v) + "'");
}

dynamics::LossReduction parse_reduction(std::string_view v) {
  if (v == "sum") return dynamics::LossReduction::sum;
  if (v == "mean") return dynamics::LossReduction::mean;
  throw ConfigError("train.reduction: expected sum or mean, got '" + std::string(v) + "'");
}

std::string resolve(const std::filesystem::path& base, std::string_view v) {
  const std::filesystem::path p{std::string(v)};
  if (p.is_absolute() || base.empty()) return p.string();
  return (base / p).lexically_normal().string();
}

}  // namespace

void RunConfig::set_seed(std::uint64_t seed) {
  train.seed = seed;
  eval.seed = seed;
  synth.config.seed = seed;
}

void apply_setting(RunConfig& c, std::string_view key, std::string_view v,
                   const std::filesystem::path& base) {
  auto& t = c.train;
  auto& s = c.synth.config;
  auto size = [&] { return static_cast<std::size_t>(parse_unsigned(key, v)); };
  auto real = [&] { return parse_real(key, v); };
  if (key == "seed") c.set_seed(parse_unsigned(key, v));
  else if (key == "out") c.out = resolve(base, v);
  else if (key == "data.dir") {
    const auto files = data::dataset_paths(resolve(base, v));
    c.data.cases = files.cases;
    c.data.statics = files.statics;
    c.data.dynamic = files.dynamic;
  }
  else if (key == "data.cases") c.data.cases = resolve(base, v);
  else if (key == "data.static") c.data.statics = resolve(base, v);
  else if (key == "data.dynamic") c.data.dynamic = v.empty() || v == "none" ? "" : resolve(base, v);
  else if (key == "data.distances") c.data.distances = v.empty() || v == "none" ? "" : resolve(base, v);
  else if (key == "data.split_day") {
    if (v == "none") c.data.split_day.reset();
    else c.data.split_day = size();
  }
  else if (key == "data.recovered_lag") c.data.recovered_lag = size();
  else if (key == "graph.alpha") c.graph.edge.alpha = real();
  else if (key == "graph.beta") c.graph.edge.beta = real();
  else if (key == "graph.r") c.graph.edge.r = real();
  else if (key == "graph.tau") {
    if (v == "auto") c.graph.tau.reset();
    else c.graph.tau = real();
  }
  else if (key == "train.input_window") t.input_window = size();
  else if (key == "train.horizon") t.horizon = size();
  else if (key == "train.epochs") t.epochs = size();
  else if (key == "train.learning_rate") t.learning_rate = real();
  else if (key == "train.seed") t.seed = parse_unsigned(key, v);
  else if (key == "train.mode") t.mode = training::parse_mode(v);
  else if (key == "train.attention") t.attention = model::parse_attention_mode(v);
  else if (key == "train.rollout") t.rollout = dynamics::parse_rollout_form(v);
  else if (key == "train.reduction") t.reduction = parse_reduction(v);
  else if (key == "train.features") t.features = model::parse_feature_set(v);
  else if (key == "train.share_gat") t.share_gat = parse_bool(key, v);
  else if (key == "train.concat_own_embedding") t.concat_own_embedding = parse_bool(key, v);
  else if (key == "train.threads") t.threads = size();
  else if (key == "model.profile") t.dims = model::parse_profile(v);
  else if (key == "model.heads") t.dims.heads = size();
  else if (key == "model.gat1") t.dims.gat1 = size();
  else if (key == "model.gat2") t.dims.gat2 = size();
  else if (key == "model.gru_hidden") t.dims.gru_hidden = size();
  else if (key == "model.mlp_hidden") t.dims.mlp_hidden = size();
  else if (key == "eval.bootstrap") c.eval.bootstrap = size();
  else if (key == "eval.seed") c.eval.seed = parse_unsigned(key, v);
  else if (key == "synth.nodes") c.synth.nodes = size();
  else if (key == "synth.population_min") c.synth.population_min = real();
  else if (key == "synth.population_max") c.synth.population_max = real();
  else if (key == "synth.days") s.days = size();
  else if (key == "synth.beta_min") s.beta_min = real();
  else if (key == "synth.beta_max") s.beta_max = real();
  else if (key == "synth.gamma_min") s.gamma_min = real();
  else if (key == "synth.gamma_max") s.gamma_max = real();
  else if (key == "synth.coupling") s.coupling = real();
  else if (key == "synth.noise") s.noise = real();
  else if (key == "synth.seed_nodes") s.seed_nodes = size();
  else if (key == "synth.initial_infected") s.initial_infected = real();
  else if (key == "synth.seed") s.seed = parse_unsigned(key, v);
  else if (key == "synth.start_date") s.start_date = std::string(v);
  else throw ConfigError("unknown configuration key '" + std::string(key) + "'");
}

RunConfig parse_config(std::string_view text, std::string_view source,
                       const std::filesystem::path& base_dir) {
  RunConfig config;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t number = 0;
  try {
    while (std::getline(in, line)) {
      ++number;
      std::string_view view = line;
      if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
      view = trim(view);
      if (view.empty()) continue;
      const auto eq = view.find('=');
      if (eq == std::string_view::npos) throw ConfigError("expected 'key = value'");
      const auto key = trim(view.substr(0, eq));
      if (key.empty()) throw ConfigError("empty key");
      apply_setting(config, key, trim(view.substr(eq + 1)), base_dir);
    }
  } catch (const Error& e) {
    throw ConfigError(std::string(source) + ":" + std::to_string(number) + ": " + e.what());
  }
  return config;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.string(), path.parent_path());
}

std::vector<std::pair<std::string, std::string>> model_settings(const RunConfig& c) {
  const auto& t = c.train;
  auto num = [](double v) { return csv::format_double(v); };
  auto uint = [](std::uint64_t v) { return std::to_string(v); };
  auto flag = [](bool b) { return std::string(b ? "true" : "false"); };
  std::vector<std::pair<std::string, std::string>> out{
      {"graph.alpha", num(c.graph.edge.alpha)},
      {"graph.beta", num(c.graph.edge.beta)},
      {"graph.r", num(c.graph.edge.r)},
      {"graph.tau", c.graph.tau ? num(*c.graph.tau) : "auto"},
      {"train.input_window", uint(t.input_window)},
      {"train.horizon", uint(t.horizon)},
      {"train.epochs", uint(t.epochs)},
      {"train.learning_rate", num(t.learning_rate)},
      {"train.seed", uint(t.seed)},
      {"train.mode", std::string(training::to_string(t.mode))},
      {"train.attention", std::string(model::to_string(t.attention))},
      {"train.rollout", std::string(dynamics::to_string(t.rollout))},
      {"train.reduction", t.reduction == dynamics::LossReduction::sum ? "sum" : "mean"},
      {"train.features", std::string(model::to_string(t.features))},
      {"train.share_gat", flag(t.share_gat)},
      {"train.concat_own_embedding", flag(t.concat_own_embedding)},
      {"model.heads", uint(t.dims.heads)},
      {"model.gat1", uint(t.dims.gat1)},
      {"model.gat2", uint(t.dims.gat2)},
      {"model.gru_hidden", uint(t.dims.gru_hidden)},
      {"model.mlp_hidden", uint(t.dims.mlp_hidden)},
  };
  return out;
}

}  // namespace stan::cli
