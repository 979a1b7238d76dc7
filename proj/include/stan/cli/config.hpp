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
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "stan/data/dataset.hpp"
#include "stan/graph/graph.hpp"
#include "stan/training/trainer.hpp"

namespace stan::cli {

struct DataSection {
  std::string cases;
  std::string statics;
  std::string dynamic;    // empty: no dynamic file
  std::string distances;  // empty: haversine
  std::optional<std::size_t> split_day;
  std::size_t recovered_lag = 14;
};

struct GraphSection {
  graph::EdgeParams edge;
  std::optional<double> tau;  // empty: largest threshold keeping the graph connected
};

struct EvalSection {
  std::size_t bootstrap = 1000;
  std::uint64_t seed = 0;
};

struct SynthSection {
  std::size_t nodes = 10;
  double population_min = 1.0e4;
  double population_max = 2.0e5;
  data::SynthConfig config;
};

struct RunConfig {
  DataSection data;
  GraphSection graph;
  training::TrainConfig train;
  EvalSection eval;
  SynthSection synth;
  std::string out = "out";

  // Sets the training, evaluation and synthesis seeds together.
  void set_seed(std::uint64_t seed);
};

// Flat `key = value` lines; `#` starts a comment. Relative paths are taken
// relative to `base_dir`. Unknown keys and malformed values raise ConfigError
// naming the line.
RunConfig parse_config(std::string_view text, std::string_view source,
                       const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);

// Applies one assignment to an existing configuration; relative paths are
// joined onto `base_dir`.
void apply_setting(RunConfig& config, std::string_view key, std::string_view value,
                   const std::filesystem::path& base_dir = {});

// Canonical key = value rendering of the model-defining settings (training,
// graph and profile keys), one per line, fixed order.
std::vector<std::pair<std::string, std::string>> model_settings(const RunConfig& config);

}  // namespace stan::cli
