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
#include <vector>

#include "stan/data/dataset.hpp"
#include "stan/graph/graph.hpp"
#include "stan/training/trainer.hpp"

namespace stan::acceptance {

// Synthetic forecasting benchmark: one seeded metapopulation dataset, a
// training span [0, split_day) and rolling origins split_day - 1 ..
// T - L_p - 1 over the test span.
struct BenchmarkSetup {
  std::size_t nodes = 10;
  double population_min = 1.0e4;
  double population_max = 2.0e5;
  std::uint64_t location_seed = 7;
  data::SynthConfig synth;
  std::size_t split_day = 100;
  training::TrainConfig train;
};

struct BenchmarkData {
  data::EpiDataset full;
  data::EpiDataset train;
  graph::LocationGraph graph;
  std::vector<std::size_t> origins;
};

BenchmarkData make_benchmark(const BenchmarkSetup& setup);

// Mean over nodes of each node's MSE on I over every (origin, offset).
struct BaselineScores {
  double persistence = 0.0;
  double sir = 0.0;           // fitted once, continued from its own trajectory
  double sir_observed = 0.0;  // same fit, restarted from the observed state at each origin
};

BaselineScores baseline_scores(const BenchmarkData& data, std::size_t horizon);

struct ModelScore {
  double mse = 0.0;
  double seconds = 0.0;
  double final_loss = 0.0;  // mean over nodes of the last recorded training loss
};

ModelScore model_score(const BenchmarkData& data, const training::TrainConfig& config);

}  // namespace stan::acceptance
