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
#include <exception>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "stan/baselines/compartmental.hpp"
#include "stan/cli/archive.hpp"
#include "stan/cli/config.hpp"
#include "stan/data/dataset.hpp"
#include "stan/graph/graph.hpp"
#include "stan/training/trainer.hpp"

namespace stan::cli {

// 0 ok, 1 usage/config/validation, 2 I/O or parse, 3 infeasible schedule,
// 4 contract mismatch, 5 alignment failure.
int exit_code_for(const std::exception& e);

data::EpiDataset load_run_dataset(const RunConfig& config);
graph::LocationGraph make_graph(const RunConfig& config, std::vector<graph::Location> locations);

// Days [0, split_day) when a split is configured, else the whole dataset.
data::EpiDataset training_span(const RunConfig& config, const data::EpiDataset& ds);

// Origins split_day - 1 .. T - horizon - 1 (rolling evaluation over the test span).
std::vector<std::size_t> test_origins(const RunConfig& config, const data::EpiDataset& ds,
                                      std::size_t horizon);

// One forecast row; `origin` is the date of the last observed day.
struct ForecastRow {
  std::string origin;
  std::string location_id;
  std::size_t day_offset = 0;
  double delta_infected = 0.0;
  double delta_recovered = 0.0;
  double total_infected = 0.0;
};

// `location_id,day_offset,delta_I,delta_R,total_I`, with a leading `origin`
// column when `with_origin` is set.
void write_forecast_csv(const std::vector<ForecastRow>& rows, bool with_origin,
                        const std::filesystem::path& path);
std::vector<ForecastRow> read_forecast_csv(const std::filesystem::path& path,
                                           const std::string& default_origin);

std::vector<ForecastRow> forecast_rows(const std::vector<training::Forecast>& forecasts,
                                       const std::string& origin);

std::filesystem::path cmd_simulate(const RunConfig& config);

struct TrainOutputs {
  std::filesystem::path archive;
  std::filesystem::path history;
};
TrainOutputs cmd_train(const RunConfig& config);

struct PredictOptions {
  std::filesystem::path archive;  // empty: <out>/model.stan
  std::optional<std::size_t> horizon;
  bool rolling = false;
};
std::filesystem::path cmd_predict(const RunConfig& config, const PredictOptions& options);

enum class BaselineKind { sir, seir, persistence };
BaselineKind parse_baseline(const std::string& text);
std::string to_string(BaselineKind kind);

// Where compartmental forecasts start: the fitted trajectory's own state at
// the origin (the model is fitted once and never sees later data), or the
// observed I and R at the origin.
enum class BaselineAnchor { fitted, observed };
BaselineAnchor parse_anchor(const std::string& text);

struct BaselineOptions {
  std::vector<BaselineKind> kinds{BaselineKind::sir, BaselineKind::persistence};
  BaselineAnchor anchor = BaselineAnchor::fitted;
  std::optional<std::size_t> horizon;  // default train.horizon
  bool rolling = false;
};
// Writes forecast_<kind>.csv for each kind and baseline_fits.csv.
std::vector<std::filesystem::path> cmd_fit_baseline(const RunConfig& config,
                                                    const BaselineOptions& options);

struct EvaluateOptions {
  std::vector<std::pair<std::string, std::filesystem::path>> forecasts;  // model name, file
  std::optional<std::string> origin;  // for files without an origin column
};
// metrics_<model>_h<L>.csv per model and ttest.csv for every model pair.
std::vector<std::filesystem::path> cmd_evaluate(const RunConfig& config,
                                                const EvaluateOptions& options);

int run(int argc, char** argv);

}  // namespace stan::cli
