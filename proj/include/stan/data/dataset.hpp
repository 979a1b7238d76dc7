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
#include <utility>
#include <vector>

#include "stan/graph/graph.hpp"

namespace stan::data {

// Dynamic column layout.
inline constexpr std::size_t kColActive = 0;
inline constexpr std::size_t kColCumulative = 1;
inline constexpr std::size_t kColHospital = 2;
inline constexpr std::size_t kColIcu = 3;
inline constexpr std::size_t kColFirstCode = 4;

// Per-location daily series on a shared date axis.
struct EpiDataset {
  std::vector<graph::Location> locations;
  std::vector<std::string> dates;  // ISO-8601, one per day
  std::size_t feature_count = graph::kDynamicFeatures;
  std::vector<double> infected;   // N x T, active cases
  std::vector<double> recovered;  // N x T
  std::vector<double> dynamic;    // N x T x feature_count; column 0 mirrors infected
  bool recovered_is_proxy = false;

  std::size_t size() const noexcept { return locations.size(); }
  std::size_t days() const noexcept { return dates.size(); }

  double I(std::size_t loc, std::size_t t) const { return infected[loc * days() + t]; }
  double R(std::size_t loc, std::size_t t) const { return recovered[loc * days() + t]; }
  std::span<const double> infected_series(std::size_t loc) const {
    return {infected.data() + loc * days(), days()};
  }
  std::span<const double> recovered_series(std::size_t loc) const {
    return {recovered.data() + loc * days(), days()};
  }
  // days x feature_count block of one location.
  std::span<const double> dynamic_series(std::size_t loc) const {
    return {dynamic.data() + loc * days() * feature_count, days() * feature_count};
  }
  double feature(std::size_t loc, std::size_t t, std::size_t f) const {
    return dynamic[(loc * days() + t) * feature_count + f];
  }

  // Throws ValidationError when shapes disagree, a count is negative or the
  // active column does not mirror `infected`.
  void validate() const;
};

// Location-major concatenation of [static ; dynamic] blocks (see
// graph::feature_window).
std::vector<double> feature_window(const EpiDataset& ds, std::size_t loc, std::size_t t,
                                   std::size_t window);

struct RecoveredProxy {
  std::size_t lag_days = 14;
};

// cases:   date,location_id,confirmed,recovered,deaths[,active]
// static:  location_id,name,latitude,longitude,population,density
// dynamic: date,location_id,hospitalizations,icu,code_01,...
// An empty recovered field switches the whole dataset to the lagged
// confirmed-case proxy.
EpiDataset load_dataset(const std::string& cases_path, const std::string& static_path,
                        const std::optional<std::string>& dynamic_path,
                        const RecoveredProxy& proxy = {});

struct DatasetFiles {
  std::string cases;
  std::string statics;
  std::string dynamic;
};

DatasetFiles dataset_paths(const std::string& directory);

// Writes the three CSVs; cases carry the active column so that a reload
// reproduces every matrix exactly.
void write_dataset(const EpiDataset& ds, const DatasetFiles& files);

std::pair<EpiDataset, EpiDataset> split_dataset(const EpiDataset& ds, std::size_t split_day);

// First `days` days.
EpiDataset truncate(const EpiDataset& ds, std::size_t days);

std::vector<std::string> date_axis(const std::string& start_iso, std::size_t days);

struct SynthConfig {
  std::size_t days = 120;
  double beta_min = 0.25;
  double beta_max = 0.45;
  double gamma_min = 0.08;
  double gamma_max = 0.14;
  double coupling = 0.05;
  double noise = 0.05;
  std::size_t seed_nodes = 2;
  double initial_infected = 20.0;
  std::uint64_t seed = 1;
  std::string start_date = "2020-03-22";
};

void validate(const SynthConfig& config);

struct SynthTruth {
  std::vector<double> beta;
  std::vector<double> gamma;
  std::vector<double> susceptible;  // N x T
};

// Coupled daily SIR over the graph's nodes. Node i sees force of infection
//   beta_i I_i / N_i + coupling * sum_{j != i} wbar_ij I_j / N_j
// with wbar the row-normalised off-diagonal edge weights.
EpiDataset simulate_metapopulation(const SynthConfig& config, const graph::LocationGraph& graph,
                                   SynthTruth* truth = nullptr);

// Deterministic pseudo-geography for synthetic runs: N locations scattered
// over a 2-degree box with log-uniform populations.
std::vector<graph::Location> synthetic_locations(std::size_t n, std::uint64_t seed,
                                                double population_min = 1.0e4,
                                                double population_max = 2.0e5);

}  // namespace stan::data
