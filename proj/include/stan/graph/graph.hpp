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

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace stan::graph {

inline constexpr double kEarthRadiusKm = 6371.0;

// Static node features: latitude, longitude, population, density.
inline constexpr std::size_t kStaticFeatures = 4;
// Dynamic node features: active cases, cumulative cases, hospitalizations,
// ICU stays, then 48 diagnosis-code counts.
inline constexpr std::size_t kDiagnosisCodes = 48;
inline constexpr std::size_t kDynamicFeatures = 4 + kDiagnosisCodes;

struct GeoPoint {
  double latitude = 0.0;
  double longitude = 0.0;
};

struct Location {
  std::string id;
  std::string name;
  double latitude = 0.0;
  double longitude = 0.0;
  double population = 1.0;
  double density = 0.0;

  GeoPoint point() const { return {latitude, longitude}; }
  std::array<double, kStaticFeatures> static_features() const {
    return {latitude, longitude, population, density};
  }
};

// Throws ValidationError on out-of-range coordinates, population < 1 or
// negative density.
void validate(const Location& loc);

double haversine_km(GeoPoint a, GeoPoint b);

struct EdgeParams {
  double alpha = 0.35;
  double beta = 0.37;
  double r = 30.0;  // km
};

// p_i^alpha * p_j^beta * exp(-d / r)
double edge_weight(double p_i, double p_j, double distance_km, const EdgeParams& params);

struct GraphOptions {
  EdgeParams edge;
  // Mask threshold tau. Unset selects the largest threshold that keeps the
  // masked graph connected.
  std::optional<double> threshold;
  // Row-major N x N km matrix overriding the haversine distances.
  std::optional<std::vector<double>> distances;
};

class LocationGraph {
 public:
  LocationGraph() = default;
  LocationGraph(std::vector<Location> nodes, std::vector<double> weights, double threshold);

  std::size_t size() const noexcept { return nodes_.size(); }
  const std::vector<Location>& nodes() const noexcept { return nodes_; }
  const Location& node(std::size_t i) const { return nodes_.at(i); }
  std::optional<std::size_t> index_of(const std::string& id) const;

  double weight(std::size_t i, std::size_t j) const { return weights_[i * size() + j]; }
  bool adjacent(std::size_t i, std::size_t j) const { return mask_[i * size() + j] != 0; }
  const std::vector<double>& weights() const noexcept { return weights_; }
  const std::vector<std::uint8_t>& mask() const noexcept { return mask_; }
  double threshold() const noexcept { return threshold_; }

  // Number of connected components of the masked adjacency.
  std::size_t components() const;

 private:
  std::vector<Location> nodes_;
  std::vector<double> weights_;
  std::vector<std::uint8_t> mask_;
  double threshold_ = 0.0;
};

LocationGraph build_graph(std::vector<Location> locations, const GraphOptions& options);

// Largest off-diagonal weight tau such that {w_ij >= tau} (plus self-loops)
// is connected. Zero for a single node.
double connectivity_threshold(std::span<const double> weights, std::size_t n);

// Reads `from_id,to_id,km` rows into a symmetric N x N matrix ordered like
// `locations`. Every unordered pair must be present; the diagonal is zero.
std::vector<double> load_distance_csv(const std::string& path,
                                      const std::vector<Location>& locations);

// Concatenated [static ; dynamic] blocks for days t-window+1 .. t.
// `dynamic` is the location's row-major days x feature_count series. Days
// before 0 contribute zero dynamic entries; static entries are repeated in
// every block.
std::vector<double> feature_window(std::span<const double> statics,
                                   std::span<const double> dynamic, std::size_t feature_count,
                                   std::size_t t, std::size_t window);

}  // namespace stan::graph
