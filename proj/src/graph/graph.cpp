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

#include "stan/graph/graph.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <set>
#include <unordered_map>

#include "stan/common/csv.hpp"
#include "stan/common/error.hpp"

namespace stan::graph {
namespace {

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  void unite(std::size_t a, std::size_t b) { parent_[find(a)] = find(b); }

 private:
  std::vector<std::size_t> parent_;
};

bool connected_at(std::span<const double> w, std::size_t n, double tau) {
  DisjointSets sets(n);
  std::size_t groups = n;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (w[i * n + j] >= tau && sets.find(i) != sets.find(j)) {
        sets.unite(i, j);
        --groups;
      }
    }
  }
  return groups == 1;
}

void check_point(GeoPoint p) {
  if (!(p.latitude >= -90.0 && p.latitude <= 90.0) ||
      !(p.longitude >= -180.0 && p.longitude <= 180.0)) {
    throw ValidationError("coordinates out of range: (" + std::to_string(p.latitude) + ", " +
                          std::to_string(p.longitude) + ")");
  }
}

}  // namespace

void validate(const Location& loc) {
  if (loc.id.empty()) throw ValidationError("location with empty id");
  check_point(loc.point());
  if (!(loc.population >= 1.0)) {
    throw ValidationError("location '" + loc.id + "': population must be >= 1");
  }
  if (!(loc.density >= 0.0)) {
    throw ValidationError("location '" + loc.id + "': density must be >= 0");
  }
}

double haversine_km(GeoPoint a, GeoPoint b) {
  check_point(a);
  check_point(b);
  constexpr double rad = std::numbers::pi / 180.0;
  const double dlat = (b.latitude - a.latitude) * rad;
  const double dlon = (b.longitude - a.longitude) * rad;
  const double s1 = std::sin(dlat / 2.0);
  const double s2 = std::sin(dlon / 2.0);
  const double h = s1 * s1 + std::cos(a.latitude * rad) * std::cos(b.latitude * rad) * s2 * s2;
  return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(h)));
}

double edge_weight(double p_i, double p_j, double distance_km, const EdgeParams& params) {
  if (!(params.r > 0.0)) throw ConfigError("edge_weight: r must be positive");
  if (!(p_i >= 1.0) || !(p_j >= 1.0)) throw ValidationError("edge_weight: populations must be >= 1");
  if (!(distance_km >= 0.0)) throw ValidationError("edge_weight: negative distance");
  return std::pow(p_i, params.alpha) * std::pow(p_j, params.beta) *
         std::exp(-distance_km / params.r);
}

LocationGraph::LocationGraph(std::vector<Location> nodes, std::vector<double> weights,
                             double threshold)
    : nodes_(std::move(nodes)), weights_(std::move(weights)), threshold_(threshold) {
  const std::size_t n = nodes_.size();
  if (weights_.size() != n * n) throw DimensionError("graph: weight matrix is not N x N");
  mask_.assign(n * n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      mask_[i * n + j] = (i == j || weights_[i * n + j] >= threshold_) ? 1 : 0;
    }
  }
}

std::optional<std::size_t> LocationGraph::index_of(const std::string& id) const {
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].id == id) return i;
  }
  return std::nullopt;
}

std::size_t LocationGraph::components() const {
  const std::size_t n = size();
  DisjointSets sets(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (adjacent(i, j)) sets.unite(i, j);
    }
  }
  std::set<std::size_t> roots;
  for (std::size_t i = 0; i < n; ++i) roots.insert(sets.find(i));
  return roots.size();
}

double connectivity_threshold(std::span<const double> weights, std::size_t n) {
  if (n <= 1) return 0.0;
  std::vector<double> candidates;
  candidates.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) candidates.push_back(weights[i * n + j]);
  }
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
  // Connectivity is monotone in tau: find the last candidate that still connects.
  std::size_t lo = 0, hi = candidates.size() - 1;
  while (lo < hi) {
    const std::size_t mid = (lo + hi + 1) / 2;
    if (connected_at(weights, n, candidates[mid])) {
      lo = mid;
    } else {
      hi = mid - 1;
    }
  }
  return candidates[lo];
}

LocationGraph build_graph(std::vector<Location> locations, const GraphOptions& options) {
  if (locations.empty()) throw ValidationError("build_graph: no locations");
  std::set<std::string> ids;
  for (const auto& loc : locations) {
    validate(loc);
    if (!ids.insert(loc.id).second) throw ValidationError("build_graph: duplicate id '" + loc.id + "'");
  }
  if (!(options.edge.r > 0.0)) throw ConfigError("build_graph: r must be positive");
  const std::size_t n = locations.size();
  if (options.distances && options.distances->size() != n * n) {
    throw DimensionError("build_graph: distance matrix is not N x N");
  }
  std::vector<double> w(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      const double d = options.distances
                           ? (*options.distances)[i * n + j]
                           : haversine_km(locations[i].point(), locations[j].point());
      // Evaluated once per unordered pair and mirrored, so w is exactly
      // symmetric even when alpha != beta.
      const double wij = edge_weight(locations[i].population, locations[j].population, d,
                                     options.edge);
      w[i * n + j] = wij;
      w[j * n + i] = wij;
    }
  }
  const double tau = options.threshold ? *options.threshold : connectivity_threshold(w, n);
  return LocationGraph(std::move(locations), std::move(w), tau);
}

std::vector<double> load_distance_csv(const std::string& path,
                                      const std::vector<Location>& locations) {
  const auto table = csv::read(path);
  const auto from = table.require("from_id", path);
  const auto to = table.require("to_id", path);
  const auto km = table.require("km", path);
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < locations.size(); ++i) index[locations[i].id] = i;
  const std::size_t n = locations.size();
  std::vector<double> d(n * n, -1.0);
  for (std::size_t i = 0; i < n; ++i) d[i * n + i] = 0.0;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::string where = path + ":" + std::to_string(table.line_numbers[r]);
    auto a = index.find(row[from]);
    auto b = index.find(row[to]);
    if (a == index.end() || b == index.end()) {
      throw ValidationError(where + ": unknown location id");
    }
    const double v = csv::parse_double(row[km], where);
    if (!(v >= 0.0)) throw ValidationError(where + ": negative distance");
    d[a->second * n + b->second] = v;
    d[b->second * n + a->second] = v;
  }
  for (std::size_t i = 0; i < n * n; ++i) {
    if (d[i] < 0.0) {
      throw ValidationError(path + ": missing distance for pair (" + locations[i / n].id + ", " +
                            locations[i % n].id + ")");
    }
  }
  return d;
}

std::vector<double> feature_window(std::span<const double> statics,
                                   std::span<const double> dynamic, std::size_t feature_count,
                                   std::size_t t, std::size_t window) {
  if (window == 0) throw RangeError("feature_window: window length must be >= 1");
  if (feature_count == 0 || dynamic.size() % feature_count != 0) {
    throw DimensionError("feature_window: dynamic series is not a days x features matrix");
  }
  const std::size_t days = dynamic.size() / feature_count;
  if (t >= days) {
    throw RangeError("feature_window: day " + std::to_string(t) + " beyond series end " +
                     std::to_string(days));
  }
  const std::size_t block = statics.size() + feature_count;
  std::vector<double> out(window * block, 0.0);
  for (std::size_t b = 0; b < window; ++b) {
    double* dst = out.data() + b * block;
    std::copy(statics.begin(), statics.end(), dst);
    // Block b holds day t - (window - 1) + b.
    const std::size_t back = window - 1 - b;
    if (back <= t) {
      const std::size_t day = t - back;
      std::copy_n(dynamic.data() + day * feature_count, feature_count, dst + statics.size());
    }
  }
  return out;
}

}  // namespace stan::graph
