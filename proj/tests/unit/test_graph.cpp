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

#include <doctest.h>

#include <cmath>
#include <fstream>
#include <numbers>
#include <queue>

#include "stan/common/error.hpp"
#include "stan/data/dataset.hpp"
#include "stan/graph/graph.hpp"
#include "test_util.hpp"

using namespace stan;
using namespace stan::graph;

namespace {

Location loc(std::string id, double lat, double lon, double pop) {
  Location l;
  l.id = std::move(id);
  l.name = l.id;
  l.latitude = lat;
  l.longitude = lon;
  l.population = pop;
  return l;
}

// Breadth-first search over pairs with w >= tau.
bool bfs_connected(const std::vector<double>& w, std::size_t n, double tau) {
  std::vector<bool> seen(n, false);
  std::queue<std::size_t> q;
  q.push(0);
  seen[0] = true;
  std::size_t count = 1;
  while (!q.empty()) {
    const auto i = q.front();
    q.pop();
    for (std::size_t j = 0; j < n; ++j) {
      if (!seen[j] && j != i && w[i * n + j] >= tau) {
        seen[j] = true;
        ++count;
        q.push(j);
      }
    }
  }
  return count == n;
}

}  // namespace

TEST_SUITE("graph") {

TEST_CASE("haversine distances") {
  const double one_degree = kEarthRadiusKm * std::numbers::pi / 180.0;
  CHECK(haversine_km({0, 0}, {0, 1}) == doctest::Approx(one_degree).epsilon(1e-12));
  CHECK(haversine_km({0, 0}, {1, 0}) == doctest::Approx(one_degree).epsilon(1e-12));
  CHECK(haversine_km({0, 0}, {0, 180}) == doctest::Approx(kEarthRadiusKm * std::numbers::pi).epsilon(1e-12));
  CHECK(haversine_km({12.5, -40}, {12.5, -40}) == 0.0);
  // 60 degrees of latitude shrink longitude arcs to cos(lat) at the equator
  // limit; compare against the spherical law of cosines instead.
  const double la = 60 * std::numbers::pi / 180, dl = 1 * std::numbers::pi / 180;
  const double c = std::acos(std::sin(la) * std::sin(la) + std::cos(la) * std::cos(la) * std::cos(dl));
  CHECK(haversine_km({60, 10}, {60, 11}) == doctest::Approx(kEarthRadiusKm * c).epsilon(1e-9));
  CHECK_THROWS_AS(haversine_km({91, 0}, {0, 0}), ValidationError);
}

TEST_CASE("edge weight formula") {
  const EdgeParams p;
  CHECK(edge_weight(1e4, 2e5, 12.0, p) ==
        doctest::Approx(std::pow(1e4, 0.35) * std::pow(2e5, 0.37) * std::exp(-0.4)).epsilon(1e-14));
  CHECK(edge_weight(1, 1, 0, p) == 1.0);
  CHECK_THROWS_AS(edge_weight(0.5, 1, 0, p), ValidationError);
  CHECK_THROWS_AS(edge_weight(1, 1, -1, p), ValidationError);
  CHECK_THROWS_AS(edge_weight(1, 1, 1, EdgeParams{0.35, 0.37, 0.0}), ConfigError);
}

TEST_CASE("graph weights are symmetric with self loops in the mask") {
  const auto nodes = data::synthetic_locations(8, 3);
  const auto g = build_graph(nodes, {});
  for (std::size_t i = 0; i < g.size(); ++i) {
    CHECK(g.adjacent(i, i));
    for (std::size_t j = 0; j < g.size(); ++j) {
      CHECK(g.weight(i, j) == g.weight(j, i));
      CHECK(g.adjacent(i, j) == g.adjacent(j, i));
    }
  }
}

TEST_CASE("automatic threshold is the largest one keeping the graph connected") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    CAPTURE(seed);
    const std::size_t n = 3 + seed % 9;
    const auto g = build_graph(data::synthetic_locations(n, seed), {});
    CHECK(g.components() == 1);
    const auto& w = g.weights();
    double oracle = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        if (bfs_connected(w, n, w[i * n + j])) oracle = std::max(oracle, w[i * n + j]);
      }
    }
    CHECK(g.threshold() == oracle);
  }
}

TEST_CASE("explicit threshold may disconnect the graph") {
  const auto g = build_graph({loc("a", 0, 0, 100), loc("b", 0, 0.1, 100), loc("c", 40, 40, 100)},
                             GraphOptions{EdgeParams{}, 1e-3, std::nullopt});
  CHECK(g.adjacent(0, 1));
  CHECK_FALSE(g.adjacent(0, 2));
  CHECK(g.components() == 2);
}

TEST_CASE("distance override replaces haversine") {
  const std::vector<Location> nodes{loc("a", 0, 0, 100), loc("b", 50, 50, 100)};
  GraphOptions opt;
  opt.distances = std::vector<double>{0, 30, 30, 0};
  const auto g = build_graph(nodes, opt);
  CHECK(g.weight(0, 1) == doctest::Approx(std::pow(100, 0.72) * std::exp(-1.0)).epsilon(1e-14));
  opt.distances = std::vector<double>{0, 1, 1};
  CHECK_THROWS_AS(build_graph(nodes, opt), DimensionError);
}

TEST_CASE("distance csv loader") {
  const auto dir = testing::scratch_dir("graph_dist");
  const std::vector<Location> nodes{loc("a", 0, 0, 100), loc("b", 1, 1, 100), loc("c", 2, 2, 100)};
  {
    std::ofstream(dir / "d.csv") << "from_id,to_id,km\na,b,5\nb,c,7\na,c,9\n";
  }
  const auto d = load_distance_csv((dir / "d.csv").string(), nodes);
  CHECK(d == std::vector<double>{0, 5, 9, 5, 0, 7, 9, 7, 0});
  {
    std::ofstream(dir / "e.csv") << "from_id,to_id,km\na,b,5\n";
  }
  CHECK_THROWS_AS(load_distance_csv((dir / "e.csv").string(), nodes), ValidationError);
  {
    std::ofstream(dir / "f.csv") << "from_id,to_id,km\na,zz,5\n";
  }
  CHECK_THROWS_AS(load_distance_csv((dir / "f.csv").string(), nodes), ValidationError);
}

TEST_CASE("duplicate ids and bad coordinates are rejected") {
  CHECK_THROWS_AS(build_graph({loc("a", 0, 0, 10), loc("a", 1, 1, 10)}, {}), ValidationError);
  CHECK_THROWS_AS(build_graph({loc("a", 0, 200, 10)}, {}), ValidationError);
  CHECK_THROWS_AS(build_graph({loc("a", 0, 0, 0.5)}, {}), ValidationError);
  CHECK_THROWS_AS(build_graph({}, {}), ValidationError);
}

TEST_CASE("feature window layout with zero padding before day 0") {
  const std::vector<double> statics{9, 8};
  // 3 days x 2 features
  const std::vector<double> dyn{1, 2, 3, 4, 5, 6};
  const auto w = feature_window(statics, dyn, 2, 1, 3);
  CHECK(w == std::vector<double>{9, 8, 0, 0, 9, 8, 1, 2, 9, 8, 3, 4});
  CHECK(feature_window(statics, dyn, 2, 2, 1) == std::vector<double>{9, 8, 5, 6});
  CHECK_THROWS_AS(feature_window(statics, dyn, 2, 3, 1), RangeError);
  CHECK_THROWS_AS(feature_window(statics, dyn, 2, 0, 0), RangeError);
  CHECK_THROWS_AS(feature_window(statics, dyn, 4, 0, 1), DimensionError);
}

}  // TEST_SUITE
