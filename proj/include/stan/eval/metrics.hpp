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
#include <span>
#include <string>
#include <vector>

#include "stan/eval/stats.hpp"

namespace stan::eval {

struct ErrorMetrics {
  double mse = 0.0;
  double mae = 0.0;
};

ErrorMetrics mse_mae(std::span<const double> pred, std::span<const double> truth);

// Lin's concordance correlation coefficient with population variances.
// Throws DegenerateError when either input is constant.
double ccc(std::span<const double> x, std::span<const double> y);

// Scores of one location over its forecast points.
struct LocationScore {
  std::string location_id;
  std::size_t points = 0;
  double mse = 0.0;
  double mae = 0.0;
  std::optional<double> ccc;  // empty when either series is constant
};

LocationScore score_location(std::string location_id, std::span<const double> pred,
                             std::span<const double> truth);

struct MetricEntry {
  std::string name;
  double point = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  std::size_t samples = 0;  // locations contributing
};

struct MetricReport {
  std::vector<MetricEntry> entries;  // mse, mae, ccc (when any location defines it)
  std::size_t locations = 0;
  std::size_t points = 0;

  const MetricEntry* find(const std::string& name) const;
};

// Point estimates are means over locations; intervals come from resampling
// locations.
MetricReport build_report(std::span<const LocationScore> scores, std::size_t resamples,
                          std::uint64_t seed);

// `metric,point,lo,hi`
void write_metrics_csv(const MetricReport& report, const std::filesystem::path& path);

}  // namespace stan::eval
