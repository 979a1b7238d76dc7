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

#include "stan/eval/metrics.hpp"

#include <cmath>
#include <fstream>

#include "stan/common/csv.hpp"
#include "stan/common/error.hpp"

namespace stan::eval {
namespace {

void check_pair(std::span<const double> a, std::span<const double> b, const char* what) {
  if (a.size() != b.size()) {
    throw DimensionError(std::string(what) + ": lengths " + std::to_string(a.size()) + " and " +
                         std::to_string(b.size()) + " differ");
  }
}

}  // namespace

ErrorMetrics mse_mae(std::span<const double> pred, std::span<const double> truth) {
  check_pair(pred, truth, "mse_mae");
  if (pred.empty()) throw ContractError("mse_mae: empty input");
  ErrorMetrics m;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double e = pred[i] - truth[i];
    m.mse += e * e;
    m.mae += std::abs(e);
  }
  const auto n = static_cast<double>(pred.size());
  m.mse /= n;
  m.mae /= n;
  return m;
}

double ccc(std::span<const double> x, std::span<const double> y) {
  check_pair(x, y, "ccc");
  if (x.size() < 2) throw ContractError("ccc: need at least 2 points");
  const auto n = static_cast<double>(x.size());
  const double mx = mean(x), my = mean(y);
  double vx = 0.0, vy = 0.0, cov = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    vx += (x[i] - mx) * (x[i] - mx);
    vy += (y[i] - my) * (y[i] - my);
    cov += (x[i] - mx) * (y[i] - my);
  }
  vx /= n;
  vy /= n;
  cov /= n;
  if (vx == 0.0 || vy == 0.0) throw DegenerateError("ccc: undefined for a constant series");
  // 2 rho sx sy equals twice the covariance.
  return 2.0 * cov / (vx + vy + (mx - my) * (mx - my));
}

LocationScore score_location(std::string location_id, std::span<const double> pred,
                             std::span<const double> truth) {
  LocationScore s;
  s.location_id = std::move(location_id);
  const auto m = mse_mae(pred, truth);
  s.points = pred.size();
  s.mse = m.mse;
  s.mae = m.mae;
  if (pred.size() >= 2) {
    try {
      s.ccc = ccc(pred, truth);
    } catch (const DegenerateError&) {
    }
  }
  return s;
}

const MetricEntry* MetricReport::find(const std::string& name) const {
  for (const auto& e : entries) {
    if (e.name == name) return &e;
  }
  return nullptr;
}

MetricReport build_report(std::span<const LocationScore> scores, std::size_t resamples,
                          std::uint64_t seed) {
  if (scores.empty()) throw ContractError("build_report: no location scores");
  MetricReport report;
  report.locations = scores.size();
  std::vector<double> mse, mae, concord;
  for (const auto& s : scores) {
    report.points += s.points;
    mse.push_back(s.mse);
    mae.push_back(s.mae);
    if (s.ccc) concord.push_back(*s.ccc);
  }
  // Same seed for every metric, so MSE and MAE intervals share their resamples.
  auto entry = [&](const char* name, const std::vector<double>& values) {
    const Interval ci = bootstrap_ci(values, resamples, seed);
    report.entries.push_back({name, mean(values), ci.lo, ci.hi, values.size()});
  };
  entry("mse", mse);
  entry("mae", mae);
  if (!concord.empty()) entry("ccc", concord);
  return report;
}

void write_metrics_csv(const MetricReport& report, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "metric,point,lo,hi\n";
  for (const auto& e : report.entries) {
    out << e.name << ',' << csv::format_double(e.point) << ',' << csv::format_double(e.lo) << ','
        << csv::format_double(e.hi) << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace stan::eval
