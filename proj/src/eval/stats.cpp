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

#include "stan/eval/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include <boost/math/distributions/students_t.hpp>

#include "stan/common/error.hpp"
#include "stan/common/random.hpp"

namespace stan::eval {

double percentile(std::vector<double> values, double p) {
  if (values.empty()) throw ContractError("percentile: no values");
  if (!(p >= 0.0 && p <= 1.0)) throw RangeError("percentile: p must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const double pos = p * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

double mean(std::span<const double> values) {
  if (values.empty()) throw ContractError("mean: no values");
  double s = 0.0;
  for (double v : values) s += v;
  return s / static_cast<double>(values.size());
}

std::vector<double> bootstrap_distribution(std::span<const double> scores, std::size_t resamples,
                                           std::uint64_t seed, const Aggregate& aggregate) {
  if (scores.empty()) throw ContractError("bootstrap: no scores");
  if (resamples == 0) throw ContractError("bootstrap: need at least one resample");
  std::vector<double> out(resamples);
  std::vector<double> draw(scores.size());
  for (std::size_t b = 0; b < resamples; ++b) {
    Rng rng(derive_seed(seed, b));
    std::uniform_int_distribution<std::size_t> pick(0, scores.size() - 1);
    for (double& d : draw) d = scores[pick(rng)];
    out[b] = aggregate(draw);
  }
  return out;
}

Interval bootstrap_ci(std::span<const double> scores, std::size_t resamples, std::uint64_t seed,
                      const Aggregate& aggregate) {
  const auto dist = bootstrap_distribution(scores, resamples, seed, aggregate);
  return {percentile(dist, 0.025), percentile(dist, 0.975)};
}

double student_t_two_sided(double t, double df) {
  if (!(df > 0.0)) throw RangeError("student_t: df must be positive");
  if (std::isnan(t)) throw NumericError("student_t: t is NaN");
  if (std::isinf(t)) return 0.0;
  const boost::math::students_t dist(df);
  return std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t))));
}

TTestResult paired_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw DimensionError("paired_t_test: lengths " + std::to_string(a.size()) + " and " +
                         std::to_string(b.size()) + " differ");
  }
  const std::size_t n = a.size();
  if (n < 2) throw ContractError("paired_t_test: need at least 2 pairs");
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = a[i] - b[i];
  const double m = mean(d);
  double ss = 0.0;
  for (double v : d) ss += (v - m) * (v - m);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  TTestResult r;
  r.df = static_cast<double>(n - 1);
  if (sd == 0.0) {
    if (m == 0.0) throw DegenerateError("paired_t_test: all differences are zero");
    r.t = std::copysign(std::numeric_limits<double>::infinity(), m);
    r.p = 0.0;
    return r;
  }
  r.t = m / (sd / std::sqrt(static_cast<double>(n)));
  r.p = student_t_two_sided(r.t, r.df);
  return r;
}

}  // namespace stan::eval
