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
#include <functional>
#include <span>
#include <vector>

namespace stan::eval {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

// Linear interpolation between order statistics at zero-based index p (n - 1),
// p in [0, 1].
double percentile(std::vector<double> values, double p);

using Aggregate = std::function<double(std::span<const double>)>;

double mean(std::span<const double> values);

// B resamples of the scores with replacement, one aggregate each. Resample b
// draws from its own stream derived from (seed, b).
std::vector<double> bootstrap_distribution(std::span<const double> scores, std::size_t resamples,
                                           std::uint64_t seed, const Aggregate& aggregate = mean);

// 2.5th and 97.5th percentiles of the bootstrap distribution.
Interval bootstrap_ci(std::span<const double> scores, std::size_t resamples, std::uint64_t seed,
                      const Aggregate& aggregate = mean);

struct TTestResult {
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;
};

// Paired two-sided t test on d_i = a_i - b_i with the sample (n - 1) standard
// deviation. Identical differences give t = +-inf and p = 0 when their mean is
// nonzero; all-zero differences are a DegenerateError.
TTestResult paired_t_test(std::span<const double> a, std::span<const double> b);

// Two-sided tail probability of Student's t with df degrees of freedom.
double student_t_two_sided(double t, double df);

}  // namespace stan::eval
