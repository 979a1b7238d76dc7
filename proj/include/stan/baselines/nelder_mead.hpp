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
#include <functional>
#include <span>
#include <vector>

namespace stan::baselines {

struct NelderMeadOptions {
  std::size_t max_evaluations = 4000;
  double initial_step = 0.05;  // simplex edge along each axis
  double f_tolerance = 1e-14;  // spread of simplex values, relative to max(1, |f_best|)
  double x_tolerance = 1e-10;  // simplex diameter
};

struct NelderMeadResult {
  std::vector<double> x;
  double value = 0.0;
  std::size_t evaluations = 0;
  bool converged = false;
};

using Objective = std::function<double(std::span<const double>)>;

// Standard reflection/expansion/contraction/shrink coefficients 1, 2, 1/2, 1/2.
NelderMeadResult nelder_mead(const Objective& f, std::vector<double> start,
                             const NelderMeadOptions& options = {});

}  // namespace stan::baselines
