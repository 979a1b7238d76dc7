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
#include <vector>

#include "stan/autodiff/tape.hpp"

namespace stan::ad {

// Builds a scalar loss from parameter leaves placed on a fresh tape.
using LossBuilder = std::function<Var(Tape&, const std::vector<Var>&)>;

struct GradCheckResult {
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  bool finite = true;
  std::size_t worst_param = 0;
  std::size_t worst_index = 0;
};

// Central differences against backward(), per coordinate:
// |g_fd - g_ad| / max(1, |g_fd|, |g_ad|).
GradCheckResult finite_difference_check(const LossBuilder& build, std::vector<Tensor> params,
                                        double eps = 1e-6);

}  // namespace stan::ad
