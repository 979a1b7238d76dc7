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

#include "stan/autodiff/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace stan::ad {
namespace {

double evaluate(const LossBuilder& build, const std::vector<Tensor>& params) {
  Tape tape;
  std::vector<Var> leaves;
  for (std::size_t i = 0; i < params.size(); ++i) leaves.push_back(tape.parameter(i, params[i]));
  return build(tape, leaves).value().item();
}

}  // namespace

GradCheckResult finite_difference_check(const LossBuilder& build, std::vector<Tensor> params,
                                        double eps) {
  Tape tape;
  std::vector<Var> leaves;
  for (std::size_t i = 0; i < params.size(); ++i) leaves.push_back(tape.parameter(i, params[i]));
  const Var loss = build(tape, leaves);
  const GradientMap grads = tape.backward(loss);

  GradCheckResult result;
  for (std::size_t p = 0; p < params.size(); ++p) {
    const Tensor& g = grads.at(p);
    for (std::size_t k = 0; k < params[p].size(); ++k) {
      const double saved = params[p][k];
      params[p][k] = saved + eps;
      const double up = evaluate(build, params);
      params[p][k] = saved - eps;
      const double down = evaluate(build, params);
      params[p][k] = saved;
      const double fd = (up - down) / (2.0 * eps);
      if (!std::isfinite(fd) || !std::isfinite(g[k])) {
        result.finite = false;
        result.worst_param = p;
        result.worst_index = k;
        continue;
      }
      const double abs_err = std::abs(fd - g[k]);
      const double rel = abs_err / std::max({1.0, std::abs(fd), std::abs(g[k])});
      result.max_abs_error = std::max(result.max_abs_error, abs_err);
      if (rel > result.max_rel_error) {
        result.max_rel_error = rel;
        result.worst_param = p;
        result.worst_index = k;
      }
    }
  }
  return result;
}

}  // namespace stan::ad
