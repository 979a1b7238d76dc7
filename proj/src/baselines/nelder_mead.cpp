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

#include "stan/baselines/nelder_mead.hpp"

#include <algorithm>
#include <cmath>

#include "stan/common/error.hpp"

namespace stan::baselines {
namespace {

struct Vertex {
  std::vector<double> x;
  double f;
};

}  // namespace

NelderMeadResult nelder_mead(const Objective& f, std::vector<double> start,
                             const NelderMeadOptions& options) {
  const std::size_t n = start.size();
  if (n == 0) throw ContractError("nelder_mead: empty start point");
  NelderMeadResult result;
  auto eval = [&](const std::vector<double>& x) {
    ++result.evaluations;
    const double v = f(x);
    return std::isnan(v) ? INFINITY : v;
  };

  std::vector<Vertex> simplex;
  simplex.push_back({start, eval(start)});
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> x = start;
    x[i] += options.initial_step;
    simplex.push_back({x, eval(x)});
  }

  auto blend = [n](const std::vector<double>& c, const std::vector<double>& w, double t) {
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = c[i] + t * (w[i] - c[i]);
    return out;
  };

  while (result.evaluations < options.max_evaluations) {
    std::stable_sort(simplex.begin(), simplex.end(),
                     [](const Vertex& a, const Vertex& b) { return a.f < b.f; });
    const double spread = simplex.back().f - simplex.front().f;
    double diameter = 0.0;
    for (std::size_t v = 1; v <= n; ++v) {
      for (std::size_t i = 0; i < n; ++i) {
        diameter = std::max(diameter, std::abs(simplex[v].x[i] - simplex[0].x[i]));
      }
    }
    if (spread <= options.f_tolerance * std::max(1.0, std::abs(simplex.front().f)) &&
        diameter <= options.x_tolerance) {
      result.converged = true;
      break;
    }
    if (diameter <= options.x_tolerance * 1e-3) {
      result.converged = true;
      break;
    }

    std::vector<double> centroid(n, 0.0);
    for (std::size_t v = 0; v < n; ++v) {
      for (std::size_t i = 0; i < n; ++i) centroid[i] += simplex[v].x[i] / static_cast<double>(n);
    }
    Vertex& worst = simplex.back();
    const auto xr = blend(centroid, worst.x, -1.0);
    const double fr = eval(xr);
    if (fr < simplex.front().f) {
      const auto xe = blend(centroid, worst.x, -2.0);
      const double fe = eval(xe);
      worst = fe < fr ? Vertex{xe, fe} : Vertex{xr, fr};
      continue;
    }
    if (fr < simplex[n - 1].f) {
      worst = {xr, fr};
      continue;
    }
    // Outside contraction when the reflection beat the worst point, inside otherwise.
    const bool outside = fr < worst.f;
    const auto xc = outside ? blend(centroid, xr, 0.5) : blend(centroid, worst.x, 0.5);
    const double fc = eval(xc);
    if (fc < (outside ? fr : worst.f)) {
      worst = {xc, fc};
      continue;
    }
    for (std::size_t v = 1; v <= n; ++v) {
      simplex[v].x = blend(simplex[0].x, simplex[v].x, 0.5);
      simplex[v].f = eval(simplex[v].x);
    }
  }
  const auto best = std::min_element(simplex.begin(), simplex.end(),
                                     [](const Vertex& a, const Vertex& b) { return a.f < b.f; });
  result.x = best->x;
  result.value = best->f;
  return result;
}

}  // namespace stan::baselines
