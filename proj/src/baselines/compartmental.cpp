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

#include "stan/baselines/compartmental.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "stan/baselines/nelder_mead.hpp"
#include "stan/common/error.hpp"

namespace stan::baselines {
namespace {

void check_rate(double v, const char* name) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw RangeError(std::string(name) + " must lie in [0, 1], got " + std::to_string(v));
  }
}

void check_count(double v, const char* name) {
  if (!(v >= 0.0) || !std::isfinite(v)) {
    throw ValidationError(std::string(name) + " must be a finite nonnegative count");
  }
}

Trajectory run(Family family, const SeirParams& p, double population, std::size_t days) {
  Trajectory tr;
  if (days == 0) return tr;
  CompartmentState s{population - p.i0 - p.r0 - p.e0, p.e0, p.i0, p.r0};
  auto push = [&](const CompartmentState& c) {
    tr.susceptible.push_back(c.susceptible);
    tr.exposed.push_back(c.exposed);
    tr.infected.push_back(c.infected);
    tr.recovered.push_back(c.recovered);
  };
  push(s);
  for (std::size_t t = 1; t < days; ++t) {
    s = family == Family::sir ? step_sir(s, p.beta, p.gamma, population)
                              : step_seir(s, p.beta, p.gamma, p.sigma, population);
    push(s);
  }
  return tr;
}

double sse(Family family, const SeirParams& p, std::span<const double> y, double population) {
  CompartmentState s{population - p.i0 - p.r0 - p.e0, p.e0, p.i0, p.r0};
  double total = 0.0;
  for (std::size_t t = 0; t < y.size(); ++t) {
    if (t > 0) {
      s = family == Family::sir ? step_sir(s, p.beta, p.gamma, population)
                                : step_seir(s, p.beta, p.gamma, p.sigma, population);
    }
    const double e = s.infected - y[t];
    total += e * e;
  }
  return total;
}

}  // namespace

Family parse_family(std::string_view text) {
  if (text == "sir" || text == "SIR") return Family::sir;
  if (text == "seir" || text == "SEIR") return Family::seir;
  throw ConfigError("unknown compartmental family '" + std::string(text) + "'");
}

std::string_view to_string(Family family) { return family == Family::sir ? "sir" : "seir"; }

void validate(const SirParams& p, double population) {
  check_rate(p.beta, "beta");
  check_rate(p.gamma, "gamma");
  check_count(p.i0, "I0");
  check_count(p.r0, "R0");
  if (p.i0 + p.r0 > population) throw ValidationError("I0 + R0 exceeds the population");
}

void validate(const SeirParams& p, double population) {
  check_rate(p.beta, "beta");
  check_rate(p.gamma, "gamma");
  check_rate(p.sigma, "sigma");
  check_count(p.i0, "I0");
  check_count(p.r0, "R0");
  check_count(p.e0, "E0");
  if (p.e0 + p.i0 + p.r0 > population) throw ValidationError("E0 + I0 + R0 exceeds the population");
}

CompartmentState Trajectory::at(std::size_t t) const {
  return {susceptible.at(t), exposed.at(t), infected.at(t), recovered.at(t)};
}

CompartmentState step_sir(const CompartmentState& s, double beta, double gamma, double population) {
  const double infections = std::clamp(beta * s.susceptible * s.infected / population, 0.0, s.susceptible);
  const double recoveries = std::clamp(gamma * s.infected, 0.0, s.infected);
  CompartmentState next = s;
  next.susceptible = s.susceptible - infections;
  next.infected = s.infected + infections - recoveries;
  next.recovered = s.recovered + recoveries;
  return next;
}

CompartmentState step_seir(const CompartmentState& s, double beta, double gamma, double sigma,
                           double population) {
  const double infections = std::clamp(beta * s.susceptible * s.infected / population, 0.0, s.susceptible);
  const double onsets = std::clamp(sigma * s.exposed, 0.0, s.exposed);
  const double recoveries = std::clamp(gamma * s.infected, 0.0, s.infected);
  CompartmentState next;
  next.susceptible = s.susceptible - infections;
  next.exposed = s.exposed + infections - onsets;
  next.infected = s.infected + onsets - recoveries;
  next.recovered = s.recovered + recoveries;
  return next;
}

Trajectory simulate_sir(const SirParams& p, double population, std::size_t days) {
  validate(p, population);
  return run(Family::sir, {p.beta, p.gamma, 0.0, p.i0, p.r0, 0.0}, population, days);
}

Trajectory simulate_seir(const SeirParams& p, double population, std::size_t days) {
  validate(p, population);
  return run(Family::seir, p, population, days);
}

Trajectory FitResult::trajectory(std::size_t days) const {
  Trajectory tr;
  const std::size_t fitted_days = days > offset ? days - offset : 0;
  const Trajectory tail = run(family, params, population, fitted_days);
  tr.susceptible.assign(std::min(days, offset), population);
  tr.exposed.assign(tr.susceptible.size(), 0.0);
  tr.infected.assign(tr.susceptible.size(), 0.0);
  tr.recovered.assign(tr.susceptible.size(), 0.0);
  tr.susceptible.insert(tr.susceptible.end(), tail.susceptible.begin(), tail.susceptible.end());
  tr.exposed.insert(tr.exposed.end(), tail.exposed.begin(), tail.exposed.end());
  tr.infected.insert(tr.infected.end(), tail.infected.begin(), tail.infected.end());
  tr.recovered.insert(tr.recovered.end(), tail.recovered.begin(), tail.recovered.end());
  return tr;
}

double fit_residual(Family family, const SeirParams& p, std::span<const double> infected,
                    double population, std::size_t offset) {
  if (offset > infected.size()) throw RangeError("fit_residual: offset past the series end");
  return sse(family, p, infected.subspan(offset), population);
}

FitResult fit_compartmental(std::span<const double> infected, double population, Family family,
                            std::optional<std::span<const double>> recovered) {
  if (infected.size() < 5) {
    throw ValidationError("fit_compartmental: need at least 5 observations, got " +
                          std::to_string(infected.size()));
  }
  if (!(population > 0.0)) throw ValidationError("fit_compartmental: population must be positive");
  if (recovered && recovered->size() != infected.size()) {
    throw DimensionError("fit_compartmental: recovered and infected lengths differ");
  }
  for (std::size_t t = 0; t < infected.size(); ++t) {
    if (!(infected[t] >= 0.0) || !std::isfinite(infected[t])) {
      throw ValidationError("fit_compartmental: invalid count at day " + std::to_string(t));
    }
  }
  const auto first = std::find_if(infected.begin(), infected.end(), [](double v) { return v > 0.0; });
  if (first == infected.end()) throw DegenerateError("fit_compartmental: series is all zero");
  const std::size_t offset = static_cast<std::size_t>(first - infected.begin());
  if (infected.size() - offset < 2) {
    throw DegenerateError("fit_compartmental: fewer than 2 days after the first nonzero count");
  }
  const auto y = infected.subspan(offset);

  FitResult fit;
  fit.family = family;
  fit.offset = offset;
  fit.population = population;
  SeirParams base;
  base.i0 = y[0];
  base.r0 = recovered ? (*recovered)[offset] : 0.0;
  if (base.i0 + base.r0 > population) throw ValidationError("fit_compartmental: counts exceed population");

  const int steps = static_cast<int>(std::lround(1.0 / kGridStep));
  const int sigma_steps = family == Family::seir ? steps : 0;
  SeirParams best = base;
  double best_value = INFINITY;
  for (int b = 0; b <= steps; ++b) {
    for (int g = 0; g <= steps; ++g) {
      for (int s = 0; s <= sigma_steps; ++s) {
        SeirParams p = base;
        p.beta = b * kGridStep;
        p.gamma = g * kGridStep;
        p.sigma = s * kGridStep;
        const double v = sse(family, p, y, population);
        ++fit.evaluations;
        if (v < best_value) {
          best_value = v;
          best = p;
        }
      }
    }
  }

  // Simplex refinement in the unit box; points outside are evaluated at
  // their projection plus a distance penalty.
  const std::size_t dim = family == Family::seir ? 3 : 2;
  auto to_params = [&](std::span<const double> x, double& outside) {
    SeirParams p = base;
    std::array<double, 3> c{};
    outside = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
      c[i] = std::clamp(x[i], 0.0, 1.0);
      outside += (x[i] - c[i]) * (x[i] - c[i]);
    }
    p.beta = c[0];
    p.gamma = c[1];
    p.sigma = dim == 3 ? c[2] : 0.0;
    return p;
  };
  const Objective objective = [&](std::span<const double> x) {
    double outside = 0.0;
    const SeirParams p = to_params(x, outside);
    const double v = sse(family, p, y, population);
    return v + outside * (1.0 + v);
  };
  std::vector<double> start{best.beta, best.gamma};
  if (dim == 3) start.push_back(best.sigma);
  NelderMeadOptions options;
  options.initial_step = kGridStep;
  const auto refined = nelder_mead(objective, start, options);
  fit.evaluations += refined.evaluations;

  double outside = 0.0;
  const SeirParams candidate = to_params(refined.x, outside);
  const double candidate_value = sse(family, candidate, y, population);
  if (candidate_value <= best_value) {
    best = candidate;
    best_value = candidate_value;
  }
  fit.params = best;
  fit.residual = best_value;
  return fit;
}

CompartmentState fitted_state(const FitResult& fit, std::size_t day) {
  if (day < fit.offset) return {fit.population, 0.0, 0.0, 0.0};
  return fit.trajectory(day + 1).at(day);
}

std::vector<CompartmentState> forecast_states(Family family, const SeirParams& p,
                                              const CompartmentState& state, double population,
                                              std::size_t horizon) {
  std::vector<CompartmentState> out;
  out.reserve(horizon);
  CompartmentState s = state;
  for (std::size_t h = 0; h < horizon; ++h) {
    s = family == Family::sir ? step_sir(s, p.beta, p.gamma, population)
                              : step_seir(s, p.beta, p.gamma, p.sigma, population);
    out.push_back(s);
  }
  return out;
}

std::vector<double> forecast_compartmental(Family family, const SeirParams& p,
                                           const CompartmentState& state, double population,
                                           std::size_t horizon) {
  std::vector<double> out;
  for (const auto& s : forecast_states(family, p, state, population, horizon)) out.push_back(s.infected);
  return out;
}

std::vector<double> persistence_forecast(std::span<const double> series, std::size_t horizon) {
  if (series.empty()) throw RangeError("persistence_forecast: empty series");
  return std::vector<double>(horizon, series.back());
}

}  // namespace stan::baselines
