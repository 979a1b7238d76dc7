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
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace stan::baselines {

enum class Family { sir, seir };

Family parse_family(std::string_view text);
std::string_view to_string(Family family);

struct SirParams {
  double beta = 0.0;
  double gamma = 0.0;
  double i0 = 0.0;
  double r0 = 0.0;
};

struct SeirParams {
  double beta = 0.0;
  double gamma = 0.0;
  double sigma = 0.0;
  double i0 = 0.0;
  double r0 = 0.0;
  double e0 = 0.0;
};

void validate(const SirParams& p, double population);
void validate(const SeirParams& p, double population);

struct CompartmentState {
  double susceptible = 0.0;
  double exposed = 0.0;
  double infected = 0.0;
  double recovered = 0.0;
};

// Index 0 holds the initial state; T entries in total.
struct Trajectory {
  std::vector<double> susceptible;
  std::vector<double> exposed;  // all zero for SIR
  std::vector<double> infected;
  std::vector<double> recovered;

  std::size_t size() const noexcept { return infected.size(); }
  CompartmentState at(std::size_t t) const;
};

// One daily forward-Euler step of the mass-action model. Flows are clamped
// so no compartment goes negative and the total is unchanged.
CompartmentState step_sir(const CompartmentState& s, double beta, double gamma, double population);
CompartmentState step_seir(const CompartmentState& s, double beta, double gamma, double sigma,
                           double population);

Trajectory simulate_sir(const SirParams& p, double population, std::size_t days);
Trajectory simulate_seir(const SeirParams& p, double population, std::size_t days);

struct FitResult {
  Family family = Family::sir;
  SeirParams params;         // sigma and e0 unused for SIR
  double residual = 0.0;     // sum of squared I errors over the fitted span
  std::size_t offset = 0;    // leading zero days skipped before the fit
  std::size_t evaluations = 0;
  double population = 0.0;

  // Fitted trajectory re-expressed on the original day axis (zeros before offset).
  Trajectory trajectory(std::size_t days) const;
};

inline constexpr double kGridStep = 0.02;

// Sum of squared errors of the simulated I against `infected` from `offset` on.
double fit_residual(Family family, const SeirParams& p, std::span<const double> infected,
                    double population, std::size_t offset = 0);

// Least-squares calibration of the rates. Fit starts at the first nonzero
// day; I0 is that observation, R0 the observed recovered count (or 0), E0 = 0.
FitResult fit_compartmental(std::span<const double> infected, double population, Family family,
                            std::optional<std::span<const double>> recovered = std::nullopt);

// State of the fitted trajectory on day `day` of the original axis (the
// untouched initial state before the fit offset).
CompartmentState fitted_state(const FitResult& fit, std::size_t day);

// States after each of `horizon` Euler steps from `state`.
std::vector<CompartmentState> forecast_states(Family family, const SeirParams& p,
                                              const CompartmentState& state, double population,
                                              std::size_t horizon);

// Continues the Euler recurrence from `state` for `horizon` days; returns I.
std::vector<double> forecast_compartmental(Family family, const SeirParams& p,
                                           const CompartmentState& state, double population,
                                           std::size_t horizon);

std::vector<double> persistence_forecast(std::span<const double> series, std::size_t horizon);

}  // namespace stan::baselines
