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

// SIR-style increment rollout driven by predicted rates, and the two squared
// error terms of the training objective.

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "stan/autodiff/tape.hpp"

namespace stan::dynamics {

enum class RolloutForm {
  // dI = beta * (N - I - R) - gamma * I; dR = gamma * I
  literal,
  // dI = beta * S * I / N - gamma * I; dR = gamma * I
  mass_action,
};

RolloutForm parse_rollout_form(std::string_view text);
std::string_view to_string(RolloutForm form);

enum class LossReduction { sum, mean };

struct SeedState {
  double infected = 0.0;   // active cases on the day before the window
  double recovered = 0.0;
  double population = 1.0;
};

void validate(const SeedState& seed);

struct DynamicsRollout {
  std::vector<double> delta_infected;
  std::vector<double> delta_recovered;
  std::vector<double> infected;     // state after each step
  std::vector<double> recovered;
  std::vector<double> susceptible;  // population - (infected + recovered)
};

DynamicsRollout dynamics_rollout(double beta, double gamma, const SeedState& seed,
                                 std::size_t horizon, RolloutForm form);

double squared_error(std::span<const double> pred, std::span<const double> truth);

// (dI_dyn - dI)^2 + (dR_dyn - dR)^2 summed over the horizon.
double dynamics_loss(const DynamicsRollout& rollout, std::span<const double> delta_infected,
                     std::span<const double> delta_recovered);

// Same form on the directly predicted increments.
double prediction_loss(std::span<const double> pred_infected, std::span<const double> pred_recovered,
                       std::span<const double> delta_infected,
                       std::span<const double> delta_recovered);

struct WindowLoss {
  double prediction = 0.0;
  double dynamics = 0.0;
};

double total_loss(std::span<const WindowLoss> windows);

// Batched on-tape rollout: beta and gamma are A x 1 columns, one row per
// window; the result holds A x horizon increment matrices.
struct RolloutVars {
  ad::Var delta_infected;
  ad::Var delta_recovered;
};

RolloutVars dynamics_rollout(ad::Tape& tape, ad::Var beta, ad::Var gamma,
                             std::span<const SeedState> seeds, std::size_t horizon,
                             RolloutForm form);

// sum of squared differences of two A x horizon pairs against constant
// targets; divided by the horizon when reduction is mean.
ad::Var squared_error_loss(ad::Tape& tape, ad::Var pred_infected, ad::Var pred_recovered,
                           const ad::Tensor& delta_infected, const ad::Tensor& delta_recovered,
                           LossReduction reduction);

}  // namespace stan::dynamics
