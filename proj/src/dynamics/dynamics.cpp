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

#include "stan/dynamics/dynamics.hpp"

#include <cmath>
#include <string>

#include "stan/common/error.hpp"

namespace stan::dynamics {

RolloutForm parse_rollout_form(std::string_view text) {
  if (text == "literal") return RolloutForm::literal;
  if (text == "mass-action" || text == "mass_action") return RolloutForm::mass_action;
  throw ConfigError("unknown rollout form '" + std::string(text) + "'");
}

std::string_view to_string(RolloutForm form) {
  return form == RolloutForm::literal ? "literal" : "mass-action";
}

void validate(const SeedState& seed) {
  if (!(seed.population >= 1.0)) throw ValidationError("seed: population must be >= 1");
  if (!(seed.infected >= 0.0) || !(seed.recovered >= 0.0) ||
      seed.infected + seed.recovered > seed.population) {
    throw ValidationError("seed: need 0 <= I + R <= N");
  }
}

DynamicsRollout dynamics_rollout(double beta, double gamma, const SeedState& seed,
                                 std::size_t horizon, RolloutForm form) {
  if (horizon == 0) throw RangeError("dynamics_rollout: horizon must be >= 1");
  validate(seed);
  DynamicsRollout out;
  // Compartments live on the grid of multiples of ulp(N). Every sum of them
  // below 2N is then exact, so S + I + R == N holds in any order.
  const double quantum = std::ldexp(1.0, std::ilogb(seed.population) - 52);
  const auto on_grid = [quantum](double v) { return std::nearbyint(v / quantum) * quantum; };
  double i_prev = on_grid(seed.infected);
  double r_prev = on_grid(seed.recovered);
  for (std::size_t step = 0; step < horizon; ++step) {
    const double s_prev = seed.population - (i_prev + r_prev);
    const double infection = form == RolloutForm::literal
                                 ? beta * s_prev
                                 : beta * s_prev * i_prev / seed.population;
    const double removal = gamma * i_prev;
    const double i_next = on_grid(i_prev + (infection - removal));
    const double r_next = on_grid(r_prev + removal);
    const double d_i = i_next - i_prev;
    const double d_r = r_next - r_prev;
    i_prev = i_next;
    r_prev = r_next;
    out.delta_infected.push_back(d_i);
    out.delta_recovered.push_back(d_r);
    out.infected.push_back(i_prev);
    out.recovered.push_back(r_prev);
    out.susceptible.push_back(seed.population - (i_prev + r_prev));
  }
  return out;
}

double squared_error(std::span<const double> pred, std::span<const double> truth) {
  if (pred.size() != truth.size()) {
    throw DimensionError("squared_error: lengths " + std::to_string(pred.size()) + " and " +
                         std::to_string(truth.size()));
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - truth[i];
    acc += d * d;
  }
  return acc;
}

double dynamics_loss(const DynamicsRollout& rollout, std::span<const double> delta_infected,
                     std::span<const double> delta_recovered) {
  return squared_error(rollout.delta_infected, delta_infected) +
         squared_error(rollout.delta_recovered, delta_recovered);
}

double prediction_loss(std::span<const double> pred_infected, std::span<const double> pred_recovered,
                       std::span<const double> delta_infected,
                       std::span<const double> delta_recovered) {
  return squared_error(pred_infected, delta_infected) +
         squared_error(pred_recovered, delta_recovered);
}

double total_loss(std::span<const WindowLoss> windows) {
  if (windows.empty()) throw ContractError("total_loss: no windows");
  double acc = 0.0;
  for (const auto& w : windows) acc += w.prediction + w.dynamics;
  return acc;
}

RolloutVars dynamics_rollout(ad::Tape& tape, ad::Var beta, ad::Var gamma,
                             std::span<const SeedState> seeds, std::size_t horizon,
                             RolloutForm form) {
  if (horizon == 0) throw RangeError("dynamics_rollout: horizon must be >= 1");
  const std::size_t a = seeds.size();
  if (beta.value().size() != a || gamma.value().size() != a) {
    throw DimensionError("dynamics_rollout: rates must have one row per seed");
  }
  std::vector<double> pop(a), inv_pop(a), i0(a), r0(a);
  for (std::size_t k = 0; k < a; ++k) {
    validate(seeds[k]);
    pop[k] = seeds[k].population;
    inv_pop[k] = 1.0 / seeds[k].population;
    i0[k] = seeds[k].infected;
    r0[k] = seeds[k].recovered;
  }
  const ad::Var population = tape.constant(ad::Tensor::column(pop));
  const ad::Var inverse_population = tape.constant(ad::Tensor::column(inv_pop));
  ad::Var infected = tape.constant(ad::Tensor::column(i0));
  ad::Var recovered = tape.constant(ad::Tensor::column(r0));

  std::vector<ad::Var> d_infected, d_recovered;
  for (std::size_t step = 0; step < horizon; ++step) {
    const ad::Var susceptible = ad::sub(population, ad::add(infected, recovered));
    ad::Var infection = ad::mul(beta, susceptible);
    if (form == RolloutForm::mass_action) {
      infection = ad::mul(ad::mul(infection, infected), inverse_population);
    }
    const ad::Var removal = ad::mul(gamma, infected);
    const ad::Var d_i = ad::sub(infection, removal);
    d_infected.push_back(d_i);
    d_recovered.push_back(removal);
    infected = ad::add(infected, d_i);
    recovered = ad::add(recovered, removal);
  }
  return {tape.concat_cols(d_infected), tape.concat_cols(d_recovered)};
}

ad::Var squared_error_loss(ad::Tape& tape, ad::Var pred_infected, ad::Var pred_recovered,
                           const ad::Tensor& delta_infected, const ad::Tensor& delta_recovered,
                           LossReduction reduction) {
  const ad::Var ti = tape.constant(delta_infected);
  const ad::Var tr = tape.constant(delta_recovered);
  ad::Var loss = ad::add(ad::sum_squares(ad::sub(pred_infected, ti)),
                         ad::sum_squares(ad::sub(pred_recovered, tr)));
  if (reduction == LossReduction::mean) loss = ad::scale(loss, 1.0 / static_cast<double>(delta_infected.cols()));
  return loss;
}

}  // namespace stan::dynamics
