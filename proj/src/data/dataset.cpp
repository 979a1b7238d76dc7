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

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <unordered_map>

#include "stan/common/csv.hpp"
#include "stan/common/error.hpp"
#include "stan/common/random.hpp"
#include "stan/data/dataset.hpp"

namespace stan::data {
namespace {

std::chrono::sys_days parse_iso(const std::string& text) {
  int y = 0;
  unsigned m = 0, d = 0;
  char tail = 0;
  if (text.size() != 10 || std::sscanf(text.c_str(), "%4d-%2u-%2u%c", &y, &m, &d, &tail) != 3) {
    throw ParseError("not an ISO-8601 date: '" + text + "'");
  }
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m},
                                        std::chrono::day{d}};
  if (!ymd.ok()) throw ParseError("invalid calendar date: '" + text + "'");
  return std::chrono::sys_days{ymd};
}

std::string format_iso(std::chrono::sys_days day) {
  const std::chrono::year_month_day ymd{day};
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

std::string code_column(std::size_t k) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "code_%02zu", k);
  return buf;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path + "'");
  return out;
}

double count_field(const std::string& text, const std::string& where,
                   std::vector<std::string>& negatives) {
  const double v = csv::parse_double(text, where);
  if (v < 0.0) negatives.push_back(where);
  return v;
}

void throw_negatives(const std::vector<std::string>& negatives) {
  if (negatives.empty()) return;
  std::string msg = "negative counts at";
  for (std::size_t i = 0; i < negatives.size() && i < 20; ++i) msg += " " + negatives[i];
  if (negatives.size() > 20) msg += " ...";
  throw ValidationError(msg);
}

}  // namespace

void EpiDataset::validate() const {
  const std::size_t n = size(), t = days();
  if (infected.size() != n * t || recovered.size() != n * t ||
      dynamic.size() != n * t * feature_count) {
    throw ValidationError("dataset: inconsistent matrix shapes");
  }
  if (feature_count < 4) throw ValidationError("dataset: fewer than 4 dynamic columns");
  for (std::size_t i = 0; i < n * t; ++i) {
    if (!(infected[i] >= 0.0) || !(recovered[i] >= 0.0)) {
      throw ValidationError("dataset: negative or non-finite count for location '" +
                            locations[i / t].id + "' day " + std::to_string(i % t));
    }
    if (dynamic[i * feature_count + kColActive] != infected[i]) {
      throw ValidationError("dataset: active-case column does not match infected series");
    }
  }
  for (double v : dynamic) {
    if (!(v >= 0.0)) throw ValidationError("dataset: negative or non-finite dynamic feature");
  }
}

std::vector<double> feature_window(const EpiDataset& ds, std::size_t loc, std::size_t t,
                                   std::size_t window) {
  const auto statics = ds.locations.at(loc).static_features();
  return graph::feature_window(statics, ds.dynamic_series(loc), ds.feature_count, t, window);
}

std::vector<std::string> date_axis(const std::string& start_iso, std::size_t days) {
  const auto start = parse_iso(start_iso);
  std::vector<std::string> out;
  out.reserve(days);
  for (std::size_t d = 0; d < days; ++d) out.push_back(format_iso(start + std::chrono::days(d)));
  return out;
}

DatasetFiles dataset_paths(const std::string& directory) {
  const std::filesystem::path dir(directory);
  return {(dir / "cases.csv").string(), (dir / "static.csv").string(),
          (dir / "dynamic.csv").string()};
}

EpiDataset load_dataset(const std::string& cases_path, const std::string& static_path,
                        const std::optional<std::string>& dynamic_path,
                        const RecoveredProxy& proxy) {
  EpiDataset ds;

  // Static table fixes the location order.
  const auto st = csv::read(static_path);
  {
    const auto c_id = st.require("location_id", static_path);
    const auto c_name = st.require("name", static_path);
    const auto c_lat = st.require("latitude", static_path);
    const auto c_lon = st.require("longitude", static_path);
    const auto c_pop = st.require("population", static_path);
    const auto c_den = st.require("density", static_path);
    std::set<std::string> seen;
    for (std::size_t r = 0; r < st.rows.size(); ++r) {
      const auto& row = st.rows[r];
      const std::string where = static_path + ":" + std::to_string(st.line_numbers[r]);
      graph::Location loc;
      loc.id = row[c_id];
      loc.name = row[c_name];
      loc.latitude = csv::parse_double(row[c_lat], where);
      loc.longitude = csv::parse_double(row[c_lon], where);
      loc.population = csv::parse_double(row[c_pop], where);
      loc.density = csv::parse_double(row[c_den], where);
      try {
        graph::validate(loc);
      } catch (const ValidationError& e) {
        throw ValidationError(where + ": " + e.what());
      }
      if (!seen.insert(loc.id).second) throw ValidationError(where + ": duplicate location id");
      ds.locations.push_back(std::move(loc));
    }
  }
  if (ds.locations.empty()) throw ValidationError(static_path + ": no locations");
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < ds.locations.size(); ++i) index[ds.locations[i].id] = i;
  auto lookup = [&](const std::string& id, const std::string& where) {
    auto it = index.find(id);
    if (it == index.end()) {
      throw ValidationError(where + ": unknown location id '" + id + "' (referential integrity)");
    }
    return it->second;
  };

  const auto cs = csv::read(cases_path);
  const auto c_date = cs.require("date", cases_path);
  const auto c_loc = cs.require("location_id", cases_path);
  const auto c_conf = cs.require("confirmed", cases_path);
  const auto c_rec = cs.require("recovered", cases_path);
  const auto c_death = cs.require("deaths", cases_path);
  const auto c_active = cs.column("active");

  std::set<std::chrono::sys_days> day_set;
  for (const auto& row : cs.rows) day_set.insert(parse_iso(row[c_date]));
  if (day_set.empty()) throw ValidationError(cases_path + ": no case rows");
  const auto first_day = *day_set.begin();
  const std::size_t t_count =
      static_cast<std::size_t>((*day_set.rbegin() - first_day).count()) + 1;
  for (std::size_t d = 0; d < t_count; ++d) ds.dates.push_back(format_iso(first_day + std::chrono::days(d)));

  const std::size_t n = ds.locations.size();
  std::vector<double> confirmed(n * t_count, 0.0), recovered(n * t_count, 0.0),
      deaths(n * t_count, 0.0), active(n * t_count, 0.0);
  std::vector<std::uint8_t> present(n * t_count, 0);
  bool any_missing_recovered = false;
  std::vector<std::string> negatives;
  for (std::size_t r = 0; r < cs.rows.size(); ++r) {
    const auto& row = cs.rows[r];
    const std::string where = cases_path + ":" + std::to_string(cs.line_numbers[r]);
    const std::size_t loc = lookup(row[c_loc], where);
    const auto day = static_cast<std::size_t>((parse_iso(row[c_date]) - first_day).count());
    const std::size_t k = loc * t_count + day;
    if (present[k]) throw ValidationError(where + ": duplicate (date, location) row");
    present[k] = 1;
    confirmed[k] = count_field(row[c_conf], where, negatives);
    if (row[c_rec].empty()) {
      any_missing_recovered = true;
    } else {
      recovered[k] = count_field(row[c_rec], where, negatives);
    }
    deaths[k] = count_field(row[c_death], where, negatives);
    if (c_active && !row[*c_active].empty()) {
      active[k] = count_field(row[*c_active], where, negatives);
    } else {
      active[k] = -1.0;  // derived below
    }
  }
  throw_negatives(negatives);

  // Leading days before a location's first record stay zero; a gap after the
  // first record is an error.
  for (std::size_t loc = 0; loc < n; ++loc) {
    bool started = false;
    for (std::size_t d = 0; d < t_count; ++d) {
      const bool p = present[loc * t_count + d] != 0;
      if (p) started = true;
      if (started && !p) {
        throw ValidationError(cases_path + ": location '" + ds.locations[loc].id +
                              "' has no row for " + ds.dates[d]);
      }
    }
  }

  if (any_missing_recovered) {
    ds.recovered_is_proxy = true;
    for (std::size_t loc = 0; loc < n; ++loc) {
      const double last_conf = confirmed[loc * t_count + t_count - 1];
      const double last_death = deaths[loc * t_count + t_count - 1];
      const double cfr = last_conf > 0.0 ? last_death / last_conf : 0.0;
      const double rho = 1.0 - cfr;
      for (std::size_t d = 0; d < t_count; ++d) {
        recovered[loc * t_count + d] =
            d >= proxy.lag_days ? confirmed[loc * t_count + d - proxy.lag_days] * rho : 0.0;
      }
    }
  }
  for (std::size_t k = 0; k < n * t_count; ++k) {
    if (active[k] < 0.0) active[k] = std::max(0.0, confirmed[k] - recovered[k] - deaths[k]);
    if (!present[k]) active[k] = 0.0;
  }

  std::vector<std::string> code_names;
  std::optional<csv::Table> dyn;
  if (dynamic_path) {
    dyn = csv::read(*dynamic_path);
    for (std::size_t k = 1;; ++k) {
      if (!dyn->column(code_column(k))) break;
      code_names.push_back(code_column(k));
    }
    ds.feature_count = 4 + code_names.size();
  } else {
    ds.feature_count = graph::kDynamicFeatures;
  }

  ds.infected = active;
  ds.recovered = recovered;
  ds.dynamic.assign(n * t_count * ds.feature_count, 0.0);
  for (std::size_t loc = 0; loc < n; ++loc) {
    for (std::size_t d = 0; d < t_count; ++d) {
      const std::size_t k = loc * t_count + d;
      ds.dynamic[k * ds.feature_count + kColActive] = active[k];
      ds.dynamic[k * ds.feature_count + kColCumulative] = confirmed[k];
    }
  }

  if (dyn) {
    const auto d_date = dyn->require("date", *dynamic_path);
    const auto d_loc = dyn->require("location_id", *dynamic_path);
    const auto d_hosp = dyn->require("hospitalizations", *dynamic_path);
    const auto d_icu = dyn->require("icu", *dynamic_path);
    std::vector<std::size_t> d_codes;
    for (const auto& name : code_names) d_codes.push_back(*dyn->column(name));
    for (std::size_t r = 0; r < dyn->rows.size(); ++r) {
      const auto& row = dyn->rows[r];
      const std::string where = *dynamic_path + ":" + std::to_string(dyn->line_numbers[r]);
      const std::size_t loc = lookup(row[d_loc], where);
      const auto day_point = parse_iso(row[d_date]);
      if (day_point < first_day || static_cast<std::size_t>((day_point - first_day).count()) >= t_count) {
        throw ValidationError(where + ": date outside the case-file axis");
      }
      const auto day = static_cast<std::size_t>((day_point - first_day).count());
      double* dst = ds.dynamic.data() + (loc * t_count + day) * ds.feature_count;
      dst[kColHospital] = count_field(row[d_hosp], where, negatives);
      dst[kColIcu] = count_field(row[d_icu], where, negatives);
      for (std::size_t c = 0; c < d_codes.size(); ++c) {
        dst[kColFirstCode + c] = count_field(row[d_codes[c]], where, negatives);
      }
    }
    throw_negatives(negatives);
  }
  ds.validate();
  return ds;
}

void write_dataset(const EpiDataset& ds, const DatasetFiles& files) {
  ds.validate();
  const std::size_t n = ds.size(), t = ds.days();
  {
    auto out = open_out(files.statics);
    out << "location_id,name,latitude,longitude,population,density\n";
    for (const auto& loc : ds.locations) {
      out << csv::quote_if_needed(loc.id) << ',' << csv::quote_if_needed(loc.name) << ','
          << csv::format_double(loc.latitude) << ',' << csv::format_double(loc.longitude) << ','
          << csv::format_double(loc.population) << ',' << csv::format_double(loc.density) << '\n';
    }
    if (!out) throw IoError("write failed: '" + files.statics + "'");
  }
  {
    auto out = open_out(files.cases);
    out << "date,location_id,confirmed,recovered,deaths,active\n";
    for (std::size_t d = 0; d < t; ++d) {
      for (std::size_t loc = 0; loc < n; ++loc) {
        const double confirmed = ds.feature(loc, d, kColCumulative);
        out << ds.dates[d] << ',' << csv::quote_if_needed(ds.locations[loc].id) << ','
            << csv::format_double(confirmed) << ',' << csv::format_double(ds.R(loc, d)) << ",0,"
            << csv::format_double(ds.I(loc, d)) << '\n';
      }
    }
    if (!out) throw IoError("write failed: '" + files.cases + "'");
  }
  {
    auto out = open_out(files.dynamic);
    out << "date,location_id,hospitalizations,icu";
    for (std::size_t c = kColFirstCode; c < ds.feature_count; ++c) {
      out << ',' << code_column(c - kColFirstCode + 1);
    }
    out << '\n';
    for (std::size_t d = 0; d < t; ++d) {
      for (std::size_t loc = 0; loc < n; ++loc) {
        out << ds.dates[d] << ',' << csv::quote_if_needed(ds.locations[loc].id);
        for (std::size_t c = kColHospital; c < ds.feature_count; ++c) {
          out << ',' << csv::format_double(ds.feature(loc, d, c));
        }
        out << '\n';
      }
    }
    if (!out) throw IoError("write failed: '" + files.dynamic + "'");
  }
}

namespace {

EpiDataset day_range(const EpiDataset& ds, std::size_t begin, std::size_t end) {
  EpiDataset out;
  out.locations = ds.locations;
  out.feature_count = ds.feature_count;
  out.recovered_is_proxy = ds.recovered_is_proxy;
  out.dates.assign(ds.dates.begin() + begin, ds.dates.begin() + end);
  const std::size_t n = ds.size(), t = ds.days(), len = end - begin, f = ds.feature_count;
  out.infected.reserve(n * len);
  out.recovered.reserve(n * len);
  out.dynamic.reserve(n * len * f);
  for (std::size_t loc = 0; loc < n; ++loc) {
    const auto row0 = ds.infected.begin() + loc * t;
    out.infected.insert(out.infected.end(), row0 + begin, row0 + end);
    const auto rrow = ds.recovered.begin() + loc * t;
    out.recovered.insert(out.recovered.end(), rrow + begin, rrow + end);
    const auto drow = ds.dynamic.begin() + loc * t * f;
    out.dynamic.insert(out.dynamic.end(), drow + begin * f, drow + end * f);
  }
  return out;
}

}  // namespace

std::pair<EpiDataset, EpiDataset> split_dataset(const EpiDataset& ds, std::size_t split_day) {
  if (split_day == 0 || split_day >= ds.days()) {
    throw RangeError("split_dataset: split day " + std::to_string(split_day) +
                     " outside (0, " + std::to_string(ds.days()) + ")");
  }
  return {day_range(ds, 0, split_day), day_range(ds, split_day, ds.days())};
}

EpiDataset truncate(const EpiDataset& ds, std::size_t days) {
  if (days == 0 || days > ds.days()) {
    throw RangeError("truncate: " + std::to_string(days) + " days outside [1, " +
                     std::to_string(ds.days()) + "]");
  }
  return day_range(ds, 0, days);
}

void validate(const SynthConfig& c) {
  auto in_unit = [](double lo, double hi) { return lo > 0.0 && hi < 1.0 && lo <= hi; };
  if (!in_unit(c.beta_min, c.beta_max)) throw ConfigError("synth: beta range must lie in (0, 1)");
  if (!in_unit(c.gamma_min, c.gamma_max)) throw ConfigError("synth: gamma range must lie in (0, 1)");
  if (!(c.coupling >= 0.0)) throw ConfigError("synth: coupling must be >= 0");
  if (!(c.noise >= 0.0)) throw ConfigError("synth: noise must be >= 0");
  if (c.days < 2) throw ConfigError("synth: need at least 2 days");
  if (!(c.initial_infected >= 0.0)) throw ConfigError("synth: initial_infected must be >= 0");
}

std::vector<graph::Location> synthetic_locations(std::size_t n, std::uint64_t seed,
                                                double population_min, double population_max) {
  if (!(population_min >= 1.0 && population_max >= population_min)) {
    throw ConfigError("synthetic population range must satisfy 1 <= min <= max");
  }
  Rng rng(derive_seed(seed, 0x10c));
  std::uniform_real_distribution<double> lat(40.0, 42.0), lon(-75.0, -73.0), unit(0.0, 1.0),
      area(200.0, 2000.0);
  std::vector<graph::Location> out;
  for (std::size_t i = 0; i < n; ++i) {
    graph::Location loc;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "L%02zu", i);
    loc.id = buf;
    loc.name = "Synthetic " + std::to_string(i);
    loc.latitude = lat(rng);
    loc.longitude = lon(rng);
    loc.population = std::round(
        std::exp(std::log(population_min) + unit(rng) * std::log(population_max / population_min)));
    loc.density = loc.population / area(rng);
    out.push_back(std::move(loc));
  }
  return out;
}

EpiDataset simulate_metapopulation(const SynthConfig& config, const graph::LocationGraph& graph,
                                   SynthTruth* truth) {
  validate(config);
  const std::size_t n = graph.size(), t_count = config.days;
  Rng rng(derive_seed(config.seed, 0x5e1));
  std::uniform_real_distribution<double> beta_dist(config.beta_min, config.beta_max),
      gamma_dist(config.gamma_min, config.gamma_max);
  std::vector<double> beta(n), gamma(n), pop(n);
  for (std::size_t i = 0; i < n; ++i) {
    beta[i] = beta_dist(rng);
    gamma[i] = gamma_dist(rng);
    pop[i] = graph.node(i).population;
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);

  // Row-normalised off-diagonal mobility weights.
  std::vector<double> wbar(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) row += graph.weight(i, j);
    }
    if (row <= 0.0) continue;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) wbar[i * n + j] = graph.weight(i, j) / row;
    }
  }

  std::vector<double> S(n * t_count), I(n * t_count), R(n * t_count, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    I[i * t_count] = 0.0;
    R[i * t_count] = 0.0;
  }
  for (std::size_t k = 0; k < std::min(config.seed_nodes, n); ++k) {
    I[order[k] * t_count] = std::min(config.initial_infected, pop[order[k]]);
  }
  for (std::size_t i = 0; i < n; ++i) S[i * t_count] = pop[i] - I[i * t_count];

  for (std::size_t d = 0; d + 1 < t_count; ++d) {
    for (std::size_t i = 0; i < n; ++i) {
      const double s = S[i * t_count + d], inf_i = I[i * t_count + d], rec = R[i * t_count + d];
      double pressure = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (j != i) pressure += wbar[i * n + j] * I[j * t_count + d] / pop[j];
      }
      double new_inf = beta[i] * s * inf_i / pop[i] + config.coupling * pressure * s;
      new_inf = std::min(new_inf, s);
      const double new_rec = gamma[i] * inf_i;
      S[i * t_count + d + 1] = s - new_inf;
      I[i * t_count + d + 1] = inf_i + new_inf - new_rec;
      R[i * t_count + d + 1] = rec + new_rec;
    }
  }

  EpiDataset ds;
  ds.locations = graph.nodes();
  ds.dates = date_axis(config.start_date, t_count);
  ds.feature_count = graph::kDynamicFeatures;
  ds.infected = I;
  ds.recovered = R;
  ds.dynamic.assign(n * t_count * ds.feature_count, 0.0);
  std::normal_distribution<double> noise(0.0, 1.0);
  auto lagged = [&](std::size_t i, std::size_t d, std::size_t lag) {
    return d >= lag ? I[i * t_count + d - lag] : 0.0;
  };
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t d = 0; d < t_count; ++d) {
      double* row = ds.dynamic.data() + (i * t_count + d) * ds.feature_count;
      row[kColActive] = I[i * t_count + d];
      row[kColCumulative] = I[i * t_count + d] + R[i * t_count + d];
      auto noisy = [&](double base) {
        const double eps = noise(rng);
        return std::max(0.0, base * (1.0 + config.noise * eps));
      };
      row[kColHospital] = noisy(0.06 * lagged(i, d, 3));
      row[kColIcu] = noisy(0.015 * lagged(i, d, 6));
      for (std::size_t c = 0; c < graph::kDiagnosisCodes; ++c) {
        const double frac = std::fmod(0.6180339887498949 * static_cast<double>(c + 1), 1.0);
        const double coef = 0.002 + 0.1 * frac;
        row[kColFirstCode + c] = noisy(coef * lagged(i, d, (c + 1) % 10));
      }
    }
  }
  if (truth != nullptr) {
    truth->beta = beta;
    truth->gamma = gamma;
    truth->susceptible = S;
  }
  ds.validate();
  return ds;
}

}  // namespace stan::data
