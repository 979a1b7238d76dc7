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

#include "stan/cli/commands.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <map>
#include <tuple>

#include <CLI11.hpp>

#include "stan/common/csv.hpp"
#include "stan/common/error.hpp"
#include "stan/eval/metrics.hpp"

namespace stan::cli {
namespace {

namespace fs = std::filesystem;

fs::path ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory '" + dir + "'");
  return fs::path(dir);
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

void require_file(const std::string& path, const char* key) {
  if (path.empty()) throw ConfigError(std::string(key) + " is not set");
  if (!fs::exists(path)) throw IoError(std::string(key) + ": no such file '" + path + "'");
}

std::vector<std::size_t> origins_for(const RunConfig& config, const data::EpiDataset& ds,
                                     std::size_t horizon, bool rolling) {
  if (rolling) return test_origins(config, ds, horizon);
  const std::size_t days = config.data.split_day ? *config.data.split_day : ds.days();
  return {days - 1};
}

}  // namespace

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ScheduleError*>(&e)) return 3;
  if (dynamic_cast<const ContractError*>(&e)) return 4;
  if (dynamic_cast<const AlignmentError*>(&e)) return 5;
  if (dynamic_cast<const IoError*>(&e) || dynamic_cast<const ParseError*>(&e)) return 2;
  return 1;
}

data::EpiDataset load_run_dataset(const RunConfig& config) {
  require_file(config.data.cases, "data.cases");
  require_file(config.data.statics, "data.static");
  std::optional<std::string> dynamic;
  if (!config.data.dynamic.empty() && fs::exists(config.data.dynamic)) dynamic = config.data.dynamic;
  return data::load_dataset(config.data.cases, config.data.statics, dynamic,
                            data::RecoveredProxy{config.data.recovered_lag});
}

graph::LocationGraph make_graph(const RunConfig& config, std::vector<graph::Location> locations) {
  graph::GraphOptions options;
  options.edge = config.graph.edge;
  options.threshold = config.graph.tau;
  if (!config.data.distances.empty()) {
    require_file(config.data.distances, "data.distances");
    options.distances = graph::load_distance_csv(config.data.distances, locations);
  }
  return graph::build_graph(std::move(locations), options);
}

data::EpiDataset training_span(const RunConfig& config, const data::EpiDataset& ds) {
  if (!config.data.split_day) return ds;
  return data::split_dataset(ds, *config.data.split_day).first;
}

std::vector<std::size_t> test_origins(const RunConfig& config, const data::EpiDataset& ds,
                                      std::size_t horizon) {
  if (!config.data.split_day) throw ConfigError("rolling evaluation needs data.split_day");
  const std::size_t split = *config.data.split_day;
  if (split == 0 || split >= ds.days()) throw RangeError("data.split_day is outside the dataset");
  std::vector<std::size_t> out;
  for (std::size_t t = split - 1; t + horizon < ds.days(); ++t) out.push_back(t);
  if (out.empty()) {
    throw ScheduleError("test span too short for horizon " + std::to_string(horizon),
                        static_cast<int>(split + horizon));
  }
  return out;
}

void write_forecast_csv(const std::vector<ForecastRow>& rows, bool with_origin,
                        const fs::path& path) {
  auto out = open_out(path);
  if (with_origin) out << "origin,";
  out << "location_id,day_offset,delta_I,delta_R,total_I\n";
  for (const auto& r : rows) {
    if (with_origin) out << r.origin << ',';
    out << csv::quote_if_needed(r.location_id) << ',' << r.day_offset << ','
        << csv::format_double(r.delta_infected) << ',' << csv::format_double(r.delta_recovered)
        << ',' << csv::format_double(r.total_infected) << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

std::vector<ForecastRow> read_forecast_csv(const fs::path& path, const std::string& default_origin) {
  const auto table = csv::read(path.string());
  const std::string src = path.string();
  const auto origin_col = table.column("origin");
  const auto loc = table.require("location_id", src);
  const auto off = table.require("day_offset", src);
  const auto total = table.require("total_I", src);
  const auto di = table.column("delta_I");
  const auto dr = table.column("delta_R");
  if (!origin_col && default_origin.empty()) {
    throw ConfigError(src + ": no origin column; pass --origin or set data.split_day");
  }
  std::vector<ForecastRow> rows;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    const std::string where = src + ":" + std::to_string(table.line_numbers[i]);
    ForecastRow r;
    r.origin = origin_col ? row[*origin_col] : default_origin;
    r.location_id = row[loc];
    const double offset = csv::parse_double(row[off], where);
    if (!(offset >= 1.0) || offset != std::floor(offset)) throw ParseError(where + ": bad day_offset");
    r.day_offset = static_cast<std::size_t>(offset);
    r.total_infected = csv::parse_double(row[total], where);
    if (di) r.delta_infected = csv::parse_double(row[*di], where);
    if (dr) r.delta_recovered = csv::parse_double(row[*dr], where);
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<ForecastRow> forecast_rows(const std::vector<training::Forecast>& forecasts,
                                       const std::string& origin) {
  std::vector<ForecastRow> rows;
  for (const auto& f : forecasts) {
    for (std::size_t k = 0; k < f.delta_infected.size(); ++k) {
      rows.push_back({origin, f.location_id, k + 1, f.delta_infected[k], f.delta_recovered[k],
                      f.total_infected[k]});
    }
  }
  return rows;
}

fs::path cmd_simulate(const RunConfig& config) {
  data::validate(config.synth.config);
  if (config.synth.nodes == 0) throw ConfigError("synth.nodes must be >= 1");
  auto locations = data::synthetic_locations(config.synth.nodes, config.synth.config.seed,
                                              config.synth.population_min, config.synth.population_max);
  const auto graph = make_graph(config, locations);
  const auto ds = data::simulate_metapopulation(config.synth.config, graph);
  const auto dir = ensure_dir(config.out);
  data::write_dataset(ds, data::dataset_paths(dir.string()));
  return dir;
}

TrainOutputs cmd_train(const RunConfig& config) {
  const auto full = load_run_dataset(config);
  const auto ds = training_span(config, full);
  const auto graph = make_graph(config, ds.locations);
  auto result = training::train(ds, graph, config.train);

  ModelArchive archive;
  archive.settings = config;
  archive.settings.graph.tau = graph.threshold();
  archive.model = std::move(result.model);

  const auto dir = ensure_dir(config.out);
  TrainOutputs out{dir / "model.stan", dir / "loss_history.csv"};
  save_archive(archive, out.archive);
  auto hist = open_out(out.history);
  hist << "location_id,epoch,loss\n";
  for (std::size_t loc = 0; loc < ds.size(); ++loc) {
    for (std::size_t e = 0; e < result.history[loc].size(); ++e) {
      hist << csv::quote_if_needed(ds.locations[loc].id) << ',' << e << ','
           << csv::format_double(result.history[loc][e]) << '\n';
    }
  }
  if (!hist) throw IoError("failed writing " + out.history.string());
  return out;
}

fs::path cmd_predict(const RunConfig& config, const PredictOptions& options) {
  const fs::path archive_path = options.archive.empty() ? fs::path(config.out) / "model.stan" : options.archive;
  const auto archive = load_archive(archive_path);
  const auto& model = archive.model;
  const std::size_t horizon = options.horizon.value_or(model.config.horizon);
  if (horizon != model.config.horizon) {
    throw ContractError("horizon " + std::to_string(horizon) + " does not match the trained head width " +
                        std::to_string(model.config.horizon));
  }
  const auto ds = load_run_dataset(config);
  RunConfig graph_settings = config;
  graph_settings.graph = archive.settings.graph;
  const auto graph = make_graph(graph_settings, ds.locations);

  const auto origins = origins_for(config, ds, horizon, options.rolling);
  if (origins.front() + 1 < model.config.input_window) {
    throw RangeError("history is shorter than the input window");
  }
  const auto forecasts = training::predict_rolling(model, ds, graph, origins);
  std::vector<ForecastRow> rows;
  for (std::size_t k = 0; k < origins.size(); ++k) {
    auto part = forecast_rows(forecasts[k], ds.dates[origins[k]]);
    rows.insert(rows.end(), part.begin(), part.end());
  }
  const auto dir = ensure_dir(config.out);
  const fs::path path = dir / (options.rolling ? "forecast_stan.csv" : "forecast.csv");
  write_forecast_csv(rows, options.rolling, path);
  return path;
}

BaselineKind parse_baseline(const std::string& text) {
  if (text == "sir") return BaselineKind::sir;
  if (text == "seir") return BaselineKind::seir;
  if (text == "persistence") return BaselineKind::persistence;
  throw ConfigError("unknown baseline '" + text + "'");
}

BaselineAnchor parse_anchor(const std::string& text) {
  if (text == "fitted") return BaselineAnchor::fitted;
  if (text == "observed") return BaselineAnchor::observed;
  throw ConfigError("unknown baseline anchor '" + text + "'");
}

std::string to_string(BaselineKind kind) {
  switch (kind) {
    case BaselineKind::sir: return "sir";
    case BaselineKind::seir: return "seir";
    case BaselineKind::persistence: return "persistence";
  }
  return "sir";
}

std::vector<fs::path> cmd_fit_baseline(const RunConfig& config, const BaselineOptions& options) {
  const auto ds = load_run_dataset(config);
  const auto train = training_span(config, ds);
  const std::size_t horizon = options.horizon.value_or(config.train.horizon);
  if (horizon == 0) throw ConfigError("horizon must be >= 1");
  const auto origins = origins_for(config, ds, horizon, options.rolling);
  const auto dir = ensure_dir(config.out);
  std::vector<fs::path> written;

  auto fits_out = open_out(dir / "baseline_fits.csv");
  fits_out << "location_id,family,beta,gamma,sigma,residual,offset,status\n";
  for (const auto kind : options.kinds) {
    std::vector<ForecastRow> rows;
    const bool compartmental = kind != BaselineKind::persistence;
    const auto family = kind == BaselineKind::seir ? baselines::Family::seir : baselines::Family::sir;
    for (std::size_t loc = 0; loc < ds.size(); ++loc) {
      const auto& id = ds.locations[loc].id;
      const double pop = ds.locations[loc].population;
      std::optional<baselines::FitResult> fit;
      if (compartmental) {
        std::string status = "ok";
        try {
          fit = baselines::fit_compartmental(train.infected_series(loc), pop, family,
                                             train.recovered_series(loc));
        } catch (const DegenerateError&) {
          status = "degenerate";
        }
        const auto& p = fit ? fit->params : baselines::SeirParams{};
        fits_out << csv::quote_if_needed(id) << ',' << baselines::to_string(family) << ','
                 << csv::format_double(p.beta) << ',' << csv::format_double(p.gamma) << ','
                 << csv::format_double(p.sigma) << ','
                 << csv::format_double(fit ? fit->residual : 0.0) << ',' << (fit ? fit->offset : 0)
                 << ',' << status << '\n';
      }
      for (const std::size_t t : origins) {
        const double i_t = ds.I(loc, t), r_t = ds.R(loc, t);
        if (!compartmental) {
          for (std::size_t k = 1; k <= horizon; ++k) rows.push_back({ds.dates[t], id, k, 0.0, 0.0, i_t});
          continue;
        }
        baselines::CompartmentState s{pop - i_t - r_t, 0.0, i_t, r_t};
        baselines::SeirParams p;  // degenerate fits forecast a flat line
        if (fit) {
          p = fit->params;
          const auto own = baselines::fitted_state(*fit, t);
          if (options.anchor == BaselineAnchor::fitted) {
            s = own;
          } else if (family == baselines::Family::seir) {
            // Exposed is unobserved: carry it over from the fitted trajectory.
            s.exposed = std::min(own.exposed, s.susceptible);
            s.susceptible -= s.exposed;
          }
        }
        const auto states = baselines::forecast_states(family, p, s, pop, horizon);
        baselines::CompartmentState prev = s;
        for (std::size_t k = 1; k <= horizon; ++k) {
          const auto& next = states[k - 1];
          rows.push_back({ds.dates[t], id, k, next.infected - prev.infected,
                          next.recovered - prev.recovered, next.infected});
          prev = next;
        }
      }
    }
    const fs::path path = dir / ("forecast_" + to_string(kind) + ".csv");
    write_forecast_csv(rows, true, path);
    written.push_back(path);
  }
  if (!fits_out) throw IoError("failed writing baseline_fits.csv");
  written.push_back(dir / "baseline_fits.csv");
  return written;
}

std::vector<fs::path> cmd_evaluate(const RunConfig& config, const EvaluateOptions& options) {
  if (options.forecasts.empty()) throw ConfigError("evaluate: no forecast files given");
  const auto ds = load_run_dataset(config);
  std::string default_origin;
  if (options.origin) default_origin = *options.origin;
  else if (config.data.split_day && *config.data.split_day >= 1 && *config.data.split_day <= ds.days()) {
    default_origin = ds.dates[*config.data.split_day - 1];
  }
  std::map<std::string, std::size_t> loc_index;
  for (std::size_t i = 0; i < ds.size(); ++i) loc_index[ds.locations[i].id] = i;

  using Key = std::tuple<std::string, std::string, std::size_t>;  // origin, location, offset
  struct Model {
    std::string name;
    std::map<Key, double> predicted;
    std::size_t horizon = 0;
  };
  std::vector<Model> models;
  for (const auto& [name, path] : options.forecasts) {
    Model m;
    m.name = name;
    for (const auto& row : read_forecast_csv(path, default_origin)) {
      Key key{row.origin, row.location_id, row.day_offset};
      if (!m.predicted.emplace(key, row.total_infected).second) {
        throw AlignmentError(path.string() + ": duplicate row for " + row.location_id + " at " +
                             row.origin + "+" + std::to_string(row.day_offset));
      }
      m.horizon = std::max(m.horizon, row.day_offset);
    }
    if (m.predicted.empty()) throw AlignmentError(path.string() + ": no forecast rows");
    models.push_back(std::move(m));
  }

  auto truth_of = [&](const Key& key) -> std::optional<double> {
    const auto loc = loc_index.find(std::get<1>(key));
    if (loc == loc_index.end()) return std::nullopt;
    const auto it = std::find(ds.dates.begin(), ds.dates.end(), std::get<0>(key));
    if (it == ds.dates.end()) return std::nullopt;
    const std::size_t day = static_cast<std::size_t>(it - ds.dates.begin()) + std::get<2>(key);
    if (day >= ds.days()) return std::nullopt;
    return ds.I(loc->second, day);
  };

  const auto dir = ensure_dir(config.out);
  std::vector<fs::path> written;
  for (const auto& m : models) {
    std::vector<std::string> missing;
    std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> per_loc;
    for (const auto& [key, value] : m.predicted) {
      const auto truth = truth_of(key);
      if (!truth) {
        missing.push_back(std::get<1>(key) + "@" + std::get<0>(key) + "+" + std::to_string(std::get<2>(key)));
        continue;
      }
      per_loc[std::get<1>(key)].first.push_back(value);
      per_loc[std::get<1>(key)].second.push_back(*truth);
    }
    if (!missing.empty()) {
      std::string list;
      for (std::size_t i = 0; i < missing.size() && i < 10; ++i) list += (i ? ", " : "") + missing[i];
      if (missing.size() > 10) list += ", ...";
      throw AlignmentError("model '" + m.name + "': " + std::to_string(missing.size()) +
                           " forecast rows have no truth: " + list);
    }
    std::vector<eval::LocationScore> scores;
    for (const auto& [loc, pt] : per_loc) scores.push_back(eval::score_location(loc, pt.first, pt.second));
    const auto report = eval::build_report(scores, config.eval.bootstrap, config.eval.seed);
    const fs::path path = dir / ("metrics_" + m.name + "_h" + std::to_string(m.horizon) + ".csv");
    eval::write_metrics_csv(report, path);
    written.push_back(path);
  }

  const fs::path tpath = dir / "ttest.csv";
  auto out = open_out(tpath);
  out << "model_a,model_b,n,t,df,p,test\n";
  for (std::size_t a = 0; a < models.size(); ++a) {
    for (std::size_t b = a + 1; b < models.size(); ++b) {
      std::vector<double> ea, eb;
      std::vector<std::string> unmatched;
      for (const auto& [key, va] : models[a].predicted) {
        const auto it = models[b].predicted.find(key);
        if (it == models[b].predicted.end()) {
          unmatched.push_back(std::get<1>(key) + "@" + std::get<0>(key));
          continue;
        }
        const double truth = *truth_of(key);
        ea.push_back((va - truth) * (va - truth));
        eb.push_back((it->second - truth) * (it->second - truth));
      }
      if (!unmatched.empty() || ea.size() != models[b].predicted.size()) {
        throw AlignmentError("models '" + models[a].name + "' and '" + models[b].name +
                             "' forecast different (location, day) sets" +
                             (unmatched.empty() ? "" : "; first unmatched: " + unmatched.front()));
      }
      out << models[a].name << ',' << models[b].name << ',' << ea.size() << ',';
      try {
        const auto r = eval::paired_t_test(ea, eb);
        out << csv::format_double(r.t) << ',' << csv::format_double(r.df) << ','
            << csv::format_double(r.p);
      } catch (const DegenerateError&) {
        out << "nan," << ea.size() - 1 << ",nan";
      }
      out << ",paired-two-sided\n";
    }
  }
  if (!out) throw IoError("failed writing " + tpath.string());
  written.push_back(tpath);
  return written;
}

int run(int argc, char** argv) {
  CLI::App app{"Spatio-temporal epidemic forecasting"};
  app.require_subcommand(1);
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::vector<std::string> overrides;
  app.add_option("--config", config_path, "Configuration file (key = value lines)");
  app.add_option("--seed", seed, "Seed for training, synthesis and bootstrap");
  app.add_option("--out", out_dir, "Output directory");
  app.add_option("--set", overrides, "Extra key=value setting, applied after the file")->take_all();

  auto* simulate = app.add_subcommand("simulate", "Write a synthetic metapopulation dataset");
  auto* train = app.add_subcommand("train", "Train per-location models and write an archive");
  auto* predict = app.add_subcommand("predict", "Forecast with a trained archive");
  auto* fit = app.add_subcommand("fit-baseline", "Fit SIR/SEIR baselines and write forecasts");
  auto* evaluate = app.add_subcommand("evaluate", "Score forecast files against the dataset");

  PredictOptions popts;
  std::string archive_path;
  predict->add_option("--archive", archive_path, "Archive path (default <out>/model.stan)");
  predict->add_option("--horizon", popts.horizon, "Forecast horizon; must equal the trained one");
  predict->add_flag("--rolling", popts.rolling, "Forecast from every test-span origin");

  std::vector<std::string> kinds{"sir", "persistence"};
  BaselineOptions bopts;
  fit->add_option("--kind", kinds, "sir, seir and/or persistence")->take_all();
  fit->add_option("--horizon", bopts.horizon, "Forecast horizon (default train.horizon)");
  fit->add_flag("--rolling", bopts.rolling, "Forecast from every test-span origin");
  std::string anchor = "fitted";
  fit->add_option("--anchor", anchor, "fitted (default) or observed start state");

  std::vector<std::string> forecasts;
  EvaluateOptions eopts;
  evaluate->add_option("--forecast", forecasts, "name=path of a forecast CSV")->required()->take_all();
  evaluate->add_option("--origin", eopts.origin, "Last observed date for files without origin");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    RunConfig config = config_path.empty() ? RunConfig{} : load_config(config_path);
    for (const auto& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
      apply_setting(config, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (seed) config.set_seed(*seed);
    if (out_dir) config.out = *out_dir;

    if (*simulate) {
      const auto dir = cmd_simulate(config);
      std::cout << "wrote dataset to " << dir.string() << '\n';
    } else if (*train) {
      const auto res = cmd_train(config);
      std::cout << "wrote " << res.archive.string() << " and " << res.history.string() << '\n';
    } else if (*predict) {
      popts.archive = archive_path;
      const auto path = cmd_predict(config, popts);
      std::cout << "wrote " << path.string() << '\n';
    } else if (*fit) {
      bopts.anchor = parse_anchor(anchor);
      bopts.kinds.clear();
      for (const auto& k : kinds) bopts.kinds.push_back(parse_baseline(k));
      for (const auto& p : cmd_fit_baseline(config, bopts)) std::cout << "wrote " << p.string() << '\n';
    } else if (*evaluate) {
      for (const auto& f : forecasts) {
        const auto eq = f.find('=');
        if (eq == std::string::npos || eq == 0) throw ConfigError("--forecast expects name=path, got '" + f + "'");
        eopts.forecasts.emplace_back(f.substr(0, eq), f.substr(eq + 1));
      }
      for (const auto& p : cmd_evaluate(config, eopts)) std::cout << "wrote " << p.string() << '\n';
    }
  } catch (const ScheduleError& e) {
    std::cerr << "error: " << e.what() << " (minimum " << e.minimum_days() << " days)\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e);
  }
  return 0;
}

}  // namespace stan::cli
