// Copyright 2026 The snnc Authors
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

#include "snnc/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "json.hpp"
#include "snnc/error.hpp"
#include "text_format.hpp"

namespace snnc {

using nlohmann::json;

namespace {

void check_keys(const json& j, std::string_view where, std::initializer_list<std::string_view> allowed) {
  if (!j.is_object()) throw ConfigError(std::string(where) + " must be an object");
  for (const auto& [key, value] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ConfigError("unknown config key '" + std::string(where) + key + "'");
    }
  }
}

template <class T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key) && !j.at(key).is_null()) out = j.at(key).get<T>();
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

void RunConfig::validate() const {
  if (timesteps < 1) throw ConfigError("timesteps must be >= 1");
  if (t_max < 1) throw ConfigError("t_max must be >= 1");
  if (calibration_samples < 1) throw ConfigError("calibration_samples must be >= 1");
  if (grid_count < 1) throw ConfigError("grid_count must be >= 1");
  for (const auto* set : {&phi_candidates, &rho_candidates}) {
    if (set->empty()) throw ConfigError("candidate sets must not be empty");
    for (int c : *set) {
      if (c < 1) throw ConfigError("candidates must be >= 1");
    }
  }
  if (e_target && !(*e_target > 0.0)) throw ConfigError("e_target must be > 0");
  if (s_target && !(*s_target > 0.0)) throw ConfigError("s_target must be > 0");
  if (!(s_slack >= 0.0)) throw ConfigError("s_slack must be >= 0");
  energy.validate();
  if (!(exit.delta > 0.0)) throw ConfigError("delta must be > 0");
  if (exit.beta < 0.0) throw ConfigError("beta must be >= 0");
  if (data.source != "synthetic" && data.source != "idx" && data.source != "csv") {
    throw ConfigError("dataset source must be synthetic, idx or csv");
  }
  if (model.arch != "mlp" && model.arch != "cnn") throw ConfigError("model arch must be mlp or cnn");
  for (auto t : report_timesteps) {
    if (t < 1) throw ConfigError("report timesteps must be >= 1");
  }
}

std::string RunConfig::to_json() const {
  json j;
  j["out"] = out.string();
  j["seed"] = seed;
  j["dataset"] = {{"source", data.source},         {"kind", data.kind},
                  {"samples", data.samples},       {"classes", data.classes},
                  {"sample_shape", data.sample_shape}, {"separation", data.separation},
                  {"noise", data.noise},           {"test_count", data.test_count},
                  {"images", data.images},         {"labels", data.labels},
                  {"test_images", data.test_images}, {"test_labels", data.test_labels},
                  {"csv", data.csv},               {"test_csv", data.test_csv},
                  {"csv_scale", data.csv_scale}};
  j["model"] = {{"arch", model.arch},     {"hidden", model.hidden},
                {"channels", model.channels}, {"epochs", model.epochs},
                {"learning_rate", model.learning_rate}, {"batch_size", model.batch_size}};
  j["timesteps"] = timesteps;
  j["t_max"] = t_max;
  j["calibration_samples"] = calibration_samples;
  j["grid_count"] = grid_count;
  j["phi_candidates"] = phi_candidates;
  j["rho_candidates"] = rho_candidates;
  j["e_target"] = optional_number(e_target);
  j["s_target"] = optional_number(s_target);
  j["s_slack"] = s_slack;
  j["energy"] = {{"mu", energy.mu}, {"mode", std::string(to_string(energy.mode))}};
  j["exit"] = {{"alpha_base", exit.alpha_base},
               {"beta", exit.beta},
               {"delta", exit.delta},
               {"confidence", std::string(to_string(exit.confidence))}};
  j["report_timesteps"] = report_timesteps;
  return j.dump(2) + "\n";
}

RunConfig RunConfig::from_json(std::string_view text) {
  RunConfig c;
  try {
    const auto j = json::parse(text);
    check_keys(j, "",
               {"out", "seed", "dataset", "model", "timesteps", "t_max", "calibration_samples", "grid_count",
                "phi_candidates", "rho_candidates", "e_target", "s_target", "s_slack", "energy", "exit",
                "report_timesteps"});
    if (j.contains("out")) c.out = j.at("out").get<std::string>();
    read(j, "seed", c.seed);
    if (j.contains("dataset")) {
      const auto& d = j.at("dataset");
      check_keys(d, "dataset.",
                 {"source", "kind", "samples", "classes", "sample_shape", "separation", "noise", "test_count",
                  "images", "labels", "test_images", "test_labels", "csv", "test_csv", "csv_scale"});
      read(d, "source", c.data.source);
      read(d, "kind", c.data.kind);
      read(d, "samples", c.data.samples);
      read(d, "classes", c.data.classes);
      read(d, "sample_shape", c.data.sample_shape);
      read(d, "separation", c.data.separation);
      read(d, "noise", c.data.noise);
      read(d, "test_count", c.data.test_count);
      read(d, "images", c.data.images);
      read(d, "labels", c.data.labels);
      read(d, "test_images", c.data.test_images);
      read(d, "test_labels", c.data.test_labels);
      read(d, "csv", c.data.csv);
      read(d, "test_csv", c.data.test_csv);
      read(d, "csv_scale", c.data.csv_scale);
    }
    if (j.contains("model")) {
      const auto& m = j.at("model");
      check_keys(m, "model.", {"arch", "hidden", "channels", "epochs", "learning_rate", "batch_size"});
      read(m, "arch", c.model.arch);
      read(m, "hidden", c.model.hidden);
      read(m, "channels", c.model.channels);
      read(m, "epochs", c.model.epochs);
      read(m, "learning_rate", c.model.learning_rate);
      read(m, "batch_size", c.model.batch_size);
    }
    read(j, "timesteps", c.timesteps);
    read(j, "t_max", c.t_max);
    read(j, "calibration_samples", c.calibration_samples);
    read(j, "grid_count", c.grid_count);
    read(j, "phi_candidates", c.phi_candidates);
    read(j, "rho_candidates", c.rho_candidates);
    if (j.contains("e_target") && !j.at("e_target").is_null()) c.e_target = j.at("e_target").get<double>();
    if (j.contains("s_target") && !j.at("s_target").is_null()) c.s_target = j.at("s_target").get<double>();
    read(j, "s_slack", c.s_slack);
    if (j.contains("energy")) {
      const auto& e = j.at("energy");
      check_keys(e, "energy.", {"mu", "mode"});
      read(e, "mu", c.energy.mu);
      if (e.contains("mode")) c.energy.mode = parse_energy_mode(e.at("mode").get<std::string>());
    }
    if (j.contains("exit")) {
      const auto& x = j.at("exit");
      check_keys(x, "exit.", {"alpha_base", "beta", "delta", "confidence"});
      read(x, "alpha_base", c.exit.alpha_base);
      read(x, "beta", c.exit.beta);
      read(x, "delta", c.exit.delta);
      if (x.contains("confidence")) c.exit.confidence = parse_confidence_mode(x.at("confidence").get<std::string>());
    }
    read(j, "report_timesteps", c.report_timesteps);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

std::pair<Dataset, Dataset> load_splits(const RunConfig& cfg) {
  const auto& d = cfg.data;
  if (d.source == "synthetic") {
    SyntheticOptions opts;
    opts.classes = d.classes;
    opts.sample_shape = d.sample_shape;
    opts.separation = d.separation;
    opts.noise = d.noise;
    const auto all = make_synthetic(d.kind, d.samples, cfg.seed, opts);
    if (d.test_count == 0 || d.test_count >= all.size()) {
      throw ConfigError("test_count must be in [1, samples)");
    }
    auto [test, train] = all.split(d.test_count);
    return {std::move(train), std::move(test)};
  }
  Dataset all, test;
  const bool separate = d.source == "idx" ? !d.test_images.empty() : !d.test_csv.empty();
  if (d.source == "idx") {
    if (d.images.empty() || d.labels.empty()) throw ConfigError("idx datasets need images and labels paths");
    all = load_idx(d.images, d.labels);
    if (separate) test = load_idx(d.test_images, d.test_labels);
  } else {
    if (d.csv.empty()) throw ConfigError("csv datasets need a csv path");
    all = load_csv(d.csv, d.sample_shape, d.csv_scale);
    if (separate) test = load_csv(d.test_csv, d.sample_shape, d.csv_scale);
  }
  if (separate) {
    test.class_count = all.class_count = std::max(all.class_count, test.class_count);
    return {std::move(all), std::move(test)};
  }
  if (d.test_count == 0 || d.test_count >= all.size()) throw ConfigError("test_count must be in [1, samples)");
  auto [head, tail] = all.split(d.test_count);
  return {std::move(tail), std::move(head)};
}

ModelGraph build_model(const RunConfig& cfg, const Shape& input_shape, std::size_t classes) {
  if (cfg.model.arch == "cnn") {
    const std::size_t hidden = cfg.model.hidden.empty() ? 64 : cfg.model.hidden.front();
    return make_cnn(input_shape, cfg.model.channels, hidden, classes, cfg.seed);
  }
  return make_mlp(input_shape, cfg.model.hidden, classes, cfg.seed);
}

TrainResult train_model(const RunConfig& cfg, const Dataset& train, const Dataset& test) {
  const auto sample_shape = train.images.sample_shape();
  ModelGraph model = build_model(cfg, sample_shape, train.class_count);
  TrainOptions opts;
  opts.epochs = cfg.model.epochs;
  opts.learning_rate = cfg.model.learning_rate;
  opts.batch_size = cfg.model.batch_size;
  opts.seed = cfg.seed;
  TrainResult r;
  r.model = train_reference(std::move(model), train.images, train.labels, opts);
  r.train_accuracy = accuracy_of(forward(r.model, train.images), train.labels);
  r.test_accuracy = accuracy_of(forward(r.model, test.images), test.labels);
  return r;
}

Conversion convert_model(const ModelGraph& ann, const Dataset& calibration, const RunConfig& cfg) {
  cfg.validate();
  Conversion c;
  const std::size_t n = std::min(cfg.calibration_samples, calibration.size());
  c.cache = build_calibration_cache(ann, calibration, n, cfg.seed);
  GridSpec grid;
  grid.count = cfg.grid_count;
  c.fits = fit_thresholds(c.cache, cfg.timesteps, 1, grid);
  std::vector<float> thresholds;
  for (const auto& f : c.fits) thresholds.push_back(f.v_th);
  c.configs = baseline_configs(thresholds);
  c.model = calibrate_biases(ann, c.configs, c.cache, cfg.timesteps);
  c.metrics = measure_unevenness(c.model, c.configs, c.cache, cfg.timesteps);
  return c;
}

Evaluation evaluate_fixed(const ModelGraph& model, std::span<const LayerSnnConfig> configs, const Dataset& data,
                          std::size_t timesteps, const EnergyModel& em) {
  const auto run = run_snn(model, configs, data.images, timesteps);
  Evaluation e;
  e.samples = data.size();
  e.accuracy = accuracy_of(run.scores, data.labels);
  e.spikes = run.stats.spike_count;
  e.layer_spikes = run.stats.layer_spikes;
  e.mean_t = static_cast<double>(timesteps);
  e.energy = energy_of(run.stats, em, layer_fanout(model)) / static_cast<double>(e.samples);
  return e;
}

Evaluation evaluate_adaptive(const ModelGraph& model, std::span<const LayerSnnConfig> configs,
                             const ExitPolicy& policy, const Dataset& data, const EnergyModel& em,
                             ExitTrace* trace_out) {
  auto trace = infer_adaptive(model, configs, policy, data.images, data.labels);
  Evaluation e;
  e.samples = data.size();
  e.accuracy = trace.accuracy();
  e.spikes = trace.spike_count();
  e.layer_spikes = trace.layer_spikes;
  e.mean_t = trace.mean_t();
  std::vector<double> counts(trace.layer_spikes.begin(), trace.layer_spikes.end());
  e.energy = energy_of_counts(counts, em, layer_fanout(model)) / static_cast<double>(e.samples);
  if (trace_out) *trace_out = std::move(trace);
  return e;
}

namespace {

std::size_t candidate_index(const SensitivityTable& table, int candidate) {
  std::size_t best = 0;
  bool found = false;
  for (std::size_t c = 0; c < table.candidates.size(); ++c) {
    if (table.candidates[c] == candidate) return c;
    if (table.candidates[c] < candidate && (!found || table.candidates[c] > table.candidates[best])) {
      best = c;
      found = true;
    }
  }
  if (!found) throw ConfigError("candidate " + std::to_string(candidate) + " is below every table candidate");
  return best;
}

}  // namespace

double uniform_energy(const SensitivityTable& table, int candidate) {
  const std::vector<std::size_t> choice(table.layer_count, candidate_index(table, candidate));
  return plan_sums(table, choice).second;
}

double uniform_sensitivity(const SensitivityTable& table, int candidate) {
  const std::vector<std::size_t> choice(table.layer_count, candidate_index(table, candidate));
  return plan_sums(table, choice).first;
}

SearchOutcome search_phi(const ModelGraph& model, std::span<const LayerSnnConfig> base, const CalibrationCache& cache,
                         const RunConfig& cfg) {
  SearchOutcome out;
  out.table = build_table(model, base, cache, cfg.timesteps, ParamKind::phi, cfg.phi_candidates, cfg.energy);
  const double cap = cfg.e_target ? *cfg.e_target : uniform_energy(out.table, 2);
  out.plan = pareto_search(out.table, SearchBudget::energy(cap));
  return out;
}

SearchOutcome search_rho(const ModelGraph& model, std::span<const LayerSnnConfig> base, const CalibrationCache& cache,
                         const RunConfig& cfg) {
  SearchOutcome out;
  out.table = build_table(model, base, cache, cfg.timesteps, ParamKind::rho, cfg.rho_candidates, cfg.energy);
  double cap = cfg.s_target ? *cfg.s_target : uniform_sensitivity(out.table, 1) + cfg.s_slack;
  if (!(cap > 0.0)) cap = cfg.s_slack > 0.0 ? cfg.s_slack : std::numeric_limits<double>::min();
  out.plan = pareto_search(out.table, SearchBudget::sensitivity(cap));
  return out;
}

ExitSweep sweep_exit(const ModelGraph& model, std::span<const LayerSnnConfig> configs, const CalibrationCache& cache,
                     const Dataset& data, std::size_t t_max, const EnergyModel& em, const ExitGrid& grid,
                     ConfidenceMode mode) {
  ExitSweep sweep;
  sweep.fixed = evaluate_fixed(model, configs, data, t_max, em);
  const auto fitted = fit_exit_policy(model, configs, cache, t_max, 0.0, 0.0, 1.0, mode);
  for (double a : grid.alpha_base) {
    for (double b : grid.beta) {
      for (double d : grid.delta) {
        const auto policy = make_exit_policy(fitted.mean_entropy, a, b, d, mode);
        const auto e = evaluate_adaptive(model, configs, policy, data, em);
        sweep.rows.push_back({a, b, d, e.mean_t, e.accuracy, e.energy});
      }
    }
  }
  return sweep;
}

std::string sweep_to_csv(const ExitSweep& sweep) {
  std::ostringstream os;
  os << "alpha_base,beta,delta,mean_t,accuracy,energy\n";
  for (const auto& r : sweep.rows) {
    os << format_double(r.alpha_base) << ',' << format_double(r.beta) << ',' << format_double(r.delta) << ','
       << format_double(r.mean_t) << ',' << format_double(r.accuracy) << ',' << format_double(r.energy) << '\n';
  }
  return os.str();
}

AblationReport run_ablation(const ModelGraph& model, std::span<const LayerSnnConfig> base,
                            const CalibrationCache& cache, const LayerPlan& phi_plan, const LayerPlan& rho_plan,
                            const Dataset& data, const RunConfig& cfg) {
  const auto with_phi = apply_plan(base, phi_plan);
  const auto with_both = apply_plan(with_phi, rho_plan);
  const auto adaptive = [&](std::span<const LayerSnnConfig> configs) {
    const auto policy = fit_exit_policy(model, configs, cache, cfg.timesteps, cfg.exit.alpha_base, cfg.exit.beta,
                                        cfg.exit.delta, cfg.exit.confidence);
    return evaluate_adaptive(model, configs, policy, data, cfg.energy);
  };
  AblationReport r;
  r.rows.push_back({"baseline", false, false, false, evaluate_fixed(model, base, data, cfg.timesteps, cfg.energy)});
  r.rows.push_back({"+AdaFire", true, false, false, evaluate_fixed(model, with_phi, data, cfg.timesteps, cfg.energy)});
  r.rows.push_back(
      {"+AdaFire+SSC", true, true, false, evaluate_fixed(model, with_both, data, cfg.timesteps, cfg.energy)});
  r.rows.push_back({"+AdaFire+IAT", true, false, true, adaptive(with_phi)});
  r.rows.push_back({"+AdaFire+SSC+IAT", true, true, true, adaptive(with_both)});
  const double e0 = r.rows.front().eval.energy;
  for (auto& row : r.rows) row.energy_delta_pct = e0 > 0.0 ? 100.0 * (row.eval.energy - e0) / e0 : 0.0;
  return r;
}

std::string ablation_to_csv(const AblationReport& report) {
  std::ostringstream os;
  os << "technique,adafire,ssc,iat,accuracy_pct,energy,energy_delta_pct,mean_t,spike_count\n";
  for (const auto& r : report.rows) {
    os << r.name << ',' << r.adafire << ',' << r.ssc << ',' << r.iat << ','
       << format_double(100.0 * r.eval.accuracy) << ',' << format_double(r.eval.energy) << ','
       << format_double(r.energy_delta_pct) << ',' << format_double(r.eval.mean_t) << ',' << r.eval.spikes
       << '\n';
  }
  return os.str();
}

std::string configs_to_json(std::span<const LayerSnnConfig> configs, std::size_t timesteps) {
  json j;
  j["timesteps"] = timesteps;
  auto layers = json::array();
  for (const auto& c : configs) layers.push_back({{"v_th", c.v_th}, {"rho", c.rho}, {"phi", c.phi}});
  j["layers"] = std::move(layers);
  return j.dump(2) + "\n";
}

std::vector<LayerSnnConfig> configs_from_json(std::string_view text) {
  std::vector<LayerSnnConfig> out;
  try {
    const auto j = json::parse(text);
    for (const auto& l : j.at("layers")) {
      LayerSnnConfig c{l.at("v_th").get<float>(), l.at("rho").get<int>(), l.at("phi").get<int>()};
      c.validate();
      out.push_back(c);
    }
  } catch (const json::exception& e) {
    throw FormatError(FormatError::Kind::malformed, std::string("spiking config: ") + e.what());
  }
  return out;
}

std::string evaluation_to_json(const Evaluation& e) {
  json j;
  j["samples"] = e.samples;
  j["accuracy"] = e.accuracy;
  j["energy"] = e.energy;
  j["mean_t"] = e.mean_t;
  j["spike_count"] = e.spikes;
  j["layer_spikes"] = e.layer_spikes;
  return j.dump(2) + "\n";
}

std::string accuracy_vs_t_csv(const ModelGraph& model, std::span<const LayerSnnConfig> configs, const Dataset& data,
                              std::span<const std::size_t> timesteps, const EnergyModel& em) {
  std::ostringstream os;
  os << "timesteps,accuracy,energy,spike_count\n";
  for (auto t : timesteps) {
    const auto e = evaluate_fixed(model, configs, data, t, em);
    os << t << ',' << format_double(e.accuracy) << ',' << format_double(e.energy) << ',' << e.spikes << '\n';
  }
  return os.str();
}

std::string frontier_csv(const LayerPlan& plan) {
  std::ostringstream os;
  os << "kind,s_sum,e_sum,values\n";
  for (const auto& p : plan.frontier) {
    os << to_string(plan.kind) << ',' << format_double(p.s_sum) << ',' << format_double(p.e_sum) << ',';
    for (std::size_t i = 0; i < p.values.size(); ++i) os << (i ? ";" : "") << p.values[i];
    os << '\n';
  }
  return os.str();
}

std::string exit_histogram_csv(const ExitTrace& trace) {
  std::vector<std::size_t> counts(trace.t_max + 1, 0);
  for (const auto& r : trace.records) ++counts.at(r.exit_t);
  std::ostringstream os;
  os << "exit_t,count\n";
  for (std::size_t t = 1; t <= trace.t_max; ++t) os << t << ',' << counts[t] << '\n';
  return os.str();
}

}  // namespace snnc
