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

#include <cmath>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "snnc/error.hpp"
#include "snnc/io.hpp"
#include "snnc/model_store.hpp"
#include "snnc/pipeline.hpp"

namespace fs = std::filesystem;
using namespace snnc;

namespace {

// File names inside the run directory.
constexpr const char* kConfig = "config.json";
constexpr const char* kModel = "model.snnc";
constexpr const char* kConverted = "converted.snnc";
constexpr const char* kCache = "cache.snca";
constexpr const char* kSnnConfig = "snn_config.json";
constexpr const char* kCalibration = "calibration_report.json";
constexpr const char* kPhiTable = "phi_table.csv";
constexpr const char* kPhiPlan = "phi_plan.json";
constexpr const char* kRhoTable = "rho_table.csv";
constexpr const char* kRhoPlan = "rho_plan.json";
constexpr const char* kPolicy = "exit_policy.json";

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::size_t> timesteps, t_max;
  std::optional<double> mu, e_target, s_target, alpha_base, beta, delta;
  std::optional<std::string> energy_mode;
};

class Stage {
 public:
  Stage(std::string name, RunConfig cfg) : name_(std::move(name)), cfg_(std::move(cfg)) {}

  const RunConfig& cfg() const { return cfg_; }
  fs::path path(const char* file) const { return cfg_.out / file; }

  void require(std::initializer_list<const char*> files) const {
    std::string missing;
    for (const char* f : files) {
      if (!fs::exists(path(f))) missing += std::string(missing.empty() ? "" : ", ") + f;
    }
    if (!missing.empty()) {
      throw ConfigError("missing artifacts in '" + cfg_.out.string() + "': " + missing);
    }
  }

  void write(const char* file, std::string_view text) const {
    write_file_atomic(path(file), text);
    std::cout << name_ << ": wrote " << path(file).string() << "\n";
  }

  Dataset test_split() const { return load_splits(cfg_).second; }

  std::vector<LayerSnnConfig> base_configs() const { return configs_from_json(read_file_text(path(kSnnConfig))); }

  std::optional<LayerPlan> plan(const char* file) const {
    if (!fs::exists(path(file))) return std::nullopt;
    return plan_from_json(read_file_text(path(file)));
  }

  /// Base configs with whichever plans exist applied in pipeline order.
  std::vector<LayerSnnConfig> tuned_configs() const {
    auto configs = base_configs();
    if (auto p = plan(kPhiPlan)) configs = apply_plan(configs, *p);
    if (auto p = plan(kRhoPlan)) configs = apply_plan(configs, *p);
    return configs;
  }

 private:
  std::string name_;
  RunConfig cfg_;
};

RunConfig resolve_config(const Overrides& o) {
  RunConfig cfg;
  if (!o.config.empty()) {
    cfg = RunConfig::from_json(read_file_text(o.config));
  } else {
    const fs::path out = o.out ? fs::path(*o.out) : cfg.out;
    if (fs::exists(out / kConfig)) cfg = RunConfig::from_json(read_file_text(out / kConfig));
  }
  if (o.out) cfg.out = *o.out;
  if (o.seed) cfg.seed = *o.seed;
  if (o.timesteps) cfg.timesteps = *o.timesteps;
  if (o.t_max) cfg.t_max = *o.t_max;
  if (o.mu) cfg.energy.mu = *o.mu;
  if (o.energy_mode) cfg.energy.mode = parse_energy_mode(*o.energy_mode);
  if (o.e_target) cfg.e_target = *o.e_target;
  if (o.s_target) cfg.s_target = *o.s_target;
  if (o.alpha_base) cfg.exit.alpha_base = *o.alpha_base;
  if (o.beta) cfg.exit.beta = *o.beta;
  if (o.delta) cfg.exit.delta = *o.delta;
  cfg.validate();
  return cfg;
}

void cmd_train(const Stage& st) {
  auto [train, test] = load_splits(st.cfg());
  const auto r = train_model(st.cfg(), train, test);
  save_model(r.model, st.path(kModel));
  std::cout << "train: wrote " << st.path(kModel).string() << "\n";
  st.write(kConfig, st.cfg().to_json());
  nlohmann::json j;
  j["train_accuracy"] = r.train_accuracy;
  j["test_accuracy"] = r.test_accuracy;
  j["model_digest"] = model_digest(r.model);
  st.write("train_report.json", j.dump(2) + "\n");
}

void cmd_convert(const Stage& st) {
  st.require({kModel});
  const auto ann = load_model(st.path(kModel));
  const auto train = load_splits(st.cfg()).first;
  const auto c = convert_model(ann, train, st.cfg());
  save_model(c.model, st.path(kConverted));
  std::cout << "convert: wrote " << st.path(kConverted).string() << "\n";
  save_cache(c.cache, st.path(kCache));
  std::cout << "convert: wrote " << st.path(kCache).string() << "\n";
  st.write(kSnnConfig, configs_to_json(c.configs, st.cfg().timesteps));
  st.write(kCalibration, calibration_report(c.fits, c.configs, c.metrics, st.cfg().timesteps));
}

void cmd_search(const Stage& st, ParamKind kind) {
  st.require({kConverted, kCache, kSnnConfig});
  const auto model = load_model(st.path(kConverted));
  const auto cache = load_cache(st.path(kCache));
  auto base = st.base_configs();
  SearchOutcome r;
  if (kind == ParamKind::phi) {
    r = search_phi(model, base, cache, st.cfg());
  } else {
    if (auto p = st.plan(kPhiPlan)) base = apply_plan(base, *p);
    r = search_rho(model, base, cache, st.cfg());
  }
  st.write(kind == ParamKind::phi ? kPhiTable : kRhoTable, table_to_csv(r.table));
  st.write(kind == ParamKind::phi ? kPhiPlan : kRhoPlan, plan_to_json(r.plan));
  if (!r.plan.feasible) std::cout << to_string(kind) << " search: budget infeasible, kept the cheapest plan\n";
}

void cmd_fit_exit(const Stage& st) {
  st.require({kConverted, kCache, kSnnConfig});
  const auto model = load_model(st.path(kConverted));
  const auto cache = load_cache(st.path(kCache));
  const auto configs = st.tuned_configs();
  const auto& x = st.cfg().exit;
  const auto policy =
      fit_exit_policy(model, configs, cache, st.cfg().t_max, x.alpha_base, x.beta, x.delta, x.confidence);
  st.write(kPolicy, policy_to_json(policy));
  ExitTrace trace;
  evaluate_adaptive(model, configs, policy, st.test_split(), st.cfg().energy, &trace);
  st.write("exit_trace.csv", trace_to_csv(trace));
}

void cmd_eval(const Stage& st) {
  st.require({kConverted, kSnnConfig});
  const auto model = load_model(st.path(kConverted));
  const auto configs = st.tuned_configs();
  const auto test = st.test_split();
  nlohmann::json j;
  if (fs::exists(st.path(kModel))) {
    j["ann_accuracy"] = accuracy_of(forward(load_model(st.path(kModel)), test.images), test.labels);
  }
  j["phi_plan"] = fs::exists(st.path(kPhiPlan));
  j["rho_plan"] = fs::exists(st.path(kRhoPlan));
  j["fixed"] = nlohmann::json::parse(
      evaluation_to_json(evaluate_fixed(model, configs, test, st.cfg().timesteps, st.cfg().energy)));
  if (fs::exists(st.path(kPolicy))) {
    const auto policy = policy_from_json(read_file_text(st.path(kPolicy)));
    j["adaptive"] =
        nlohmann::json::parse(evaluation_to_json(evaluate_adaptive(model, configs, policy, test, st.cfg().energy)));
  }
  st.write("eval.json", j.dump(2) + "\n");
}

void cmd_ablate(const Stage& st) {
  st.require({kConverted, kCache, kSnnConfig, kPhiPlan, kRhoPlan});
  const auto model = load_model(st.path(kConverted));
  const auto cache = load_cache(st.path(kCache));
  const auto report = run_ablation(model, st.base_configs(), cache, *st.plan(kPhiPlan), *st.plan(kRhoPlan),
                                   st.test_split(), st.cfg());
  st.write("ablation.csv", ablation_to_csv(report));
}

void cmd_report(const Stage& st) {
  st.require({kConverted, kCache, kSnnConfig, kPhiPlan, kRhoPlan, kPolicy});
  const auto model = load_model(st.path(kConverted));
  const auto configs = st.tuned_configs();
  const auto test = st.test_split();
  st.write("accuracy_vs_t.csv", accuracy_vs_t_csv(model, configs, test, st.cfg().report_timesteps, st.cfg().energy));
  auto frontier = frontier_csv(*st.plan(kPhiPlan));
  const auto rho = frontier_csv(*st.plan(kRhoPlan));
  frontier += rho.substr(rho.find('\n') + 1);
  st.write("frontier.csv", frontier);
  const auto policy = policy_from_json(read_file_text(st.path(kPolicy)));
  ExitTrace trace;
  evaluate_adaptive(model, configs, policy, test, st.cfg().energy, &trace);
  st.write("exit_histogram.csv", exit_histogram_csv(trace));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"snnc: ANN-to-SNN conversion with burst, threshold and timestep tuning"};
  app.require_subcommand(1);
  app.fallthrough();
  Overrides o;
  app.add_option("--config", o.config, "JSON run config");
  app.add_option("--seed", o.seed, "Random seed");
  app.add_option("--out", o.out, "Run directory");
  app.add_option("--timesteps", o.timesteps, "Simulation timesteps T");
  app.add_option("--t-max", o.t_max, "Timestep budget for adaptive inference");
  app.add_option("--mu", o.mu, "Energy per spike in joules");
  app.add_option("--energy-mode", o.energy_mode, "spike_count or synop");
  app.add_option("--e-target", o.e_target, "Energy budget of the phi search");
  app.add_option("--s-target", o.s_target, "Sensitivity budget of the rho search");
  app.add_option("--alpha-base", o.alpha_base, "Base exit boundary");
  app.add_option("--beta", o.beta, "Exit boundary scale");
  app.add_option("--delta", o.delta, "Exit boundary decay");

  const std::map<std::string, std::string> commands = {
      {"train", "Train the reference ANN"},
      {"convert", "Fit thresholds, calibrate biases and cache calibration data"},
      {"search-phi", "Per-layer burst cap search under an energy budget"},
      {"search-rho", "Per-layer threshold ratio search under a sensitivity budget"},
      {"fit-exit", "Fit per-timestep exit boundaries"},
      {"eval", "Evaluate the tuned SNN on the test split"},
      {"ablate", "Five-row technique ablation"},
      {"report", "Plot data: accuracy vs T, frontiers, exit histogram"}};
  for (const auto& [name, help] : commands) app.add_subcommand(name, help);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  try {
    const Stage st(name, resolve_config(o));
    if (name == "train") cmd_train(st);
    else if (name == "convert") cmd_convert(st);
    else if (name == "search-phi") cmd_search(st, ParamKind::phi);
    else if (name == "search-rho") cmd_search(st, ParamKind::rho);
    else if (name == "fit-exit") cmd_fit_exit(st);
    else if (name == "eval") cmd_eval(st);
    else if (name == "ablate") cmd_ablate(st);
    else if (name == "report") cmd_report(st);
  } catch (const InvariantError& e) {
    std::cerr << name << ": internal invariant violated: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << name << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << name << ": unexpected failure: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
