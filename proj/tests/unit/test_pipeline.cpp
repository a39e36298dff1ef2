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

#include "doctest.h"
#include "json.hpp"
#include "snnc/error.hpp"
#include "snnc/model_store.hpp"
#include "snnc/pipeline.hpp"

using namespace snnc;

namespace {

RunConfig tiny() {
  RunConfig c;
  c.data.samples = 400;
  c.data.classes = 4;
  c.data.sample_shape = {6};
  c.data.test_count = 100;
  c.model.hidden = {16, 12};
  c.model.epochs = 8;
  c.calibration_samples = 64;
  c.grid_count = 16;
  c.t_max = 8;
  c.report_timesteps = {1, 4};
  return c;
}

}  // namespace

TEST_CASE("run config json round trip") {
  auto c = tiny();
  c.e_target = 1.5e-9;
  c.energy.mode = EnergyMode::synop;
  c.exit.confidence = ConfidenceMode::max_prob;
  const auto back = RunConfig::from_json(c.to_json());
  CHECK(back.to_json() == c.to_json());
  CHECK(back.e_target == c.e_target);
  CHECK_FALSE(back.s_target.has_value());
  CHECK(back.data.sample_shape == Shape{6});
  CHECK(RunConfig::from_json("{}").to_json() == RunConfig{}.to_json());
}

TEST_CASE("run config rejects bad input") {
  CHECK_THROWS_AS(RunConfig::from_json("{\"timestep\": 4}"), ConfigError);
  CHECK_THROWS_AS(RunConfig::from_json("{\"dataset\": {\"sampels\": 4}}"), ConfigError);
  CHECK_THROWS_AS(RunConfig::from_json("{\"timesteps\": 0}"), ConfigError);
  CHECK_THROWS_AS(RunConfig::from_json("{\"timesteps\": \"four\"}"), ConfigError);
  CHECK_THROWS_AS(RunConfig::from_json("[1, 2]"), ConfigError);
  CHECK_THROWS_AS(RunConfig::from_json("{"), ConfigError);
  auto c = tiny();
  c.phi_candidates = {};
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = tiny();
  c.exit.delta = 0.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = tiny();
  c.model.arch = "rnn";
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = tiny();
  c.data.test_count = c.data.samples;
  CHECK_THROWS_AS(load_splits(c), ConfigError);
}

TEST_CASE("splits are disjoint and deterministic") {
  const auto c = tiny();
  const auto [train, test] = load_splits(c);
  CHECK(train.size() == 300);
  CHECK(test.size() == 100);
  const auto [train2, test2] = load_splits(c);
  CHECK(train.images == train2.images);
  CHECK(test.labels == test2.labels);
}

TEST_CASE("spiking config json round trip") {
  const std::vector<LayerSnnConfig> cfg{{0.375f, 2, 1}, {1.1f, 1, 4}};
  const auto text = configs_to_json(cfg, 4);
  const auto back = configs_from_json(text);
  REQUIRE(back.size() == 2);
  CHECK(back[0].v_th == 0.375f);
  CHECK(back[0].rho == 2);
  CHECK(back[1].v_th == 1.1f);
  CHECK(back[1].phi == 4);
  CHECK(configs_to_json(back, 4) == text);
  CHECK_THROWS_AS(configs_from_json("{\"layers\": [{\"v_th\": -1, \"rho\": 1, \"phi\": 1}]}"), ConfigError);
  CHECK_THROWS_AS(configs_from_json("{\"layers\": [{\"v_th\": 1}]}"), FormatError);
}

TEST_CASE("small end to end run") {
  const auto c = tiny();
  const auto [train, test] = load_splits(c);
  const auto trained = train_model(c, train, test);
  CHECK(trained.test_accuracy > 0.5);
  const auto conv = convert_model(trained.model, train, c);
  CHECK(conv.configs.size() == 2);
  CHECK(conv.cache.sample_count() == 64);
  CHECK(conv.model.source_digest == model_digest(trained.model));

  const auto fixed = evaluate_fixed(conv.model, conv.configs, test, c.timesteps, c.energy);
  CHECK(fixed.samples == 100);
  CHECK(fixed.mean_t == 4.0);
  CHECK(fixed.energy == doctest::Approx(double(fixed.spikes) / 100.0 / 1e-3 * c.energy.mu));

  const auto phi = search_phi(conv.model, conv.configs, conv.cache, c);
  CHECK(phi.plan.values.size() == 2);
  CHECK(phi.plan.budget.cap == doctest::Approx(uniform_energy(phi.table, 2)));
  const auto tuned = apply_plan(conv.configs, phi.plan);
  const auto rho = search_rho(conv.model, tuned, conv.cache, c);
  CHECK(rho.plan.budget.cap == doctest::Approx(uniform_sensitivity(rho.table, 1) + c.s_slack));
  CHECK(rho.plan.feasible);

  const auto ab = run_ablation(conv.model, conv.configs, conv.cache, phi.plan, rho.plan, test, c);
  REQUIRE(ab.rows.size() == 5);
  CHECK(ab.rows[0].name == "baseline");
  CHECK(ab.rows[0].energy_delta_pct == 0.0);
  const auto csv = ablation_to_csv(ab);
  CHECK(csv.rfind("technique,adafire,ssc,iat,accuracy_pct,energy,energy_delta_pct,mean_t,spike_count\n", 0) == 0);
  CHECK(ablation_to_csv(run_ablation(conv.model, conv.configs, conv.cache, phi.plan, rho.plan, test, c)) == csv);

  const auto j = nlohmann::json::parse(evaluation_to_json(fixed));
  CHECK(j.at("samples") == 100);
  const auto acc = accuracy_vs_t_csv(conv.model, conv.configs, test, c.report_timesteps, c.energy);
  CHECK(acc.rfind("timesteps,accuracy,energy,spike_count\n1,", 0) == 0);
  CHECK(frontier_csv(phi.plan).rfind("kind,s_sum,e_sum,values\n", 0) == 0);
}
