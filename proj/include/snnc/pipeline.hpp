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

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "snnc/cache.hpp"
#include "snnc/calibration.hpp"
#include "snnc/dataset.hpp"
#include "snnc/engine.hpp"
#include "snnc/iat.hpp"
#include "snnc/search.hpp"
#include "snnc/trainer.hpp"

namespace snnc {

struct DatasetConfig {
  std::string source = "synthetic";  // synthetic | idx | csv
  std::string kind = "blobs";
  std::size_t samples = 3000;
  std::size_t classes = 10;
  Shape sample_shape = {8};
  float separation = 3.0f;
  float noise = 1.0f;
  /// Held-out samples taken from the front of the (shuffled) set when no
  /// separate test files are given.
  std::size_t test_count = 1000;
  std::string images, labels, test_images, test_labels;
  std::string csv, test_csv;
  float csv_scale = 1.0f;
};

struct ModelConfig {
  std::string arch = "mlp";  // mlp | cnn
  std::vector<std::size_t> hidden = {128, 64};
  std::vector<std::size_t> channels = {8, 16};
  std::size_t epochs = 30;
  float learning_rate = 0.05f;
  std::size_t batch_size = 32;
};

struct ExitConfig {
  double alpha_base = 0.7;
  double beta = 0.2;
  double delta = 1.0;
  ConfidenceMode confidence = ConfidenceMode::entropy;
};

/// Everything a pipeline command needs. Serialises to and from JSON; unknown
/// keys are rejected.
struct RunConfig {
  std::filesystem::path out = "snnc_run";
  std::uint64_t seed = 1;
  DatasetConfig data;
  ModelConfig model;
  std::size_t timesteps = 4;
  std::size_t t_max = 16;
  std::size_t calibration_samples = kDefaultCalibrationSamples;
  std::size_t grid_count = 64;
  std::vector<int> phi_candidates = default_candidates(ParamKind::phi);
  std::vector<int> rho_candidates = default_candidates(ParamKind::rho);
  /// Unset: the table energy of uniform phi = 2.
  std::optional<double> e_target;
  /// Unset: the all-rho-1 table sensitivity plus s_slack.
  std::optional<double> s_target;
  double s_slack = 0.02;
  EnergyModel energy;
  ExitConfig exit;
  std::vector<std::size_t> report_timesteps = {1, 2, 4, 8, 16, 32};

  void validate() const;
  std::string to_json() const;
  static RunConfig from_json(std::string_view text);
};

/// Train and test splits described by the config.
std::pair<Dataset, Dataset> load_splits(const RunConfig& cfg);

ModelGraph build_model(const RunConfig& cfg, const Shape& input_shape, std::size_t classes);

struct TrainResult {
  ModelGraph model;
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
};

TrainResult train_model(const RunConfig& cfg, const Dataset& train, const Dataset& test);

struct Conversion {
  ModelGraph model;  // bias-calibrated
  CalibrationCache cache;
  std::vector<LayerSnnConfig> configs;
  std::vector<ThresholdFit> fits;
  ConversionMetrics metrics;
};

/// Builds the cache from `calibration`, fits thresholds at the configured T
/// with phi = 1, calibrates biases and measures the conversion error.
Conversion convert_model(const ModelGraph& ann, const Dataset& calibration, const RunConfig& cfg);

struct Evaluation {
  std::size_t samples = 0;
  double accuracy = 0.0;
  /// Per-inference energy.
  double energy = 0.0;
  double mean_t = 0.0;
  std::uint64_t spikes = 0;
  std::vector<std::uint64_t> layer_spikes;
};

Evaluation evaluate_fixed(const ModelGraph& model, std::span<const LayerSnnConfig> configs, const Dataset& data,
                          std::size_t timesteps, const EnergyModel& em);
Evaluation evaluate_adaptive(const ModelGraph& model, std::span<const LayerSnnConfig> configs,
                             const ExitPolicy& policy, const Dataset& data, const EnergyModel& em,
                             ExitTrace* trace = nullptr);

struct SearchOutcome {
  SensitivityTable table;
  LayerPlan plan;
};

/// Table sums of the plan using `candidate` on every layer (or the largest
/// candidate below it when absent).
double uniform_energy(const SensitivityTable& table, int candidate);
double uniform_sensitivity(const SensitivityTable& table, int candidate);

SearchOutcome search_phi(const ModelGraph& model, std::span<const LayerSnnConfig> base, const CalibrationCache& cache,
                         const RunConfig& cfg);
/// `base` should already carry the phi plan.
SearchOutcome search_rho(const ModelGraph& model, std::span<const LayerSnnConfig> base, const CalibrationCache& cache,
                         const RunConfig& cfg);

struct SweepRow {
  double alpha_base = 0.0, beta = 0.0, delta = 0.0;
  double mean_t = 0.0;
  double accuracy = 0.0;
  double energy = 0.0;
};

struct ExitSweep {
  Evaluation fixed;  // full t_max
  std::vector<SweepRow> rows;
};

/// Default IAT grid: alpha_base {0.5 .. 0.9}, beta {0, 0.05, 0.1, 0.2},
/// delta {0.1, 0.5, 1}.
struct ExitGrid {
  std::vector<double> alpha_base = {0.5, 0.6, 0.7, 0.8, 0.9};
  std::vector<double> beta = {0.0, 0.05, 0.1, 0.2};
  std::vector<double> delta = {0.1, 0.5, 1.0};
};

/// Fits a policy on the cache for every grid point and evaluates it on `data`.
ExitSweep sweep_exit(const ModelGraph& model, std::span<const LayerSnnConfig> configs, const CalibrationCache& cache,
                     const Dataset& data, std::size_t t_max, const EnergyModel& em, const ExitGrid& grid = {},
                     ConfidenceMode mode = ConfidenceMode::entropy);

std::string sweep_to_csv(const ExitSweep& sweep);

struct AblationRow {
  std::string name;
  bool adafire = false, ssc = false, iat = false;
  Evaluation eval;
  double energy_delta_pct = 0.0;  // vs the baseline row
};

struct AblationReport {
  std::vector<AblationRow> rows;  // baseline first
};

/// The five technique combinations evaluated at the configured T (IAT uses it
/// as T_max with the configured exit parameters).
AblationReport run_ablation(const ModelGraph& model, std::span<const LayerSnnConfig> base,
                            const CalibrationCache& cache, const LayerPlan& phi_plan, const LayerPlan& rho_plan,
                            const Dataset& data, const RunConfig& cfg);

std::string ablation_to_csv(const AblationReport& report);

/// Per-layer spiking configs as JSON.
std::string configs_to_json(std::span<const LayerSnnConfig> configs, std::size_t timesteps);
std::vector<LayerSnnConfig> configs_from_json(std::string_view text);

std::string evaluation_to_json(const Evaluation& eval);

std::string accuracy_vs_t_csv(const ModelGraph& model, std::span<const LayerSnnConfig> configs, const Dataset& data,
                              std::span<const std::size_t> timesteps, const EnergyModel& em);
/// Frontier points of a plan: s_sum,e_sum,values (values joined by ';').
std::string frontier_csv(const LayerPlan& plan);
/// exit_t,count for t = 1..t_max.
std::string exit_histogram_csv(const ExitTrace& trace);

}  // namespace snnc
