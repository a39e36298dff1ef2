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

#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "snnc/cache.hpp"
#include "snnc/engine.hpp"

namespace snnc {

/// Which per-layer parameter a table or plan is about: burst cap phi or
/// threshold ratio rho.
enum class ParamKind { phi, rho };

std::string_view to_string(ParamKind kind);
ParamKind parse_param_kind(std::string_view name);

/// Default candidate sets: phi {1, 2, 3, 4}, rho {1, 2, 4}.
std::vector<int> default_candidates(ParamKind kind);

enum class EnergyMode { spike_count, synop };

std::string_view to_string(EnergyMode mode);
EnergyMode parse_energy_mode(std::string_view name);

/// Spike energy: spikes / 1e-3 * mu, where "spikes" is the unit spike count
/// (spike_count mode) or each spike weighted by its layer's fan-out (synop).
struct EnergyModel {
  double mu = 77e-15;
  EnergyMode mode = EnergyMode::spike_count;

  void validate() const;
};

/// Number of downstream synapses reached by one spike of each spiking layer.
std::vector<double> layer_fanout(const ModelGraph& model);

/// Energy of weighted per-layer spike counts.
double energy_of_counts(std::span<const double> layer_spikes, const EnergyModel& em,
                        std::span<const double> fanout = {});

/// Energy of a finished run. `fanout` is required in synop mode.
double energy_of(const RunStats& stats, const EnergyModel& em, std::span<const double> fanout = {});

std::vector<double> softmax(std::span<const float> scores);

/// KL(p || q) with natural log; both sides floored at 1e-12.
double kl_divergence(std::span<const double> p, std::span<const double> q);

/// Mean over rows of KL(softmax(reference) || softmax(scores)).
double mean_kl(const Tensor& reference_logits, const Tensor& scores);

struct Measurement {
  double sensitivity = 0.0;
  /// Per-inference energy attributed to the measured layer.
  double energy = 0.0;
};

/// Sets layer `layer` to `candidate` (all others keep `base`), runs the SNN on
/// the cached inputs and reports the mean KL against the ANN logits and the
/// energy of that layer's spikes per sample.
Measurement layer_sensitivity(const ModelGraph& model, std::span<const LayerSnnConfig> base, std::size_t layer,
                              ParamKind kind, int candidate, const CalibrationCache& cache, std::size_t timesteps,
                              const EnergyModel& em, const RunOptions& options = {});

struct SensitivityRow {
  std::size_t layer = 0;
  int candidate = 1;
  double sensitivity = 0.0;
  double energy = 0.0;

  friend bool operator==(const SensitivityRow&, const SensitivityRow&) = default;
};

/// Rows are stored layer-major: row (layer, c) sits at layer * n + c.
struct SensitivityTable {
  ParamKind kind = ParamKind::phi;
  std::size_t sample_count = 0;
  std::size_t layer_count = 0;
  std::vector<int> candidates;
  std::vector<SensitivityRow> rows;

  const SensitivityRow& at(std::size_t layer, std::size_t candidate_index) const;

  /// Throws ConfigError if any (layer, candidate) row is missing or values are
  /// negative or not finite.
  void validate() const;

  friend bool operator==(const SensitivityTable&, const SensitivityTable&) = default;
};

SensitivityTable build_table(const ModelGraph& model, std::span<const LayerSnnConfig> base,
                             const CalibrationCache& cache, std::size_t timesteps, ParamKind kind,
                             std::span<const int> candidates, const EnergyModel& em, const RunOptions& options = {});

/// Cap on total energy (phi search) or total sensitivity (rho search).
struct SearchBudget {
  enum class Kind { energy_cap, sensitivity_cap };
  Kind kind = Kind::energy_cap;
  double cap = std::numeric_limits<double>::infinity();

  static SearchBudget energy(double cap) { return {Kind::energy_cap, cap}; }
  static SearchBudget sensitivity(double cap) { return {Kind::sensitivity_cap, cap}; }
};

enum class SearchMethod { lagrangian, exhaustive };

struct FrontierPoint {
  double s_sum = 0.0;
  double e_sum = 0.0;
  std::vector<int> values;
};

struct LayerPlan {
  ParamKind kind = ParamKind::phi;
  std::vector<int> values;           // chosen candidate per layer
  std::vector<std::size_t> choice;   // index into the table's candidates
  double s_sum = 0.0;
  double e_sum = 0.0;
  bool feasible = true;
  SearchBudget budget;
  /// Mutually non-dominated (S_sum, E_sum) points met during the search,
  /// ascending in energy.
  std::vector<FrontierPoint> frontier;
};

/// Table sums for a choice of candidate indices, accumulated in layer order.
std::pair<double, double> plan_sums(const SensitivityTable& table, std::span<const std::size_t> choice);

/// Budgeted per-layer selection.
///
/// phi tables: minimise sum S subject to sum E <= cap. rho tables: minimise
/// sum E subject to sum S <= cap. The Lagrangian method sweeps a trade-off
/// multiplier (61 log-spaced values in [1e-6, 1e6] on range-normalised
/// costs, plus every exact breakpoint of the per-layer choices and both
/// extremes) and keeps the best feasible plan met; ties go to lower energy.
/// When no plan fits the cap, the result has feasible == false and carries
/// the plan using the least of the capped resource.
LayerPlan pareto_search(const SensitivityTable& table, const SearchBudget& budget,
                        SearchMethod method = SearchMethod::lagrangian);

/// Overwrites phi or rho per layer; thresholds follow as rho * v_th.
std::vector<LayerSnnConfig> apply_plan(std::span<const LayerSnnConfig> configs, const LayerPlan& plan);

/// CSV with header layer,candidate,kind,S,E,N.
std::string table_to_csv(const SensitivityTable& table);
SensitivityTable table_from_csv(std::string_view text);

std::string plan_to_json(const LayerPlan& plan);
LayerPlan plan_from_json(std::string_view text);

}  // namespace snnc
