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
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "snnc/cache.hpp"
#include "snnc/engine.hpp"

namespace snnc {

/// Non-negative Shannon entropy (natural log). The input is renormalised and
/// floored at 1e-12 before the sum.
double entropy(std::span<const double> p);

enum class ConfidenceMode { entropy, max_prob };

std::string_view to_string(ConfidenceMode mode);
ConfidenceMode parse_confidence_mode(std::string_view name);

/// 1 - H(softmax(scores)) / ln|Y| in entropy mode, max softmax probability in
/// max_prob mode. Needs at least two classes.
double confidence(std::span<const float> scores, ConfidenceMode mode = ConfidenceMode::entropy);

/// Per-timestep exit boundaries
///   alpha[t] = alpha_base + beta * exp(-(mean_entropy[t] - min_entropy) / delta).
struct ExitPolicy {
  double alpha_base = 0.7;
  double beta = 0.2;
  double delta = 1.0;
  ConfidenceMode mode = ConfidenceMode::entropy;
  std::size_t t_max = 0;
  std::vector<double> mean_entropy;  // index t-1
  double min_entropy = 0.0;
  std::vector<double> alpha;         // index t-1

  /// Recomputes min_entropy and alpha from mean_entropy.
  void derive();
  void validate() const;
};

/// Builds a policy from given per-timestep mean entropies.
ExitPolicy make_exit_policy(std::vector<double> mean_entropy, double alpha_base, double beta, double delta,
                            ConfidenceMode mode = ConfidenceMode::entropy);

/// Runs the SNN on the cached inputs for t_max steps and averages the entropy
/// of the cumulative scores at every step.
ExitPolicy fit_exit_policy(const ModelGraph& model, std::span<const LayerSnnConfig> configs,
                           const CalibrationCache& cache, std::size_t t_max, double alpha_base, double beta,
                           double delta, ConfidenceMode mode = ConfidenceMode::entropy,
                           const RunOptions& options = {});

struct ExitRecord {
  std::size_t input_index = 0;
  std::size_t exit_t = 0;
  double confidence = 0.0;
  std::int32_t predicted = 0;
  std::int32_t label = -1;  // -1 when unlabelled
  std::uint64_t spikes = 0;  // unit spikes emitted up to exit
};

struct ExitTrace {
  std::size_t t_max = 0;
  std::vector<ExitRecord> records;
  /// Scores at each input's exit, [N, |Y|].
  Tensor scores;
  /// Unit spikes per spiking layer summed over inputs up to their exits.
  std::vector<std::uint64_t> layer_spikes;

  double mean_t() const;
  /// Fraction of labelled records predicted correctly.
  double accuracy() const;
  std::uint64_t spike_count() const;
};

/// Steps the whole batch; input i exits at the first t with
/// confidence(scores_i(t)) >= alpha[t - 1], or at t_max. Spike accounting for
/// an input stops at its exit. `labels` may be empty.
ExitTrace infer_adaptive(const ModelGraph& model, std::span<const LayerSnnConfig> configs, const ExitPolicy& policy,
                         const Tensor& batch, std::span<const std::int32_t> labels = {},
                         const RunOptions& options = {});

/// CSV with header input_index,exit_t,confidence,predicted,label.
std::string trace_to_csv(const ExitTrace& trace);

std::string policy_to_json(const ExitPolicy& policy);
ExitPolicy policy_from_json(std::string_view text);

}  // namespace snnc
