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

#include <span>
#include <string>
#include <vector>

#include "snnc/cache.hpp"
#include "snnc/engine.hpp"

namespace snnc {

/// The rate an IF neuron with threshold v_th and burst cap phi can express in
/// T timesteps: (v_th / T) * clip(floor(T * x / v_th), 0, T * phi).
float clip_floor(float x, std::size_t timesteps, float v_th, int phi);
Tensor clip_floor(const Tensor& x, std::size_t timesteps, float v_th, int phi);

/// Candidate thresholds for fit_threshold.
///
/// With `candidates` empty, the grid is `count` geometrically spaced values
/// from the `low_percentile` of the positive activations to their maximum
/// (which is at or above the `high_percentile`).
struct GridSpec {
  std::vector<float> candidates;
  std::size_t count = 64;
  double low_percentile = 50.0;
  double high_percentile = 99.9;

  static GridSpec fixed(std::vector<float> values) {
    GridSpec g;
    g.candidates = std::move(values);
    return g;
  }
};

/// Ascending, de-duplicated candidate list. All-zero activations with a
/// percentile grid yield {1.0}.
std::vector<float> threshold_grid(std::span<const float> activations, const GridSpec& spec);

/// Linear-interpolated percentile of `values` (0..100). Sorts a copy.
double percentile(std::vector<float> values, double pct);

struct ThresholdFit {
  std::size_t layer = 0;
  float v_th = 1.0f;
  std::vector<float> grid;
  std::vector<double> mse;
  /// Set when the activations were all zero and the smallest candidate was
  /// returned without a real fit.
  bool degenerate = false;
};

/// Grid search for the threshold minimising mean((clip_floor(a) - a)^2) over
/// every activation sample. Ties go to the smaller threshold.
ThresholdFit fit_threshold(const Tensor& activations, std::size_t timesteps, int phi, const GridSpec& grid,
                           std::size_t layer = 0);

/// fit_threshold for every spiking layer of the cache.
std::vector<ThresholdFit> fit_thresholds(const CalibrationCache& cache, std::size_t timesteps, int phi,
                                         const GridSpec& grid);

/// Per-channel mean of (ann_tap - snn_rate). Channels are axis 1; a conv
/// tap [N, C, H, W] averages over N, H and W.
std::vector<float> channel_mean_error(const Tensor& ann_tap, const Tensor& snn_rate);

/// Layer-by-layer bias correction: for each spiking layer in order, runs the
/// SNN on the calibration inputs and adds the per-channel mean error to the
/// bias of the layer feeding it. The result remembers the source model's
/// digest so the same cache stays valid for it.
ModelGraph calibrate_biases(const ModelGraph& model, std::span<const LayerSnnConfig> configs,
                            const CalibrationCache& cache, std::size_t timesteps, const RunOptions& options = {});

/// Sums of squared error components. The signed components add up to the
/// total error snn_rate - ann_tap:
///   clipping      min(x, V*phi) - x
///   quantization  clip_floor(x) - min(x, V*phi)
///   unevenness    snn_rate - clip_floor(x)
struct ErrorBreakdown {
  double clipping = 0.0;
  double quantization = 0.0;
  double unevenness = 0.0;

  double total() const noexcept { return clipping + quantization + unevenness; }
  /// Share of each component in percent; all zero when there is no error.
  double clipping_pct() const noexcept;
  double quantization_pct() const noexcept;
  double unevenness_pct() const noexcept;
};

struct LayerConversionMetrics {
  std::size_t layer = 0;
  /// snn_rate - ann_tap.
  Tensor error;
  double mean_abs = 0.0;
  double max_abs = 0.0;
  ErrorBreakdown breakdown;
};

struct ConversionMetrics {
  std::vector<LayerConversionMetrics> layers;

  /// Mean over layers of each layer's mean |error|.
  double mean_abs_error() const;
};

LayerConversionMetrics decompose_layer_error(const Tensor& ann_tap, const Tensor& snn_rate, std::size_t timesteps,
                                             const LayerSnnConfig& cfg, std::size_t layer = 0);

/// Runs the SNN on the cached inputs and compares every spiking layer's rate
/// with the cached ANN tap.
ConversionMetrics measure_unevenness(const ModelGraph& model, std::span<const LayerSnnConfig> configs,
                                     const CalibrationCache& cache, std::size_t timesteps,
                                     const RunOptions& options = {});

/// JSON document with per-layer thresholds, MSE curves and error breakdown.
std::string calibration_report(std::span<const ThresholdFit> fits, std::span<const LayerSnnConfig> configs,
                               const ConversionMetrics& metrics, std::size_t timesteps);

}  // namespace snnc
