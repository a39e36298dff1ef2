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

#include "snnc/calibration.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"
#include "snnc/error.hpp"
#include "snnc/model_store.hpp"

namespace snnc {

namespace {

void check_quantizer(std::size_t timesteps, float v_th, int phi) {
  if (timesteps < 1) throw ConfigError("timesteps must be >= 1");
  if (!(v_th > 0.0f) || !std::isfinite(v_th)) throw ConfigError("v_th must be positive");
  if (phi < 1) throw ConfigError("phi must be >= 1");
}

inline double clip_floor_unchecked(double x, double t, double v_th, double phi) {
  double q = std::floor(t * x / v_th);
  q = std::clamp(q, 0.0, t * phi);
  return v_th / t * q;
}

}  // namespace

float clip_floor(float x, std::size_t timesteps, float v_th, int phi) {
  check_quantizer(timesteps, v_th, phi);
  if (!std::isfinite(x)) throw ConfigError("clip_floor input is not finite");
  return static_cast<float>(clip_floor_unchecked(x, static_cast<double>(timesteps), v_th, phi));
}

Tensor clip_floor(const Tensor& x, std::size_t timesteps, float v_th, int phi) {
  check_quantizer(timesteps, v_th, phi);
  if (!x.all_finite()) throw ConfigError("clip_floor input is not finite");
  Tensor y = x;
  for (auto& v : y.data()) v = static_cast<float>(clip_floor_unchecked(v, static_cast<double>(timesteps), v_th, phi));
  return y;
}

double percentile(std::vector<float> values, double pct) {
  if (values.empty()) throw ConfigError("percentile of an empty set");
  std::sort(values.begin(), values.end());
  const double pos = std::clamp(pct, 0.0, 100.0) / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (static_cast<double>(values[hi]) - values[lo]);
}

std::vector<float> threshold_grid(std::span<const float> activations, const GridSpec& spec) {
  std::vector<float> grid;
  if (!spec.candidates.empty()) {
    grid = spec.candidates;
    for (float c : grid) {
      if (!(c > 0.0f) || !std::isfinite(c)) throw ConfigError("threshold candidates must be positive");
    }
  } else {
    if (spec.count < 1) throw ConfigError("threshold grid needs at least one candidate");
    if (!(spec.low_percentile <= spec.high_percentile)) throw ConfigError("grid percentiles are inverted");
    std::vector<float> positive;
    for (float a : activations) {
      if (a > 0.0f) positive.push_back(a);
    }
    if (positive.empty()) return {1.0f};
    const double lo = percentile(positive, spec.low_percentile);
    const double hi = std::max(percentile(positive, spec.high_percentile),
                               static_cast<double>(*std::max_element(positive.begin(), positive.end())));
    if (spec.count == 1 || hi <= lo) {
      grid.push_back(static_cast<float>(hi));
    } else {
      const double ratio = std::log(hi / lo) / static_cast<double>(spec.count - 1);
      for (std::size_t i = 0; i < spec.count; ++i) {
        grid.push_back(static_cast<float>(lo * std::exp(ratio * static_cast<double>(i))));
      }
      grid.back() = static_cast<float>(hi);
    }
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

ThresholdFit fit_threshold(const Tensor& activations, std::size_t timesteps, int phi, const GridSpec& spec,
                           std::size_t layer) {
  check_quantizer(timesteps, 1.0f, phi);
  if (activations.empty()) throw ConfigError("fit_threshold needs activation samples");
  if (!activations.all_finite()) throw ConfigError("activation samples are not finite");
  ThresholdFit fit;
  fit.layer = layer;
  fit.grid = threshold_grid(activations.data(), spec);
  if (fit.grid.empty()) throw ConfigError("threshold grid is empty");

  const bool all_zero = std::all_of(activations.data().begin(), activations.data().end(),
                                    [](float a) { return a == 0.0f; });
  const double t = static_cast<double>(timesteps);
  const double n = static_cast<double>(activations.size());
  fit.mse.reserve(fit.grid.size());
  for (float v : fit.grid) {
    double sq = 0.0;
    for (float a : activations.data()) {
      const double d = clip_floor_unchecked(a, t, v, phi) - a;
      sq += d * d;
    }
    fit.mse.push_back(sq / n);
  }
  if (all_zero) {
    fit.degenerate = true;
    fit.v_th = fit.grid.front();
    return fit;
  }
  const auto best = std::min_element(fit.mse.begin(), fit.mse.end()) - fit.mse.begin();
  fit.v_th = fit.grid[static_cast<std::size_t>(best)];
  return fit;
}

std::vector<ThresholdFit> fit_thresholds(const CalibrationCache& cache, std::size_t timesteps, int phi,
                                         const GridSpec& grid) {
  std::vector<ThresholdFit> fits;
  for (std::size_t k = 0; k < cache.taps.size(); ++k) fits.push_back(fit_threshold(cache.taps[k], timesteps, phi, grid, k));
  return fits;
}

namespace {

std::pair<std::size_t, std::size_t> channels_of(const Tensor& t) {
  if (t.rank() < 2) throw ShapeError("per-channel statistics need a batch axis");
  const std::size_t c = t.dim(1);
  return {c, t.size() / t.dim(0) / c};
}

}  // namespace

std::vector<float> channel_mean_error(const Tensor& ann_tap, const Tensor& snn_rate) {
  if (ann_tap.shape() != snn_rate.shape()) {
    throw ShapeError("ANN tap " + to_string(ann_tap.shape()) + " and SNN rate " + to_string(snn_rate.shape()) +
                     " differ in shape");
  }
  const auto [channels, plane] = channels_of(ann_tap);
  const std::size_t n = ann_tap.dim(0);
  std::vector<float> out(channels);
  for (std::size_t c = 0; c < channels; ++c) {
    double sum = 0.0;
    for (std::size_t b = 0; b < n; ++b) {
      const std::size_t base = (b * channels + c) * plane;
      for (std::size_t i = 0; i < plane; ++i) sum += static_cast<double>(ann_tap[base + i]) - snn_rate[base + i];
    }
    out[c] = static_cast<float>(sum / static_cast<double>(n * plane));
  }
  return out;
}

ModelGraph calibrate_biases(const ModelGraph& model, std::span<const LayerSnnConfig> configs,
                            const CalibrationCache& cache, std::size_t timesteps, const RunOptions& options) {
  cache.check_model(model);
  if (timesteps < 1) throw ConfigError("timesteps must be >= 1");
  ModelGraph out = model;
  out.source_digest = reference_digest(model);
  const auto relus = model.spiking_layers();
  if (cache.taps.size() != relus.size()) throw ConfigError("cache tap count does not match the model");
  for (std::size_t k = 0; k < relus.size(); ++k) {
    SnnSimulator sim(out, configs, cache.inputs, options);
    sim.run(timesteps);
    const auto rates = sim.rates();
    const auto correction = channel_mean_error(cache.taps[k], rates[k]);
    auto& bias = out.layers[relus[k] - 1].bias;
    for (std::size_t c = 0; c < correction.size(); ++c) bias[c] += correction[c];
  }
  return out;
}

double ErrorBreakdown::clipping_pct() const noexcept { return total() > 0 ? 100.0 * clipping / total() : 0.0; }
double ErrorBreakdown::quantization_pct() const noexcept {
  return total() > 0 ? 100.0 * quantization / total() : 0.0;
}
double ErrorBreakdown::unevenness_pct() const noexcept { return total() > 0 ? 100.0 * unevenness / total() : 0.0; }

double ConversionMetrics::mean_abs_error() const {
  if (layers.empty()) return 0.0;
  double s = 0.0;
  for (const auto& l : layers) s += l.mean_abs;
  return s / static_cast<double>(layers.size());
}

LayerConversionMetrics decompose_layer_error(const Tensor& ann_tap, const Tensor& snn_rate, std::size_t timesteps,
                                             const LayerSnnConfig& cfg, std::size_t layer) {
  cfg.validate();
  if (ann_tap.shape() != snn_rate.shape()) throw ShapeError("ANN tap and SNN rate differ in shape");
  LayerConversionMetrics m;
  m.layer = layer;
  m.error = Tensor(ann_tap.shape());
  const double vth = cfg.threshold();
  const double cap = vth * cfg.phi;
  const double t = static_cast<double>(timesteps);
  for (std::size_t i = 0; i < ann_tap.size(); ++i) {
    const double x = ann_tap[i];
    const double s = snn_rate[i];
    const double clipped = std::min(x, cap);
    const double cf = clip_floor_unchecked(x, t, vth, cfg.phi);
    const double e = s - x;
    m.error[i] = static_cast<float>(e);
    m.mean_abs += std::abs(e);
    m.max_abs = std::max(m.max_abs, std::abs(e));
    m.breakdown.clipping += (clipped - x) * (clipped - x);
    m.breakdown.quantization += (cf - clipped) * (cf - clipped);
    m.breakdown.unevenness += (s - cf) * (s - cf);
  }
  m.mean_abs /= static_cast<double>(ann_tap.size());
  return m;
}

ConversionMetrics measure_unevenness(const ModelGraph& model, std::span<const LayerSnnConfig> configs,
                                     const CalibrationCache& cache, std::size_t timesteps,
                                     const RunOptions& options) {
  cache.check_model(model);
  const auto result = run_snn(model, configs, cache.inputs, timesteps, options);
  ConversionMetrics metrics;
  for (std::size_t k = 0; k < result.rates.size(); ++k) {
    metrics.layers.push_back(decompose_layer_error(cache.taps.at(k), result.rates[k], timesteps, configs[k], k));
  }
  return metrics;
}

std::string calibration_report(std::span<const ThresholdFit> fits, std::span<const LayerSnnConfig> configs,
                               const ConversionMetrics& metrics, std::size_t timesteps) {
  nlohmann::json doc;
  doc["timesteps"] = timesteps;
  auto layers = nlohmann::json::array();
  for (std::size_t k = 0; k < configs.size(); ++k) {
    nlohmann::json j;
    j["layer"] = k;
    j["v_th"] = configs[k].v_th;
    j["rho"] = configs[k].rho;
    j["phi"] = configs[k].phi;
    if (k < fits.size()) {
      j["grid"] = fits[k].grid;
      j["mse"] = fits[k].mse;
      j["degenerate_fit"] = fits[k].degenerate;
    }
    if (k < metrics.layers.size()) {
      const auto& m = metrics.layers[k];
      j["mean_abs_error"] = m.mean_abs;
      j["max_abs_error"] = m.max_abs;
      j["error_sq"] = {{"clipping", m.breakdown.clipping},
                       {"quantization", m.breakdown.quantization},
                       {"unevenness", m.breakdown.unevenness}};
      j["error_pct"] = {{"clipping", m.breakdown.clipping_pct()},
                        {"quantization", m.breakdown.quantization_pct()},
                        {"unevenness", m.breakdown.unevenness_pct()}};
    }
    layers.push_back(std::move(j));
  }
  doc["layers"] = std::move(layers);
  return doc.dump(2) + "\n";
}

}  // namespace snnc
