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

#include "snnc/engine.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "snnc/error.hpp"

namespace snnc {

void LayerSnnConfig::validate() const {
  if (!(v_th > 0.0f) || !std::isfinite(v_th)) throw ConfigError("v_th must be a positive finite number");
  if (rho < 1) throw ConfigError("rho must be >= 1");
  if (phi < 1) throw ConfigError("phi must be >= 1");
}

namespace {

// In-place IF update over one layer in double precision. `v` holds the
// post-reset membrane on entry and on exit; `counts`, `u_out` and `v_out`
// are filled when non-empty. Returns the number of unit spikes.
std::uint64_t fire(std::span<double> v, std::span<const float> input, std::span<float> emitted,
                   std::span<std::uint64_t> counts, float* u_out, float* v_out, const LayerSnnConfig& cfg) {
  const double vth = cfg.threshold();
  const double cap = static_cast<double>(cfg.phi);
  std::uint64_t spikes = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double pre = v[i] + static_cast<double>(input[i]);
    double k = std::floor(pre / vth);
    k = k < 0.0 ? 0.0 : (k > cap ? cap : k);
    // floor(pre / vth) can round up past pre by one quantum.
    if (k > 0.0 && k * vth > pre) k -= 1.0;
    const double e = k * vth;
    emitted[i] = static_cast<float>(e);
    v[i] = pre - e;
    if (u_out) u_out[i] = static_cast<float>(pre);
    if (v_out) v_out[i] = static_cast<float>(v[i]);
    const auto n = static_cast<std::uint64_t>(k);
    if (!counts.empty()) counts[i] += n;
    spikes += n;
  }
  return spikes;
}

}  // namespace

StepResult step_layer(const NeuronState& state, const Tensor& input_current, const LayerSnnConfig& cfg) {
  cfg.validate();
  if (state.v.shape() != input_current.shape()) {
    throw ShapeError("input current shape " + to_string(input_current.shape()) + " does not match membrane shape " +
                     to_string(state.v.shape()));
  }
  StepResult r;
  r.state.v = Tensor(state.v.shape());
  r.state.u = Tensor(state.v.shape());
  r.emitted = Tensor(state.v.shape());
  std::vector<double> v(state.v.data().begin(), state.v.data().end());
  fire(v, input_current.data(), r.emitted.data(), {}, r.state.u.data().data(), r.state.v.data().data(), cfg);
  return r;
}

Tensor rate_output(const SpikeTrain& train) {
  if (train.emissions.empty()) throw ConfigError("rate_output needs at least one timestep");
  Tensor rate(train.emissions.front().shape());
  for (const auto& e : train.emissions) {
    if (e.shape() != rate.shape()) throw ShapeError("spike train changes shape between timesteps");
    for (std::size_t i = 0; i < rate.size(); ++i) rate[i] += e[i];
  }
  const auto t = static_cast<float>(train.emissions.size());
  for (auto& r : rate.data()) r /= t;
  return rate;
}

std::vector<LayerSnnConfig> baseline_configs(std::span<const float> thresholds) {
  std::vector<LayerSnnConfig> out;
  for (float v : thresholds) out.push_back({v, 1, 1});
  return out;
}

SnnSimulator::SnnSimulator(const ModelGraph& model, std::span<const LayerSnnConfig> configs, const Tensor& batch,
                           const RunOptions& options)
    : model_(model), configs_(configs.begin(), configs.end()), options_(options) {
  model.validate();
  relu_index_ = model.spiking_layers();
  if (configs_.size() != relu_index_.size()) {
    throw ConfigError("model has " + std::to_string(relu_index_.size()) + " spiking layers but " +
                      std::to_string(configs_.size()) + " configs were given");
  }
  for (std::size_t k = 0; k < configs_.size(); ++k) {
    try {
      configs_[k].validate();
    } catch (const ConfigError& e) {
      throw ConfigError("spiking layer " + std::to_string(k) + ": " + e.what());
    }
  }
  if (batch.empty() || batch.sample_shape() != model.input_shape) {
    throw ShapeError("layer 0: batch shape " + to_string(batch.shape()) + " does not match model input");
  }
  if (!(options.initial_membrane >= 0.0f && options.initial_membrane < 1.0f)) {
    throw ConfigError("initial membrane fraction must be in [0, 1)");
  }
  batch_ = batch.dim(0);

  const std::size_t first = relu_index_.empty() ? model.layers.size() : relu_index_.front();
  drive_ = batch;
  for (std::size_t i = 0; i < first; ++i) drive_ = apply_linear(model.layers[i], drive_, i);

  const auto shapes = model.layer_shapes();
  for (std::size_t k = 0; k < relu_index_.size(); ++k) {
    Shape s{batch_};
    const auto& per = shapes[relu_index_[k]];
    s.insert(s.end(), per.begin(), per.end());
    const double v0 = static_cast<double>(options.initial_membrane) * configs_[k].threshold();
    NeuronState st{Tensor(s), Tensor::full(s, static_cast<float>(v0))};
    membrane_.emplace_back(st.v.size(), v0);
    neuron_spikes_.emplace_back(st.v.size(), 0);
    LayerLedger ledger;
    ledger.initial_membrane = v0 * static_cast<double>(st.v.size());
    ledger.final_membrane = ledger.initial_membrane;
    ledger_.push_back(ledger);
    states_.push_back(std::move(st));
    sample_spikes_.emplace_back(batch_, 0);
  }
  if (options.record_trains) trains_.resize(relu_index_.size());
  if (options.record_currents) currents_.resize(relu_index_.size());
  output_.assign(batch_ * model.class_count, 0.0);
  if (options.trace) *options.trace << "layer,timestep,neuron_index,emitted_amplitude\n";
}

void SnnSimulator::step() {
  ++t_;
  Tensor x = drive_;
  for (std::size_t k = 0; k < relu_index_.size(); ++k) {
    auto& st = states_[k];
    auto& ledger = ledger_[k];
    Tensor emitted(x.shape());
    for (float c : x.data()) ledger.input_charge += c;
    if (options_.record_currents) currents_[k].push_back(x);
    const std::size_t per_sample = x.size() / batch_;
    auto in = x.data();
    auto out = emitted.data();
    float* u = st.u.data().data();
    float* v = st.v.data().data();
    for (std::size_t b = 0; b < batch_; ++b) {
      const std::size_t off = b * per_sample;
      sample_spikes_[k][b] += fire(std::span(membrane_[k]).subspan(off, per_sample), in.subspan(off, per_sample),
                                   out.subspan(off, per_sample), std::span(neuron_spikes_[k]).subspan(off, per_sample),
                                   u + off, v + off, configs_[k]);
    }
    const double vth = configs_[k].threshold();
    ledger.final_membrane = 0.0;
    for (double m : membrane_[k]) ledger.final_membrane += m;
    std::uint64_t layer_spikes = 0;
    for (auto c : neuron_spikes_[k]) layer_spikes += c;
    ledger.emitted_charge = static_cast<double>(layer_spikes) * vth;
    if (options_.trace) {
      auto& os = *options_.trace;
      for (std::size_t i = 0; i < out.size(); ++i) {
        if (out[i] != 0.0f) os << k << ',' << t_ << ',' << i << ',' << out[i] << '\n';
      }
    }
    if (options_.record_trains) trains_[k].emissions.push_back(emitted);

    x = std::move(emitted);
    const std::size_t stop = k + 1 < relu_index_.size() ? relu_index_[k + 1] : model_.layers.size();
    for (std::size_t i = relu_index_[k] + 1; i < stop; ++i) x = apply_linear(model_.layers[i], x, i);
  }
  for (std::size_t i = 0; i < output_.size(); ++i) output_[i] += x[i];
}

void SnnSimulator::run(std::size_t timesteps) {
  for (std::size_t i = 0; i < timesteps; ++i) step();
}

Tensor SnnSimulator::scores() const {
  if (t_ == 0) throw ConfigError("no timestep has been simulated yet");
  Tensor s({batch_, model_.class_count});
  const auto t = static_cast<double>(t_);
  for (std::size_t i = 0; i < output_.size(); ++i) s[i] = static_cast<float>(output_[i] / t);
  return s;
}

RunStats SnnSimulator::stats() const {
  RunStats s;
  s.timesteps = t_;
  s.ledger = ledger_;
  for (std::size_t k = 0; k < sample_spikes_.size(); ++k) {
    std::uint64_t layer = 0;
    for (auto c : sample_spikes_[k]) layer += c;
    s.layer_spikes.push_back(layer);
    s.spike_count += layer;
    s.residual.push_back(ledger_[k].final_membrane);
  }
  return s;
}

std::vector<Tensor> SnnSimulator::rates() const {
  std::vector<Tensor> out;
  const auto t = static_cast<double>(std::max<std::size_t>(t_, 1));
  for (std::size_t k = 0; k < neuron_spikes_.size(); ++k) {
    const double vth = configs_[k].threshold();
    Tensor r(states_[k].v.shape());
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = static_cast<float>(static_cast<double>(neuron_spikes_[k][i]) * vth / t);
    out.push_back(std::move(r));
  }
  return out;
}

SnnResult run_snn(const ModelGraph& model, std::span<const LayerSnnConfig> configs, const Tensor& batch,
                  std::size_t timesteps, const RunOptions& options) {
  if (timesteps < 1) throw ConfigError("timesteps must be >= 1");
  SnnSimulator sim(model, configs, batch, options);
  sim.run(timesteps);
  return {sim.scores(), sim.stats(), sim.rates(), sim.trains(), sim.currents()};
}

}  // namespace snnc
