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
#include <iosfwd>
#include <span>
#include <vector>

#include "snnc/model.hpp"

namespace snnc {

/// Spiking parameters of one layer. The firing threshold is rho * v_th and a
/// neuron may emit up to phi threshold-sized quanta in a single timestep.
struct LayerSnnConfig {
  float v_th = 1.0f;
  int rho = 1;
  int phi = 1;

  float threshold() const noexcept { return static_cast<float>(rho) * v_th; }

  /// Throws ConfigError unless v_th > 0, rho >= 1 and phi >= 1.
  void validate() const;

  friend bool operator==(const LayerSnnConfig&, const LayerSnnConfig&) = default;
};

/// Membrane potential before (u) and after (v) spike generation.
struct NeuronState {
  Tensor u;
  Tensor v;
};

struct StepResult {
  NeuronState state;
  Tensor emitted;
};

/// One integrate-and-fire update with reset by subtraction:
///   u' = v + input,  k = clamp(floor(u' / V), 0, phi),  emitted = k * V,
///   v' = u' - emitted,  with V = rho * v_th.
StepResult step_layer(const NeuronState& state, const Tensor& input_current, const LayerSnnConfig& cfg);

/// Per-timestep emitted amplitudes of one layer.
struct SpikeTrain {
  std::vector<Tensor> emissions;

  std::size_t timesteps() const noexcept { return emissions.size(); }
};

/// Mean emitted amplitude over the timesteps of the train.
Tensor rate_output(const SpikeTrain& train);

/// Charge bookkeeping of one spiking layer, summed over all neurons.
struct LayerLedger {
  double input_charge = 0.0;
  double emitted_charge = 0.0;
  double initial_membrane = 0.0;
  double final_membrane = 0.0;
};

struct RunStats {
  std::uint64_t spike_count = 0;
  /// Unit spikes per spiking layer: a burst of k counts k.
  std::vector<std::uint64_t> layer_spikes;
  /// Sum of the post-reset membrane of each spiking layer at the last step.
  std::vector<double> residual;
  std::vector<LayerLedger> ledger;
  std::size_t timesteps = 0;
};

struct RunOptions {
  /// v(0) as a fraction of each layer's threshold.
  float initial_membrane = 0.5f;
  bool record_trains = false;
  /// Keep the input current of every spiking layer at every timestep.
  bool record_currents = false;
  /// When set, every non-zero emission is written as a CSV row
  /// layer,timestep,neuron_index,emitted_amplitude (the header is written by
  /// the constructor). neuron_index is the flat index within the batch.
  std::ostream* trace = nullptr;
};

/// Clocked simulation of the converted network on one batch.
///
/// The analog batch is injected unchanged every timestep; every relu becomes
/// an integrate-and-fire layer; the final dense layer integrates without
/// spiking and its accumulated membrane divided by the elapsed time is the
/// class score. The simulator keeps a reference to `model`, which must
/// outlive it.
class SnnSimulator {
 public:
  SnnSimulator(const ModelGraph& model, std::span<const LayerSnnConfig> configs, const Tensor& batch,
               const RunOptions& options = {});

  void step();
  void run(std::size_t timesteps);

  std::size_t time() const noexcept { return t_; }
  std::size_t batch_size() const noexcept { return batch_; }
  std::size_t spiking_layer_count() const noexcept { return configs_.size(); }

  /// Accumulated output membrane divided by the elapsed timesteps.
  Tensor scores() const;

  RunStats stats() const;

  /// Unit spikes emitted so far by sample b in spiking layer k.
  std::uint64_t sample_spikes(std::size_t layer, std::size_t b) const { return sample_spikes_[layer][b]; }

  /// Mean emitted amplitude per spiking layer so far.
  std::vector<Tensor> rates() const;

  /// Single-precision views of the membrane; the simulator integrates in
  /// double precision.
  const std::vector<NeuronState>& states() const noexcept { return states_; }
  const std::vector<SpikeTrain>& trains() const noexcept { return trains_; }
  const std::vector<std::vector<Tensor>>& currents() const noexcept { return currents_; }

 private:
  const ModelGraph& model_;
  std::vector<LayerSnnConfig> configs_;
  std::vector<std::size_t> relu_index_;
  RunOptions options_;
  std::size_t batch_ = 0;
  std::size_t t_ = 0;
  Tensor drive_;  // constant current entering the first spiking layer (or the logits)
  std::vector<NeuronState> states_;
  std::vector<std::vector<double>> membrane_;
  std::vector<std::vector<std::uint64_t>> neuron_spikes_;
  std::vector<std::vector<std::uint64_t>> sample_spikes_;
  std::vector<LayerLedger> ledger_;
  std::vector<SpikeTrain> trains_;
  std::vector<std::vector<Tensor>> currents_;
  std::vector<double> output_;
};

struct SnnResult {
  Tensor scores;
  RunStats stats;
  std::vector<Tensor> rates;
  std::vector<SpikeTrain> trains;                // empty unless record_trains
  std::vector<std::vector<Tensor>> currents;     // empty unless record_currents
};

/// Runs `timesteps` steps. Throws ConfigError when the config count differs
/// from the number of relu layers.
SnnResult run_snn(const ModelGraph& model, std::span<const LayerSnnConfig> configs, const Tensor& batch,
                  std::size_t timesteps, const RunOptions& options = {});

/// Baseline configs (phi = rho = 1) with the given thresholds.
std::vector<LayerSnnConfig> baseline_configs(std::span<const float> thresholds);

}  // namespace snnc
