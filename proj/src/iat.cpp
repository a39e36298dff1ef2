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

#include "snnc/iat.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "json.hpp"
#include "snnc/error.hpp"
#include "snnc/search.hpp"
#include "snnc/trainer.hpp"
#include "text_format.hpp"

namespace snnc {

double entropy(std::span<const double> p) {
  if (p.empty()) throw ConfigError("entropy of an empty vector");
  constexpr double eps = 1e-12;
  double z = 0.0;
  for (double v : p) z += std::max(v, 0.0);
  if (!(z > 0.0)) throw ConfigError("entropy needs a non-zero probability vector");
  double h = 0.0;
  for (double v : p) {
    const double q = std::max(std::max(v, 0.0) / z, eps);
    h -= q * std::log(q);
  }
  return std::clamp(h, 0.0, std::log(static_cast<double>(p.size())));
}

std::string_view to_string(ConfidenceMode mode) { return mode == ConfidenceMode::entropy ? "entropy" : "max_prob"; }

ConfidenceMode parse_confidence_mode(std::string_view name) {
  if (name == "entropy") return ConfidenceMode::entropy;
  if (name == "max_prob") return ConfidenceMode::max_prob;
  throw ConfigError("unknown confidence mode '" + std::string(name) + "' (expected entropy or max_prob)");
}

double confidence(std::span<const float> scores, ConfidenceMode mode) {
  if (scores.size() < 2) throw ConfigError("confidence needs at least two classes");
  const auto p = softmax(scores);
  if (mode == ConfidenceMode::max_prob) return *std::max_element(p.begin(), p.end());
  const double c = 1.0 - entropy(p) / std::log(static_cast<double>(p.size()));
  return std::clamp(c, 0.0, 1.0);
}

void ExitPolicy::derive() {
  if (mean_entropy.empty()) throw ConfigError("exit policy has no timesteps");
  t_max = mean_entropy.size();
  min_entropy = *std::min_element(mean_entropy.begin(), mean_entropy.end());
  alpha.resize(t_max);
  for (std::size_t t = 0; t < t_max; ++t) {
    alpha[t] = alpha_base + beta * std::exp(-(mean_entropy[t] - min_entropy) / delta);
  }
}

void ExitPolicy::validate() const {
  if (!(delta > 0.0) || !std::isfinite(delta)) throw ConfigError("delta must be > 0");
  if (!std::isfinite(alpha_base) || !std::isfinite(beta)) throw ConfigError("alpha_base and beta must be finite");
  if (beta < 0.0) throw ConfigError("beta must be >= 0");
  if (t_max < 1 || mean_entropy.size() != t_max || alpha.size() != t_max) {
    throw ConfigError("exit policy needs one entropy and one boundary per timestep");
  }
  for (double h : mean_entropy) {
    if (!(h >= 0.0) || !std::isfinite(h)) throw ConfigError("mean entropies must be finite and >= 0");
  }
}

ExitPolicy make_exit_policy(std::vector<double> mean_entropy, double alpha_base, double beta, double delta,
                            ConfidenceMode mode) {
  ExitPolicy p;
  p.alpha_base = alpha_base;
  p.beta = beta;
  p.delta = delta;
  p.mode = mode;
  p.mean_entropy = std::move(mean_entropy);
  if (!(delta > 0.0)) throw ConfigError("delta must be > 0");
  p.derive();
  p.validate();
  return p;
}

ExitPolicy fit_exit_policy(const ModelGraph& model, std::span<const LayerSnnConfig> configs,
                           const CalibrationCache& cache, std::size_t t_max, double alpha_base, double beta,
                           double delta, ConfidenceMode mode, const RunOptions& options) {
  cache.check_model(model);
  if (cache.sample_count() == 0) throw ConfigError("calibration cache is empty");
  if (t_max < 1) throw ConfigError("t_max must be >= 1");
  SnnSimulator sim(model, configs, cache.inputs, options);
  std::vector<double> mean_entropy;
  for (std::size_t t = 0; t < t_max; ++t) {
    sim.step();
    const Tensor scores = sim.scores();
    double sum = 0.0;
    for (std::size_t b = 0; b < scores.dim(0); ++b) sum += entropy(softmax(scores.row(b)));
    mean_entropy.push_back(sum / static_cast<double>(scores.dim(0)));
  }
  return make_exit_policy(std::move(mean_entropy), alpha_base, beta, delta, mode);
}

double ExitTrace::mean_t() const {
  if (records.empty()) return 0.0;
  double s = 0.0;
  for (const auto& r : records) s += static_cast<double>(r.exit_t);
  return s / static_cast<double>(records.size());
}

double ExitTrace::accuracy() const {
  std::size_t labelled = 0, correct = 0;
  for (const auto& r : records) {
    if (r.label < 0) continue;
    ++labelled;
    correct += r.predicted == r.label ? 1 : 0;
  }
  return labelled ? static_cast<double>(correct) / static_cast<double>(labelled) : 0.0;
}

std::uint64_t ExitTrace::spike_count() const {
  std::uint64_t s = 0;
  for (auto c : layer_spikes) s += c;
  return s;
}

ExitTrace infer_adaptive(const ModelGraph& model, std::span<const LayerSnnConfig> configs, const ExitPolicy& policy,
                         const Tensor& batch, std::span<const std::int32_t> labels, const RunOptions& options) {
  policy.validate();
  if (!labels.empty() && labels.size() != batch.dim(0)) throw ConfigError("label count does not match the batch");
  SnnSimulator sim(model, configs, batch, options);
  const std::size_t n = sim.batch_size();
  const std::size_t layers = sim.spiking_layer_count();

  ExitTrace trace;
  trace.t_max = policy.t_max;
  trace.records.resize(n);
  trace.layer_spikes.assign(layers, 0);
  trace.scores = Tensor({n, model.class_count});
  std::vector<bool> done(n, false);
  std::size_t remaining = n;

  for (std::size_t t = 1; t <= policy.t_max && remaining > 0; ++t) {
    sim.step();
    const Tensor scores = sim.scores();
    for (std::size_t b = 0; b < n; ++b) {
      if (done[b]) continue;
      const double c = confidence(scores.row(b), policy.mode);
      if (c < policy.alpha[t - 1] && t < policy.t_max) continue;
      auto& r = trace.records[b];
      r.input_index = b;
      r.exit_t = t;
      r.confidence = c;
      const auto row = scores.row(b);
      r.predicted = static_cast<std::int32_t>(std::max_element(row.begin(), row.end()) - row.begin());
      r.label = labels.empty() ? -1 : labels[b];
      for (std::size_t k = 0; k < layers; ++k) {
        const auto s = sim.sample_spikes(k, b);
        r.spikes += s;
        trace.layer_spikes[k] += s;
      }
      std::copy(row.begin(), row.end(), trace.scores.row(b).begin());
      done[b] = true;
      --remaining;
    }
  }
  return trace;
}

std::string trace_to_csv(const ExitTrace& trace) {
  std::ostringstream os;
  os << "input_index,exit_t,confidence,predicted,label\n";
  for (const auto& r : trace.records) {
    os << r.input_index << ',' << r.exit_t << ',' << format_double(r.confidence) << ',' << r.predicted << ','
       << r.label << '\n';
  }
  return os.str();
}

std::string policy_to_json(const ExitPolicy& policy) {
  nlohmann::json j;
  j["alpha_base"] = policy.alpha_base;
  j["beta"] = policy.beta;
  j["delta"] = policy.delta;
  j["confidence"] = std::string(to_string(policy.mode));
  j["t_max"] = policy.t_max;
  j["mean_entropy"] = policy.mean_entropy;
  j["min_entropy"] = policy.min_entropy;
  j["alpha"] = policy.alpha;
  return j.dump(2) + "\n";
}

ExitPolicy policy_from_json(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    auto p = make_exit_policy(j.at("mean_entropy").get<std::vector<double>>(), j.at("alpha_base").get<double>(),
                              j.at("beta").get<double>(), j.at("delta").get<double>(),
                              parse_confidence_mode(j.value("confidence", std::string("entropy"))));
    if (j.at("t_max").get<std::size_t>() != p.t_max) {
      throw FormatError(FormatError::Kind::malformed, "exit policy: t_max disagrees with the entropy list");
    }
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(FormatError::Kind::malformed, std::string("exit policy: ") + e.what());
  }
}

}  // namespace snnc
