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
#include <string>
#include <vector>

#include "snnc/dataset.hpp"
#include "snnc/model.hpp"

namespace snnc {

inline constexpr std::size_t kDefaultCalibrationSamples = 512;

/// ANN reference data for a fixed calibration subset: the inputs, the ANN
/// logits and every post-relu tap, bound to the model that produced them.
struct CalibrationCache {
  std::string model_digest;
  std::vector<std::size_t> sample_indices;  // into the source dataset, ascending
  Tensor inputs;
  std::vector<std::int32_t> labels;
  Tensor logits;
  std::vector<std::size_t> tap_layers;  // relu layer indices
  std::vector<Tensor> taps;             // one per spiking layer, [N, ...]

  std::size_t sample_count() const noexcept { return sample_indices.size(); }

  /// Throws DigestMismatch unless the cache was built from `model` (or from
  /// the source model `model` was calibrated from).
  void check_model(const ModelGraph& model) const;

  /// SHA-256 of the serialized cache.
  std::string digest() const;
};

/// Draws `sample_count` distinct samples under `seed` and records ANN taps.
CalibrationCache build_calibration_cache(const ModelGraph& model, const Dataset& dataset, std::size_t sample_count,
                                         std::uint64_t seed);

std::vector<std::byte> serialize_cache(const CalibrationCache& cache);
CalibrationCache parse_cache(std::span<const std::byte> bytes);
void save_cache(const CalibrationCache& cache, const std::filesystem::path& path);
CalibrationCache load_cache(const std::filesystem::path& path);

}  // namespace snnc
