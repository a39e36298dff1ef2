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
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "snnc/tensor.hpp"

namespace snnc {

/// Labelled samples. images is [N, ...]; labels has N entries in
/// [0, class_count). channel_mean/std describe axis 1 of images (or the whole
/// sample for rank-2 data) and are informational until normalized() is used.
struct Dataset {
  Tensor images;
  std::vector<std::int32_t> labels;
  std::size_t class_count = 0;
  std::vector<float> channel_mean;
  std::vector<float> channel_std;

  std::size_t size() const noexcept { return labels.size(); }

  /// Throws DatasetError if the invariants do not hold.
  void validate() const;

  /// Recomputes channel_mean and channel_std from images.
  void compute_channel_stats();

  /// Copy with every channel shifted and scaled to zero mean, unit variance.
  Dataset normalized() const;

  Dataset subset(std::span<const std::size_t> indices) const;

  /// First `count` samples and the rest.
  std::pair<Dataset, Dataset> split(std::size_t count) const;
};

/// MNIST-style IDX pair. Images come back as [N, 1, rows, cols] in [0, 1].
Dataset load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path);

/// One sample per line: label,v0,v1,... Values are multiplied by `scale` and
/// reshaped to `sample_shape`. Blank lines and a leading "label" header are
/// skipped.
Dataset load_csv(const std::filesystem::path& path, const Shape& sample_shape, float scale = 1.0f);

enum class SyntheticKind { blobs, rings };

SyntheticKind parse_synthetic_kind(std::string_view name);

struct SyntheticOptions {
  std::size_t classes = 2;
  /// Blobs may take any shape; rings are always [2].
  Shape sample_shape = {2};
  /// Minimum distance between blob centres, in units of `noise`.
  float separation = 8.0f;
  /// Blob standard deviation; for rings the radial jitter is 0.1 * noise.
  float noise = 1.0f;
};

/// Deterministic under `seed`; class counts differ by at most one.
Dataset make_synthetic(SyntheticKind kind, std::size_t n, std::uint64_t seed, const SyntheticOptions& options = {});
Dataset make_synthetic(std::string_view kind, std::size_t n, std::uint64_t seed, const SyntheticOptions& options = {});

}  // namespace snnc
