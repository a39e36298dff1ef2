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
#include <vector>

#include "snnc/model.hpp"

namespace snnc {

struct TrainOptions {
  std::size_t epochs = 20;
  float learning_rate = 0.05f;
  std::uint64_t seed = 0;
  std::size_t batch_size = 32;
};

/// Minibatch SGD on softmax cross-entropy. Deterministic for a fixed seed.
/// Throws TrainingError when the loss stops being finite.
ModelGraph train_reference(ModelGraph model, const Tensor& images, std::span<const std::int32_t> labels,
                           const TrainOptions& options);

/// Index of the largest score per row; lowest index wins ties.
std::vector<std::int32_t> argmax_rows(const Tensor& scores);

/// Fraction of rows whose argmax matches the label.
double accuracy_of(const Tensor& scores, std::span<const std::int32_t> labels);

}  // namespace snnc
