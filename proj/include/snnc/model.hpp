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
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "snnc/tensor.hpp"

namespace snnc {

enum class LayerKind { dense, conv2d, avgpool2d, flatten, relu };

std::string_view to_string(LayerKind kind);
LayerKind parse_layer_kind(std::string_view name);

/// One layer of a feed-forward network.
///
/// Dense weights are stored [out, in]; conv2d weights [out_ch, in_ch, k, k].
/// Kernels are square. avgpool2d uses `kernel` and `stride` and never pads.
struct LayerSpec {
  LayerKind kind = LayerKind::relu;

  std::size_t in_features = 0;
  std::size_t out_features = 0;

  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  std::size_t kernel = 0;
  std::size_t stride = 1;
  std::size_t padding = 0;

  Tensor weight;
  Tensor bias;

  static LayerSpec dense(std::size_t in, std::size_t out);
  static LayerSpec conv2d(std::size_t in_ch, std::size_t out_ch, std::size_t kernel, std::size_t stride = 1,
                          std::size_t padding = 0);
  static LayerSpec avgpool2d(std::size_t kernel, std::size_t stride);
  static LayerSpec flatten();
  static LayerSpec relu();

  bool has_parameters() const noexcept { return kind == LayerKind::dense || kind == LayerKind::conv2d; }

  /// Per-sample output shape for a per-sample input shape. Throws ShapeError.
  Shape output_shape(const Shape& input) const;

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

/// The source ANN: an ordered layer list plus the shapes at its ends.
struct ModelGraph {
  std::vector<LayerSpec> layers;
  Shape input_shape;  // per sample, no batch axis
  std::size_t class_count = 0;
  /// Digest of the model this one was derived from by calibration; empty for
  /// a source model.
  std::string source_digest;

  /// Throws ShapeError naming the first offending layer.
  void validate() const;

  /// Per-sample output shape after every layer.
  std::vector<Shape> layer_shapes() const;

  /// Indices (into `layers`) of every relu, in order. These become the
  /// spiking layers of the converted network.
  std::vector<std::size_t> spiking_layers() const;

  friend bool operator==(const ModelGraph&, const ModelGraph&) = default;
};

/// Fully connected ReLU network; a flatten is prepended for rank > 1 inputs.
ModelGraph make_mlp(const Shape& input_shape, std::span<const std::size_t> hidden, std::size_t classes,
                    std::uint64_t seed);

/// conv3x3(pad 1) -> relu -> avgpool2 per entry of `channels`, then
/// flatten -> dense(hidden) -> relu -> dense(classes).
ModelGraph make_cnn(const Shape& input_shape, std::span<const std::size_t> channels, std::size_t hidden,
                    std::size_t classes, std::uint64_t seed);

/// He-uniform weights, zero biases.
void init_parameters(ModelGraph& model, std::uint64_t seed);

/// Applies one non-relu layer to a batch. Used by both the ANN forward pass
/// and the spiking engine. `index` is only used in error messages.
Tensor apply_linear(const LayerSpec& layer, const Tensor& x, std::size_t index);

Tensor relu(const Tensor& x);

Tensor forward(const ModelGraph& model, const Tensor& batch);

struct TappedForward {
  Tensor logits;
  /// Post-relu activations keyed by layer index.
  std::map<std::size_t, Tensor> taps;
};

TappedForward forward_with_taps(const ModelGraph& model, const Tensor& batch);

}  // namespace snnc
