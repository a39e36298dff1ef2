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

#include "snnc/model.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <random>

#include "snnc/error.hpp"

namespace snnc {

std::string_view to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::dense: return "dense";
    case LayerKind::conv2d: return "conv2d";
    case LayerKind::avgpool2d: return "avgpool2d";
    case LayerKind::flatten: return "flatten";
    case LayerKind::relu: return "relu";
  }
  return "unknown";
}

LayerKind parse_layer_kind(std::string_view name) {
  for (auto k : {LayerKind::dense, LayerKind::conv2d, LayerKind::avgpool2d, LayerKind::flatten, LayerKind::relu}) {
    if (to_string(k) == name) return k;
  }
  throw ConfigError("unknown layer kind '" + std::string(name) + "'");
}

LayerSpec LayerSpec::dense(std::size_t in, std::size_t out) {
  LayerSpec l;
  l.kind = LayerKind::dense;
  l.in_features = in;
  l.out_features = out;
  l.weight = Tensor({out, in});
  l.bias = Tensor({out});
  return l;
}

LayerSpec LayerSpec::conv2d(std::size_t in_ch, std::size_t out_ch, std::size_t kernel, std::size_t stride,
                            std::size_t padding) {
  if (stride < 1) throw ConfigError("conv2d stride must be >= 1");
  LayerSpec l;
  l.kind = LayerKind::conv2d;
  l.in_channels = in_ch;
  l.out_channels = out_ch;
  l.kernel = kernel;
  l.stride = stride;
  l.padding = padding;
  l.weight = Tensor({out_ch, in_ch, kernel, kernel});
  l.bias = Tensor({out_ch});
  return l;
}

LayerSpec LayerSpec::avgpool2d(std::size_t kernel, std::size_t stride) {
  if (stride < 1) throw ConfigError("avgpool2d stride must be >= 1");
  LayerSpec l;
  l.kind = LayerKind::avgpool2d;
  l.kernel = kernel;
  l.stride = stride;
  return l;
}

LayerSpec LayerSpec::flatten() {
  LayerSpec l;
  l.kind = LayerKind::flatten;
  return l;
}

LayerSpec LayerSpec::relu() {
  LayerSpec l;
  l.kind = LayerKind::relu;
  return l;
}

Shape LayerSpec::output_shape(const Shape& in) const {
  switch (kind) {
    case LayerKind::dense:
      if (in.size() != 1 || in[0] != in_features) {
        throw ShapeError("dense expects input [" + std::to_string(in_features) + "], got " + snnc::to_string(in));
      }
      return {out_features};
    case LayerKind::conv2d: {
      if (in.size() != 3 || in[0] != in_channels) {
        throw ShapeError("conv2d expects input [" + std::to_string(in_channels) + ", H, W], got " +
                         snnc::to_string(in));
      }
      if (stride < 1) throw ShapeError("conv2d stride must be >= 1");
      const std::size_t h = in[1] + 2 * padding, w = in[2] + 2 * padding;
      if (kernel == 0 || kernel > h || kernel > w) {
        throw ShapeError("conv2d kernel " + std::to_string(kernel) + " does not fit input " + snnc::to_string(in));
      }
      return {out_channels, (h - kernel) / stride + 1, (w - kernel) / stride + 1};
    }
    case LayerKind::avgpool2d:
      if (in.size() != 3) throw ShapeError("avgpool2d expects input [C, H, W], got " + snnc::to_string(in));
      if (stride < 1) throw ShapeError("avgpool2d stride must be >= 1");
      if (kernel == 0 || kernel > in[1] || kernel > in[2]) {
        throw ShapeError("avgpool2d kernel " + std::to_string(kernel) + " does not fit input " + snnc::to_string(in));
      }
      return {in[0], (in[1] - kernel) / stride + 1, (in[2] - kernel) / stride + 1};
    case LayerKind::flatten: return {element_count(in)};
    case LayerKind::relu: return in;
  }
  throw ShapeError("unknown layer kind");
}

namespace {

std::string layer_label(std::size_t index, LayerKind kind) {
  return "layer " + std::to_string(index) + " (" + std::string(to_string(kind)) + ")";
}

void check_parameters(const LayerSpec& l, std::size_t index) {
  Shape w, b;
  if (l.kind == LayerKind::dense) {
    w = {l.out_features, l.in_features};
    b = {l.out_features};
  } else if (l.kind == LayerKind::conv2d) {
    w = {l.out_channels, l.in_channels, l.kernel, l.kernel};
    b = {l.out_channels};
  } else {
    if (!l.weight.empty() || !l.bias.empty()) {
      throw ShapeError(layer_label(index, l.kind) + " must not carry parameters");
    }
    return;
  }
  if (l.weight.shape() != w) {
    throw ShapeError(layer_label(index, l.kind) + ": weight shape " + to_string(l.weight.shape()) + ", expected " +
                     to_string(w));
  }
  if (l.bias.shape() != b) {
    throw ShapeError(layer_label(index, l.kind) + ": bias shape " + to_string(l.bias.shape()) + ", expected " +
                     to_string(b));
  }
}

}  // namespace

void ModelGraph::validate() const {
  if (layers.empty()) throw ShapeError("model has no layers");
  if (input_shape.empty()) throw ShapeError("model input shape is empty");
  Shape s = input_shape;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    check_parameters(l, i);
    if (l.kind == LayerKind::relu && (i == 0 || !layers[i - 1].has_parameters())) {
      throw ShapeError(layer_label(i, l.kind) + " must directly follow a dense or conv2d layer");
    }
    try {
      s = l.output_shape(s);
    } catch (const ShapeError& e) {
      throw ShapeError(layer_label(i, l.kind) + ": " + e.what());
    }
  }
  if (layers.back().kind != LayerKind::dense) throw ShapeError("last layer must be dense");
  if (layers.back().out_features != class_count) {
    throw ShapeError("last layer has " + std::to_string(layers.back().out_features) + " outputs but class_count is " +
                     std::to_string(class_count));
  }
}

std::vector<Shape> ModelGraph::layer_shapes() const {
  std::vector<Shape> out;
  Shape s = input_shape;
  for (const auto& l : layers) {
    s = l.output_shape(s);
    out.push_back(s);
  }
  return out;
}

std::vector<std::size_t> ModelGraph::spiking_layers() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (layers[i].kind == LayerKind::relu) out.push_back(i);
  }
  return out;
}

void init_parameters(ModelGraph& model, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (auto& l : model.layers) {
    if (!l.has_parameters()) continue;
    const std::size_t fan_in = l.kind == LayerKind::dense ? l.in_features : l.in_channels * l.kernel * l.kernel;
    const float bound = std::sqrt(6.0f / static_cast<float>(fan_in));
    std::uniform_real_distribution<float> dist(-bound, bound);
    for (auto& w : l.weight.data()) w = dist(rng);
    std::fill(l.bias.data().begin(), l.bias.data().end(), 0.0f);
  }
}

ModelGraph make_mlp(const Shape& input_shape, std::span<const std::size_t> hidden, std::size_t classes,
                    std::uint64_t seed) {
  ModelGraph m;
  m.input_shape = input_shape;
  m.class_count = classes;
  if (input_shape.size() > 1) m.layers.push_back(LayerSpec::flatten());
  std::size_t width = element_count(input_shape);
  for (auto h : hidden) {
    m.layers.push_back(LayerSpec::dense(width, h));
    m.layers.push_back(LayerSpec::relu());
    width = h;
  }
  m.layers.push_back(LayerSpec::dense(width, classes));
  init_parameters(m, seed);
  m.validate();
  return m;
}

ModelGraph make_cnn(const Shape& input_shape, std::span<const std::size_t> channels, std::size_t hidden,
                    std::size_t classes, std::uint64_t seed) {
  if (input_shape.size() != 3) throw ShapeError("make_cnn needs a [C, H, W] input shape");
  ModelGraph m;
  m.input_shape = input_shape;
  m.class_count = classes;
  Shape s = input_shape;
  for (auto c : channels) {
    m.layers.push_back(LayerSpec::conv2d(s[0], c, 3, 1, 1));
    m.layers.push_back(LayerSpec::relu());
    m.layers.push_back(LayerSpec::avgpool2d(2, 2));
    s = {c, s[1] / 2, s[2] / 2};
  }
  m.layers.push_back(LayerSpec::flatten());
  m.layers.push_back(LayerSpec::dense(element_count(s), hidden));
  m.layers.push_back(LayerSpec::relu());
  m.layers.push_back(LayerSpec::dense(hidden, classes));
  init_parameters(m, seed);
  m.validate();
  return m;
}

namespace {

using RowMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Tensor dense_forward(const LayerSpec& l, const Tensor& x) {
  const auto batch = static_cast<Eigen::Index>(x.dim(0));
  Tensor y({x.dim(0), l.out_features});
  Eigen::Map<const RowMatrix> in(x.data().data(), batch, static_cast<Eigen::Index>(l.in_features));
  Eigen::Map<const RowMatrix> w(l.weight.data().data(), static_cast<Eigen::Index>(l.out_features),
                                static_cast<Eigen::Index>(l.in_features));
  Eigen::Map<const Eigen::RowVectorXf> b(l.bias.data().data(), static_cast<Eigen::Index>(l.out_features));
  Eigen::Map<RowMatrix> out(y.data().data(), batch, static_cast<Eigen::Index>(l.out_features));
  out.noalias() = in * w.transpose();
  out.rowwise() += b;
  return y;
}

Tensor conv_forward(const LayerSpec& l, const Tensor& x, const Shape& out_shape) {
  const std::size_t batch = x.dim(0), cin = l.in_channels, h = x.dim(2), w = x.dim(3);
  const std::size_t cout = out_shape[0], oh = out_shape[1], ow = out_shape[2], k = l.kernel;
  Tensor y({batch, cout, oh, ow});
  const float* in = x.data().data();
  const float* wt = l.weight.data().data();
  float* out = y.data().data();
  const auto pad = static_cast<std::ptrdiff_t>(l.padding);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t oc = 0; oc < cout; ++oc) {
      float* plane = out + (b * cout + oc) * oh * ow;
      std::fill(plane, plane + oh * ow, l.bias[oc]);
      for (std::size_t ic = 0; ic < cin; ++ic) {
        const float* src = in + (b * cin + ic) * h * w;
        const float* ker = wt + (oc * cin + ic) * k * k;
        for (std::size_t ky = 0; ky < k; ++ky) {
          for (std::size_t kx = 0; kx < k; ++kx) {
            const float kv = ker[ky * k + kx];
            for (std::size_t oy = 0; oy < oh; ++oy) {
              const auto iy = static_cast<std::ptrdiff_t>(oy * l.stride + ky) - pad;
              if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
              for (std::size_t ox = 0; ox < ow; ++ox) {
                const auto ix = static_cast<std::ptrdiff_t>(ox * l.stride + kx) - pad;
                if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w)) continue;
                plane[oy * ow + ox] += kv * src[iy * static_cast<std::ptrdiff_t>(w) + ix];
              }
            }
          }
        }
      }
    }
  }
  return y;
}

Tensor avgpool_forward(const LayerSpec& l, const Tensor& x, const Shape& out_shape) {
  const std::size_t batch = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  const std::size_t oh = out_shape[1], ow = out_shape[2], k = l.kernel;
  Tensor y({batch, c, oh, ow});
  const float scale = 1.0f / static_cast<float>(k * k);
  for (std::size_t p = 0; p < batch * c; ++p) {
    const float* src = x.data().data() + p * h * w;
    float* dst = y.data().data() + p * oh * ow;
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox) {
        float s = 0.0f;
        for (std::size_t ky = 0; ky < k; ++ky) {
          for (std::size_t kx = 0; kx < k; ++kx) s += src[(oy * l.stride + ky) * w + ox * l.stride + kx];
        }
        dst[oy * ow + ox] = s * scale;
      }
    }
  }
  return y;
}

}  // namespace

Tensor relu(const Tensor& x) {
  Tensor y = x;
  for (auto& v : y.data()) v = std::max(v, 0.0f);
  return y;
}

Tensor apply_linear(const LayerSpec& l, const Tensor& x, std::size_t index) {
  if (x.rank() < 2) throw ShapeError(layer_label(index, l.kind) + ": input needs a batch axis");
  Shape out;
  try {
    out = l.output_shape(x.sample_shape());
  } catch (const ShapeError& e) {
    throw ShapeError(layer_label(index, l.kind) + ": " + e.what());
  }
  switch (l.kind) {
    case LayerKind::dense: return dense_forward(l, x);
    case LayerKind::conv2d: return conv_forward(l, x, out);
    case LayerKind::avgpool2d: return avgpool_forward(l, x, out);
    case LayerKind::flatten: return x.reshaped({x.dim(0), out[0]});
    case LayerKind::relu: return relu(x);
  }
  throw ShapeError("unknown layer kind");
}

namespace {

void check_batch(const ModelGraph& model, const Tensor& batch) {
  if (batch.empty() || batch.sample_shape() != model.input_shape) {
    const std::string first =
        model.layers.empty() ? std::string("input") : "layer 0 (" + std::string(to_string(model.layers[0].kind)) + ")";
    throw ShapeError(first + ": batch shape " + to_string(batch.shape()) + " does not match model input [N, " +
                     to_string(model.input_shape).substr(1));
  }
}

}  // namespace

Tensor forward(const ModelGraph& model, const Tensor& batch) { return forward_with_taps(model, batch).logits; }

TappedForward forward_with_taps(const ModelGraph& model, const Tensor& batch) {
  check_batch(model, batch);
  TappedForward out;
  Tensor x = batch;
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    x = apply_linear(model.layers[i], x, i);
    if (model.layers[i].kind == LayerKind::relu) out.taps.emplace(i, x);
  }
  out.logits = std::move(x);
  return out;
}

}  // namespace snnc
