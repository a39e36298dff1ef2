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

#include "snnc/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "snnc/error.hpp"

namespace snnc {

namespace {

struct Grad {
  std::vector<float> weight;
  std::vector<float> bias;
};

// Gradient of the input given the gradient of the output, accumulating
// parameter gradients into `g`.
Tensor backward_layer(const LayerSpec& l, const Tensor& in, const Tensor& out, const Tensor& dout, Grad& g) {
  switch (l.kind) {
    case LayerKind::relu: {
      Tensor din = dout;
      for (std::size_t i = 0; i < din.size(); ++i) {
        if (out[i] <= 0.0f) din[i] = 0.0f;
      }
      return din;
    }
    case LayerKind::flatten: return dout.reshaped(in.shape());
    case LayerKind::dense: {
      const std::size_t batch = in.dim(0), nin = l.in_features, nout = l.out_features;
      Tensor din(in.shape());
      for (std::size_t b = 0; b < batch; ++b) {
        const float* x = in.data().data() + b * nin;
        const float* dy = dout.data().data() + b * nout;
        float* dx = din.data().data() + b * nin;
        for (std::size_t o = 0; o < nout; ++o) {
          const float d = dy[o];
          if (d == 0.0f) continue;
          g.bias[o] += d;
          float* gw = g.weight.data() + o * nin;
          const float* w = l.weight.data().data() + o * nin;
          for (std::size_t i = 0; i < nin; ++i) {
            gw[i] += d * x[i];
            dx[i] += d * w[i];
          }
        }
      }
      return din;
    }
    case LayerKind::conv2d: {
      const std::size_t batch = in.dim(0), cin = l.in_channels, h = in.dim(2), w = in.dim(3);
      const std::size_t cout = out.dim(1), oh = out.dim(2), ow = out.dim(3), k = l.kernel;
      const auto pad = static_cast<std::ptrdiff_t>(l.padding);
      Tensor din(in.shape());
      for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t oc = 0; oc < cout; ++oc) {
          const float* dy = dout.data().data() + (b * cout + oc) * oh * ow;
          for (std::size_t p = 0; p < oh * ow; ++p) g.bias[oc] += dy[p];
          for (std::size_t ic = 0; ic < cin; ++ic) {
            const float* x = in.data().data() + (b * cin + ic) * h * w;
            float* dx = din.data().data() + (b * cin + ic) * h * w;
            for (std::size_t ky = 0; ky < k; ++ky) {
              for (std::size_t kx = 0; kx < k; ++kx) {
                const std::size_t widx = ((oc * cin + ic) * k + ky) * k + kx;
                const float kv = l.weight[widx];
                float acc = 0.0f;
                for (std::size_t oy = 0; oy < oh; ++oy) {
                  const auto iy = static_cast<std::ptrdiff_t>(oy * l.stride + ky) - pad;
                  if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
                  for (std::size_t ox = 0; ox < ow; ++ox) {
                    const auto ix = static_cast<std::ptrdiff_t>(ox * l.stride + kx) - pad;
                    if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w)) continue;
                    const std::size_t src = static_cast<std::size_t>(iy) * w + static_cast<std::size_t>(ix);
                    const float d = dy[oy * ow + ox];
                    acc += d * x[src];
                    dx[src] += d * kv;
                  }
                }
                g.weight[widx] += acc;
              }
            }
          }
        }
      }
      return din;
    }
    case LayerKind::avgpool2d: {
      const std::size_t planes = in.dim(0) * in.dim(1), h = in.dim(2), w = in.dim(3);
      const std::size_t oh = out.dim(2), ow = out.dim(3), k = l.kernel;
      const float scale = 1.0f / static_cast<float>(k * k);
      Tensor din(in.shape());
      for (std::size_t p = 0; p < planes; ++p) {
        const float* dy = dout.data().data() + p * oh * ow;
        float* dx = din.data().data() + p * h * w;
        for (std::size_t oy = 0; oy < oh; ++oy) {
          for (std::size_t ox = 0; ox < ow; ++ox) {
            const float d = dy[oy * ow + ox] * scale;
            for (std::size_t ky = 0; ky < k; ++ky) {
              for (std::size_t kx = 0; kx < k; ++kx) dx[(oy * l.stride + ky) * w + ox * l.stride + kx] += d;
            }
          }
        }
      }
      return din;
    }
  }
  throw InvariantError("unknown layer kind in backward pass");
}

}  // namespace

ModelGraph train_reference(ModelGraph model, const Tensor& images, std::span<const std::int32_t> labels,
                           const TrainOptions& options) {
  model.validate();
  if (images.empty() || images.dim(0) != labels.size()) {
    throw DatasetError("training set has mismatched image and label counts");
  }
  for (auto y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= model.class_count) {
      throw DatasetError("label " + std::to_string(y) + " outside [0, " + std::to_string(model.class_count) + ")");
    }
  }
  if (options.batch_size == 0) throw ConfigError("batch_size must be >= 1");
  if (!(options.learning_rate >= 0.0f)) throw ConfigError("learning rate must be >= 0");

  const std::size_t n = labels.size();
  std::mt19937_64 rng(options.seed);
  std::vector<std::size_t> order(n);
  std::vector<Grad> grads(model.layers.size());

  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < n; start += options.batch_size) {
      const std::size_t end = std::min(n, start + options.batch_size);
      std::span<const std::size_t> idx(order.data() + start, end - start);
      const std::size_t batch = idx.size();

      std::vector<Tensor> acts;
      acts.reserve(model.layers.size() + 1);
      acts.push_back(images.gather_rows(idx));
      for (std::size_t i = 0; i < model.layers.size(); ++i) acts.push_back(apply_linear(model.layers[i], acts[i], i));

      const Tensor& logits = acts.back();
      const std::size_t classes = model.class_count;
      Tensor dlogits(logits.shape());
      double loss = 0.0;
      for (std::size_t b = 0; b < batch; ++b) {
        auto z = logits.row(b);
        auto d = dlogits.row(b);
        const float zmax = *std::max_element(z.begin(), z.end());
        double denom = 0.0;
        for (std::size_t c = 0; c < classes; ++c) denom += std::exp(static_cast<double>(z[c] - zmax));
        const auto y = static_cast<std::size_t>(labels[idx[b]]);
        loss += std::log(denom) - static_cast<double>(z[y] - zmax);
        for (std::size_t c = 0; c < classes; ++c) {
          const double p = std::exp(static_cast<double>(z[c] - zmax)) / denom;
          d[c] = static_cast<float>((p - (c == y ? 1.0 : 0.0)) / static_cast<double>(batch));
        }
      }
      loss /= static_cast<double>(batch);
      if (!std::isfinite(loss)) {
        std::ostringstream os;
        os << "non-finite loss " << loss << " at epoch " << epoch << ", batch starting at " << start
           << " (learning rate " << options.learning_rate << ")";
        throw TrainingError(os.str());
      }
      if (options.learning_rate == 0.0f) continue;

      Tensor dout = std::move(dlogits);
      for (std::size_t i = model.layers.size(); i-- > 0;) {
        auto& l = model.layers[i];
        Grad& g = grads[i];
        if (l.has_parameters()) {
          g.weight.assign(l.weight.size(), 0.0f);
          g.bias.assign(l.bias.size(), 0.0f);
        }
        Tensor din = backward_layer(l, acts[i], acts[i + 1], dout, g);
        if (l.has_parameters()) {
          auto w = l.weight.data();
          for (std::size_t j = 0; j < w.size(); ++j) w[j] -= options.learning_rate * g.weight[j];
          auto bb = l.bias.data();
          for (std::size_t j = 0; j < bb.size(); ++j) bb[j] -= options.learning_rate * g.bias[j];
        }
        dout = std::move(din);
      }
    }
  }
  for (const auto& l : model.layers) {
    if (l.has_parameters() && (!l.weight.all_finite() || !l.bias.all_finite())) {
      throw TrainingError("training produced non-finite parameters");
    }
  }
  return model;
}

std::vector<std::int32_t> argmax_rows(const Tensor& scores) {
  std::vector<std::int32_t> out(scores.dim(0));
  for (std::size_t b = 0; b < out.size(); ++b) {
    auto r = scores.row(b);
    out[b] = static_cast<std::int32_t>(std::max_element(r.begin(), r.end()) - r.begin());
  }
  return out;
}

double accuracy_of(const Tensor& scores, std::span<const std::int32_t> labels) {
  if (scores.empty() || scores.dim(0) != labels.size()) throw ShapeError("score rows and label count differ");
  const auto pred = argmax_rows(scores);
  std::size_t hit = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) hit += pred[i] == labels[i] ? 1 : 0;
  return static_cast<double>(hit) / static_cast<double>(labels.size());
}

}  // namespace snnc
