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

// Independent reference implementations used to check the library. They
// share no code with src/ and favour obviousness over speed.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "snnc/model.hpp"
#include "snnc/search.hpp"

namespace oracle {

using Vec = std::vector<double>;

// One sample through one layer. `shape` is the per-sample shape, updated in place.
inline Vec layer(const snnc::LayerSpec& l, const Vec& x, std::vector<std::size_t>& shape) {
  using snnc::LayerKind;
  switch (l.kind) {
    case LayerKind::dense: {
      Vec y(l.out_features, 0.0);
      for (std::size_t o = 0; o < l.out_features; ++o) {
        double acc = l.bias[o];
        for (std::size_t i = 0; i < l.in_features; ++i) acc += double(l.weight[o * l.in_features + i]) * x[i];
        y[o] = acc;
      }
      shape = {l.out_features};
      return y;
    }
    case LayerKind::conv2d: {
      const std::size_t h = shape[1], w = shape[2], k = l.kernel, s = l.stride, p = l.padding;
      const std::size_t oh = (h + 2 * p - k) / s + 1, ow = (w + 2 * p - k) / s + 1;
      Vec y(l.out_channels * oh * ow, 0.0);
      for (std::size_t oc = 0; oc < l.out_channels; ++oc)
        for (std::size_t r = 0; r < oh; ++r)
          for (std::size_t c = 0; c < ow; ++c) {
            double acc = l.bias[oc];
            for (std::size_t ic = 0; ic < l.in_channels; ++ic)
              for (std::size_t kr = 0; kr < k; ++kr)
                for (std::size_t kc = 0; kc < k; ++kc) {
                  const long ir = long(r * s + kr) - long(p), icol = long(c * s + kc) - long(p);
                  if (ir < 0 || icol < 0 || ir >= long(h) || icol >= long(w)) continue;
                  acc += double(l.weight[((oc * l.in_channels + ic) * k + kr) * k + kc]) *
                         x[(ic * h + std::size_t(ir)) * w + std::size_t(icol)];
                }
            y[(oc * oh + r) * ow + c] = acc;
          }
      shape = {l.out_channels, oh, ow};
      return y;
    }
    case LayerKind::avgpool2d: {
      const std::size_t ch = shape[0], h = shape[1], w = shape[2], k = l.kernel, s = l.stride;
      const std::size_t oh = (h - k) / s + 1, ow = (w - k) / s + 1;
      Vec y(ch * oh * ow, 0.0);
      for (std::size_t c = 0; c < ch; ++c)
        for (std::size_t r = 0; r < oh; ++r)
          for (std::size_t q = 0; q < ow; ++q) {
            double acc = 0.0;
            for (std::size_t kr = 0; kr < k; ++kr)
              for (std::size_t kc = 0; kc < k; ++kc) acc += x[(c * h + r * s + kr) * w + q * s + kc];
            y[(c * oh + r) * ow + q] = acc / double(k * k);
          }
      shape = {ch, oh, ow};
      return y;
    }
    case LayerKind::flatten: {
      shape = {x.size()};
      return x;
    }
    case LayerKind::relu: {
      Vec y = x;
      for (auto& v : y) v = std::max(v, 0.0);
      return y;
    }
  }
  return x;
}

struct Forward {
  Vec logits;
  std::vector<Vec> taps;  // after every relu
};

inline Forward forward(const snnc::ModelGraph& m, const float* sample) {
  std::vector<std::size_t> shape = m.input_shape;
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  Vec x(sample, sample + n);
  Forward f;
  for (const auto& l : m.layers) {
    x = layer(l, x, shape);
    if (l.kind == snnc::LayerKind::relu) f.taps.push_back(x);
  }
  f.logits = x;
  return f;
}

// Unit spikes of one IF neuron under constant current c with v(0) = V/2.
inline long long closed_form_spikes(double c, std::size_t t, double v, int phi) {
  const double q = std::floor((c * double(t) + v / 2.0) / v);
  return static_cast<long long>(std::clamp(q, 0.0, double(phi) * double(t)));
}

inline double kl(const Vec& p, const Vec& q) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double a = std::max(p[i], 1e-12), b = std::max(q[i], 1e-12);
    s += a * std::log(a / b);
  }
  return s;
}

struct Plan {
  std::vector<std::size_t> choice;
  double s = 0.0, e = 0.0;
};

// Every plan of the table.
inline std::vector<Plan> enumerate(const snnc::SensitivityTable& t) {
  std::vector<Plan> all;
  const std::size_t n = t.candidates.size();
  std::size_t total = 1;
  for (std::size_t l = 0; l < t.layer_count; ++l) total *= n;
  for (std::size_t code = 0; code < total; ++code) {
    Plan p;
    std::size_t rest = code;
    for (std::size_t l = 0; l < t.layer_count; ++l) {
      const std::size_t c = rest % n;
      rest /= n;
      p.choice.push_back(c);
      p.s += t.rows[l * n + c].sensitivity;
      p.e += t.rows[l * n + c].energy;
    }
    all.push_back(p);
  }
  return all;
}

inline bool dominates(const Plan& a, double s, double e) {
  return a.s <= s && a.e <= e && (a.s < s || a.e < e);
}

// Lower convex hull of the (resource, objective) cloud; returns true when the
// point lies on it (within tol).
inline bool on_lower_hull(const std::vector<Plan>& all, bool phi_mode, const Plan& p, double tol = 1e-12) {
  const auto res = [&](const Plan& q) { return phi_mode ? q.e : q.s; };
  const auto obj = [&](const Plan& q) { return phi_mode ? q.s : q.e; };
  // p is on the hull iff some lambda >= 0 makes it a minimiser of obj + lambda*res.
  std::vector<double> lambdas = {0.0};
  for (const auto& q : all) {
    const double dr = res(p) - res(q);
    if (dr != 0.0) {
      const double l = (obj(q) - obj(p)) / dr;
      if (l >= 0.0) lambdas.push_back(l);
    }
  }
  for (double l : lambdas) {
    const double vp = obj(p) + l * res(p);
    bool min = true;
    for (const auto& q : all) {
      if (obj(q) + l * res(q) < vp - tol * (1.0 + std::abs(vp))) {
        min = false;
        break;
      }
    }
    if (min) return true;
  }
  return false;
}

inline snnc::SensitivityTable random_table(std::mt19937_64& rng, snnc::ParamKind kind, std::size_t layers,
                                           std::size_t n) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  snnc::SensitivityTable t;
  t.kind = kind;
  t.sample_count = 16;
  t.layer_count = layers;
  for (std::size_t c = 0; c < n; ++c) t.candidates.push_back(int(c) + 1);
  for (std::size_t l = 0; l < layers; ++l)
    for (std::size_t c = 0; c < n; ++c) t.rows.push_back({l, int(c) + 1, u(rng), u(rng)});
  return t;
}

}  // namespace oracle
