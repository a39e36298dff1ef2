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

#include <cmath>
#include <cstring>
#include <limits>
#include <random>

#include "doctest.h"
#include "oracle.hpp"
#include "snnc/dataset.hpp"
#include "snnc/error.hpp"
#include "snnc/model.hpp"
#include "snnc/trainer.hpp"

using namespace snnc;

namespace {

Tensor random_tensor(Shape shape, std::mt19937_64& rng, float scale = 1.0f) {
  std::normal_distribution<float> g(0.0f, scale);
  Tensor t(std::move(shape));
  for (auto& v : t.data()) v = g(rng);
  return t;
}

void check_against_oracle(const ModelGraph& m, const Tensor& batch, double tol) {
  const auto fwd = forward_with_taps(m, batch);
  const std::size_t per = batch.size() / batch.dim(0);
  for (std::size_t b = 0; b < batch.dim(0); ++b) {
    const auto ref = oracle::forward(m, batch.data().data() + b * per);
    const auto row = fwd.logits.row(b);
    REQUIRE(row.size() == ref.logits.size());
    for (std::size_t i = 0; i < row.size(); ++i) {
      CHECK(std::abs(row[i] - ref.logits[i]) <= tol * std::max(1.0, std::abs(ref.logits[i])));
    }
    std::size_t k = 0;
    for (const auto& [layer, tap] : fwd.taps) {
      const auto t = tap.row(b);
      for (std::size_t i = 0; i < t.size(); ++i) {
        CHECK(std::abs(t[i] - ref.taps[k][i]) <= tol * std::max(1.0, std::abs(ref.taps[k][i])));
      }
      ++k;
    }
  }
}

}  // namespace

TEST_CASE("tensor construction rejects bad element counts and non-finite values") {
  CHECK_THROWS_AS(Tensor({2, 2}, {1.0f, 2.0f}), ShapeError);
  CHECK_THROWS_AS(Tensor({2}, {1.0f, std::numeric_limits<float>::quiet_NaN()}), ConfigError);
  CHECK_THROWS_AS(Tensor({1}, {std::numeric_limits<float>::infinity()}), ConfigError);
  const Tensor t({2, 3});
  CHECK(t.size() == 6);
  CHECK(t.sample_shape() == Shape{3});
}

TEST_CASE("identity dense layer returns its input") {
  ModelGraph m;
  m.input_shape = {3};
  m.class_count = 3;
  auto d = LayerSpec::dense(3, 3);
  d.weight = Tensor({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
  d.bias = Tensor({3});
  m.layers.push_back(d);
  const Tensor x({2, 3}, {1.5f, -2.0f, 0.25f, 3.0f, 0.0f, -1.0f});
  CHECK(forward(m, x) == x);
}

TEST_CASE("all-zero parameters give zero logits") {
  std::vector<std::size_t> hidden{5};
  auto m = make_mlp({4}, hidden, 3, 1);
  for (auto& l : m.layers) {
    if (!l.has_parameters()) continue;
    for (auto& v : l.weight.data()) v = 0.0f;
    for (auto& v : l.bias.data()) v = 0.0f;
  }
  std::mt19937_64 rng(3);
  const auto y = forward(m, random_tensor({7, 4}, rng));
  for (float v : y.data()) CHECK(v == 0.0f);
}

TEST_CASE("relu tap of [-1, 2] is [0, 2]") {
  ModelGraph m;
  m.input_shape = {2};
  m.class_count = 2;
  auto d1 = LayerSpec::dense(2, 2);
  d1.weight = Tensor({2, 2}, {1, 0, 0, 1});
  d1.bias = Tensor({2});
  auto d2 = d1;
  m.layers = {d1, LayerSpec::relu(), d2};
  const auto f = forward_with_taps(m, Tensor({1, 2}, {-1.0f, 2.0f}));
  REQUIRE(f.taps.count(1) == 1);
  CHECK(f.taps.at(1) == Tensor({1, 2}, {0.0f, 2.0f}));
  const auto z = forward_with_taps(m, Tensor({3, 2}));
  for (float v : z.taps.at(1).data()) CHECK(v == 0.0f);
}

TEST_CASE("forward matches the naive oracle on 100 random networks") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<std::size_t> width(1, 12);
  for (int trial = 0; trial < 100; ++trial) {
    CAPTURE(trial);
    ModelGraph m;
    if (trial % 4 == 3) {
      const std::size_t ch = width(rng) % 3 + 1, side = 4 + trial % 3 * 2;
      std::vector<std::size_t> channels{width(rng) % 4 + 1};
      m = make_cnn({ch, side, side}, channels, width(rng), 2 + trial % 3, 100 + trial);
    } else {
      std::vector<std::size_t> hidden{width(rng), width(rng)};
      m = make_mlp({width(rng)}, hidden, 2 + trial % 5, 100 + trial);
    }
    for (auto& l : m.layers) {
      if (!l.has_parameters()) continue;
      for (auto& v : l.bias.data()) v = std::normal_distribution<float>(0.0f, 0.5f)(rng);
    }
    Shape in{4};
    in.insert(in.end(), m.input_shape.begin(), m.input_shape.end());
    check_against_oracle(m, random_tensor(in, rng), 1e-5);
  }
}

TEST_CASE("conv with stride and padding matches the oracle") {
  std::mt19937_64 rng(5);
  ModelGraph m;
  m.input_shape = {2, 7, 7};
  m.class_count = 3;
  auto conv = LayerSpec::conv2d(2, 3, 3, 2, 1);
  m.layers = {conv, LayerSpec::relu(), LayerSpec::avgpool2d(2, 2), LayerSpec::flatten(), LayerSpec::dense(12, 3)};
  init_parameters(m, 9);
  check_against_oracle(m, random_tensor({3, 2, 7, 7}, rng), 1e-5);
}

TEST_CASE("forward is batch independent") {
  std::mt19937_64 rng(21);
  std::vector<std::size_t> hidden{16, 8};
  const auto m = make_mlp({6}, hidden, 4, 2);
  const auto a = random_tensor({5, 6}, rng), b = random_tensor({3, 6}, rng);
  const auto joint = forward(m, Tensor::concat_rows(a, b));
  const auto split = Tensor::concat_rows(forward(m, a), forward(m, b));
  for (std::size_t i = 0; i < joint.size(); ++i) CHECK(std::abs(joint[i] - split[i]) <= 1e-6f);
}

TEST_CASE("relu taps are non-negative") {
  std::mt19937_64 rng(8);
  std::vector<std::size_t> hidden{10, 10, 10};
  const auto m = make_mlp({5}, hidden, 3, 4);
  const auto f = forward_with_taps(m, random_tensor({20, 5}, rng, 3.0f));
  CHECK(f.taps.size() == 3);
  for (const auto& [k, tap] : f.taps) {
    for (float v : tap.data()) CHECK(v >= 0.0f);
  }
}

TEST_CASE("shape errors name the offending layer") {
  std::vector<std::size_t> hidden{4};
  const auto m = make_mlp({3}, hidden, 2, 1);
  try {
    forward(m, Tensor({2, 5}));
    FAIL("expected ShapeError");
  } catch (const ShapeError& e) {
    CHECK(std::string(e.what()).find("layer 0") != std::string::npos);
  }
}

TEST_CASE("model validation enforces relu placement and the output layer") {
  ModelGraph m;
  m.input_shape = {2};
  m.class_count = 2;
  auto d = LayerSpec::dense(2, 2);
  d.weight = Tensor({2, 2});
  d.bias = Tensor({2});
  m.layers = {LayerSpec::relu(), d};
  CHECK_THROWS_AS(m.validate(), ShapeError);
  m.layers = {d, LayerSpec::relu()};
  CHECK_THROWS_AS(m.validate(), ShapeError);
  m.layers = {d};
  m.class_count = 3;
  CHECK_THROWS_AS(m.validate(), ShapeError);
}

TEST_CASE("trainer separates two blobs") {
  SyntheticOptions opts;
  opts.separation = 4.0f;
  const auto data = make_synthetic(SyntheticKind::blobs, 200, 7, opts);
  std::vector<std::size_t> hidden{16};
  TrainOptions t;
  t.epochs = 50;
  t.seed = 3;
  const auto m = train_reference(make_mlp({2}, hidden, 2, 3), data.images, data.labels, t);
  CHECK(accuracy_of(forward(m, data.images), data.labels) >= 0.99);
}

TEST_CASE("zero learning rate leaves parameters unchanged") {
  const auto data = make_synthetic(SyntheticKind::blobs, 40, 1);
  std::vector<std::size_t> hidden{8};
  const auto m0 = make_mlp({2}, hidden, 2, 5);
  TrainOptions t;
  t.epochs = 3;
  t.learning_rate = 0.0f;
  CHECK(train_reference(m0, data.images, data.labels, t) == m0);
}

TEST_CASE("training is deterministic under a fixed seed") {
  const auto data = make_synthetic(SyntheticKind::rings, 120, 4, {3, {2}, 8.0f, 1.0f});
  std::vector<std::size_t> hidden{12, 6};
  TrainOptions t;
  t.epochs = 5;
  t.seed = 17;
  const auto a = train_reference(make_mlp({2}, hidden, 3, 2), data.images, data.labels, t);
  const auto b = train_reference(make_mlp({2}, hidden, 3, 2), data.images, data.labels, t);
  for (std::size_t i = 0; i < a.layers.size(); ++i) {
    const auto& la = a.layers[i].weight.data();
    const auto& lb = b.layers[i].weight.data();
    REQUIRE(la.size() == lb.size());
    CHECK(std::memcmp(la.data(), lb.data(), la.size_bytes()) == 0);
  }
}

TEST_CASE("a diverging loss raises a training error") {
  const auto data = make_synthetic(SyntheticKind::blobs, 64, 2);
  std::vector<std::size_t> hidden{8};
  TrainOptions t;
  t.epochs = 50;
  t.learning_rate = 1e30f;
  CHECK_THROWS_AS(train_reference(make_mlp({2}, hidden, 2, 1), data.images, data.labels, t), TrainingError);
}

TEST_CASE("argmax breaks ties toward the lower index") {
  const Tensor s({2, 3}, {1, 3, 3, 0, 0, 0});
  CHECK(argmax_rows(s) == std::vector<std::int32_t>{1, 0});
}
