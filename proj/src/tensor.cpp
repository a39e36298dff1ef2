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

#include "snnc/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "snnc/error.hpp"

namespace snnc {

std::size_t element_count(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << ']';
  return os.str();
}

namespace {

void check_dims(const Shape& shape) {
  if (shape.empty()) throw ShapeError("tensor shape must have at least one dimension");
  for (auto d : shape) {
    if (d == 0) throw ShapeError("tensor shape " + to_string(shape) + " has a zero dimension");
  }
}

}  // namespace

Tensor::Tensor(Shape shape) : shape_(std::move(shape)) {
  check_dims(shape_);
  data_.assign(element_count(shape_), 0.0f);
}

Tensor::Tensor(Shape shape, std::vector<float> data) : shape_(std::move(shape)), data_(std::move(data)) {
  check_dims(shape_);
  if (element_count(shape_) != data_.size()) {
    throw ShapeError("tensor shape " + to_string(shape_) + " needs " + std::to_string(element_count(shape_)) +
                     " values, got " + std::to_string(data_.size()));
  }
  if (!all_finite()) throw ConfigError("tensor of shape " + to_string(shape_) + " contains NaN or Inf");
}

Tensor Tensor::full(Shape shape, float value) {
  Tensor t(std::move(shape));
  std::fill(t.data_.begin(), t.data_.end(), value);
  return t;
}

std::span<const float> Tensor::row(std::size_t i) const {
  const std::size_t stride = data_.size() / shape_.at(0);
  return std::span<const float>(data_).subspan(i * stride, stride);
}

std::span<float> Tensor::row(std::size_t i) {
  const std::size_t stride = data_.size() / shape_.at(0);
  return std::span<float>(data_).subspan(i * stride, stride);
}

Shape Tensor::sample_shape() const { return Shape(shape_.begin() + 1, shape_.end()); }

Tensor Tensor::reshaped(Shape shape) const {
  if (element_count(shape) != data_.size()) {
    throw ShapeError("cannot reshape " + to_string(shape_) + " to " + to_string(shape));
  }
  Tensor t;
  t.shape_ = std::move(shape);
  check_dims(t.shape_);
  t.data_ = data_;
  return t;
}

Tensor Tensor::slice_rows(std::size_t begin, std::size_t end) const {
  if (begin >= end || end > shape_.at(0)) {
    throw ShapeError("row slice [" + std::to_string(begin) + ", " + std::to_string(end) + ") out of range for " +
                     to_string(shape_));
  }
  const std::size_t stride = data_.size() / shape_[0];
  Tensor t;
  t.shape_ = shape_;
  t.shape_[0] = end - begin;
  t.data_.assign(data_.begin() + static_cast<std::ptrdiff_t>(begin * stride),
                 data_.begin() + static_cast<std::ptrdiff_t>(end * stride));
  return t;
}

Tensor Tensor::gather_rows(std::span<const std::size_t> indices) const {
  if (indices.empty()) throw ShapeError("gather_rows needs at least one index");
  const std::size_t stride = data_.size() / shape_.at(0);
  Tensor t;
  t.shape_ = shape_;
  t.shape_[0] = indices.size();
  t.data_.reserve(indices.size() * stride);
  for (auto i : indices) {
    if (i >= shape_[0]) throw ShapeError("gather index " + std::to_string(i) + " out of range");
    auto r = row(i);
    t.data_.insert(t.data_.end(), r.begin(), r.end());
  }
  return t;
}

Tensor Tensor::concat_rows(const Tensor& a, const Tensor& b) {
  if (a.sample_shape() != b.sample_shape()) {
    throw ShapeError("cannot concatenate " + to_string(a.shape_) + " and " + to_string(b.shape_));
  }
  Tensor t;
  t.shape_ = a.shape_;
  t.shape_[0] += b.shape_[0];
  t.data_ = a.data_;
  t.data_.insert(t.data_.end(), b.data_.begin(), b.data_.end());
  return t;
}

bool Tensor::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](float v) { return std::isfinite(v); });
}

void Tensor::check_finite(const std::string& what) const {
  if (!all_finite()) throw InvariantError(what + ": non-finite value in tensor " + to_string(shape_));
}

}  // namespace snnc
