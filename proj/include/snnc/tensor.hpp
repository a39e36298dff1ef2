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

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace snnc {

using Shape = std::vector<std::size_t>;

std::size_t element_count(const Shape& shape);
std::string to_string(const Shape& shape);

/// Dense row-major float32 array.
///
/// A constructed tensor always has positive dimensions and finite values.
/// The default-constructed tensor is the single "empty" state and has no
/// shape at all.
class Tensor {
 public:
  Tensor() = default;

  /// Zero-filled tensor of the given shape.
  explicit Tensor(Shape shape);

  /// Takes ownership of `data`. Throws ShapeError if the element count does
  /// not match and ConfigError if any value is NaN or infinite.
  Tensor(Shape shape, std::vector<float> data);

  static Tensor full(Shape shape, float value);

  bool empty() const noexcept { return data_.empty(); }
  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const noexcept { return data_.size(); }

  std::span<float> data() noexcept { return data_; }
  std::span<const float> data() const noexcept { return data_; }
  float& operator[](std::size_t i) { return data_[i]; }
  float operator[](std::size_t i) const { return data_[i]; }

  /// Elements of the i-th entry along axis 0.
  std::span<const float> row(std::size_t i) const;
  std::span<float> row(std::size_t i);

  /// Per-entry shape (shape without the leading axis).
  Shape sample_shape() const;

  Tensor reshaped(Shape shape) const;
  Tensor slice_rows(std::size_t begin, std::size_t end) const;
  Tensor gather_rows(std::span<const std::size_t> indices) const;
  static Tensor concat_rows(const Tensor& a, const Tensor& b);

  bool all_finite() const noexcept;

  /// Throws InvariantError naming `what` if a value is not finite.
  void check_finite(const std::string& what) const;

  friend bool operator==(const Tensor& a, const Tensor& b) = default;

 private:
  Shape shape_;
  std::vector<float> data_;
};

}  // namespace snnc
