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

#include "snnc/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

#include "snnc/error.hpp"
#include "snnc/io.hpp"

namespace snnc {

void Dataset::validate() const {
  if (labels.empty()) throw DatasetError("dataset is empty");
  if (images.empty() || images.dim(0) != labels.size()) {
    throw DatasetError("dataset has " + std::to_string(labels.size()) + " labels but images of shape " +
                       to_string(images.shape()));
  }
  if (!images.all_finite()) throw DatasetError("dataset images contain NaN or Inf");
  for (auto y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= class_count) {
      throw DatasetError("label " + std::to_string(y) + " outside [0, " + std::to_string(class_count) + ")");
    }
  }
}

namespace {

// Number of channels and the per-channel element stride within one sample.
std::pair<std::size_t, std::size_t> channel_layout(const Tensor& images) {
  if (images.rank() >= 3) {
    const std::size_t c = images.dim(1);
    return {c, images.size() / images.dim(0) / c};
  }
  return {1, images.size() / images.dim(0)};
}

}  // namespace

void Dataset::compute_channel_stats() {
  const auto [channels, plane] = channel_layout(images);
  channel_mean.assign(channels, 0.0f);
  channel_std.assign(channels, 0.0f);
  const std::size_t n = images.dim(0);
  for (std::size_t c = 0; c < channels; ++c) {
    double sum = 0.0, sq = 0.0;
    for (std::size_t b = 0; b < n; ++b) {
      const float* p = images.data().data() + (b * channels + c) * plane;
      for (std::size_t i = 0; i < plane; ++i) {
        sum += p[i];
        sq += static_cast<double>(p[i]) * p[i];
      }
    }
    const double count = static_cast<double>(n * plane);
    const double mean = sum / count;
    channel_mean[c] = static_cast<float>(mean);
    channel_std[c] = static_cast<float>(std::sqrt(std::max(0.0, sq / count - mean * mean)));
  }
}

Dataset Dataset::normalized() const {
  Dataset out = *this;
  if (out.channel_mean.empty()) out.compute_channel_stats();
  const auto [channels, plane] = channel_layout(images);
  const std::size_t n = images.dim(0);
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t c = 0; c < channels; ++c) {
      const float sd = out.channel_std[c] > 0.0f ? out.channel_std[c] : 1.0f;
      float* p = out.images.data().data() + (b * channels + c) * plane;
      for (std::size_t i = 0; i < plane; ++i) p[i] = (p[i] - out.channel_mean[c]) / sd;
    }
  }
  return out;
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.images = images.gather_rows(indices);
  out.labels.reserve(indices.size());
  for (auto i : indices) out.labels.push_back(labels.at(i));
  out.class_count = class_count;
  out.channel_mean = channel_mean;
  out.channel_std = channel_std;
  return out;
}

std::pair<Dataset, Dataset> Dataset::split(std::size_t count) const {
  if (count == 0 || count >= size()) {
    throw DatasetError("cannot split " + std::to_string(size()) + " samples at " + std::to_string(count));
  }
  std::vector<std::size_t> head(count), tail(size() - count);
  std::iota(head.begin(), head.end(), std::size_t{0});
  std::iota(tail.begin(), tail.end(), count);
  return {subset(head), subset(tail)};
}

namespace {

std::uint32_t read_be32(std::span<const std::byte> b, std::size_t at) {
  return (static_cast<std::uint32_t>(b[at]) << 24) | (static_cast<std::uint32_t>(b[at + 1]) << 16) |
         (static_cast<std::uint32_t>(b[at + 2]) << 8) | static_cast<std::uint32_t>(b[at + 3]);
}

}  // namespace

Dataset load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path) {
  const auto img = read_file_bytes(images_path);
  const auto lab = read_file_bytes(labels_path);
  if (img.size() < 16) throw DatasetError(images_path.string() + ": too short for an IDX image header");
  if (lab.size() < 8) throw DatasetError(labels_path.string() + ": too short for an IDX label header");
  if (read_be32(img, 0) != 0x00000803) throw DatasetError(images_path.string() + ": not an IDX image file (magic)");
  if (read_be32(lab, 0) != 0x00000801) throw DatasetError(labels_path.string() + ": not an IDX label file (magic)");
  const std::size_t n = read_be32(img, 4), rows = read_be32(img, 8), cols = read_be32(img, 12);
  const std::size_t nl = read_be32(lab, 4);
  if (n != nl) {
    throw DatasetError("IDX count mismatch: " + std::to_string(n) + " images vs " + std::to_string(nl) + " labels");
  }
  if (n == 0 || rows == 0 || cols == 0) throw DatasetError(images_path.string() + ": empty IDX image file");
  if (img.size() != 16 + n * rows * cols) throw DatasetError(images_path.string() + ": pixel data length mismatch");
  if (lab.size() != 8 + n) throw DatasetError(labels_path.string() + ": label data length mismatch");

  std::vector<float> px(n * rows * cols);
  for (std::size_t i = 0; i < px.size(); ++i) px[i] = static_cast<float>(img[16 + i]) / 255.0f;
  Dataset d;
  d.images = Tensor({n, 1, rows, cols}, std::move(px));
  d.labels.resize(n);
  std::int32_t max_label = 0;
  for (std::size_t i = 0; i < n; ++i) {
    d.labels[i] = static_cast<std::int32_t>(lab[8 + i]);
    max_label = std::max(max_label, d.labels[i]);
  }
  d.class_count = std::max<std::size_t>(2, static_cast<std::size_t>(max_label) + 1);
  d.compute_channel_stats();
  d.validate();
  return d;
}

Dataset load_csv(const std::filesystem::path& path, const Shape& sample_shape, float scale) {
  std::istringstream in(read_file_text(path));
  const std::size_t width = element_count(sample_shape);
  std::vector<float> values;
  Dataset d;
  std::string line;
  std::size_t lineno = 0;
  std::int32_t max_label = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (lineno == 1 && line.rfind("label", 0) == 0) continue;
    std::istringstream row(line);
    std::string cell;
    std::vector<float> parsed;
    while (std::getline(row, cell, ',')) {
      try {
        std::size_t used = 0;
        parsed.push_back(std::stof(cell, &used));
        if (used != cell.size() && cell.find_first_not_of(" \t", used) != std::string::npos) throw std::exception();
      } catch (const std::exception&) {
        throw DatasetError(path.string() + ":" + std::to_string(lineno) + ": cannot parse '" + cell + "'");
      }
    }
    if (parsed.size() != width + 1) {
      throw DatasetError(path.string() + ":" + std::to_string(lineno) + ": expected " + std::to_string(width + 1) +
                         " columns, got " + std::to_string(parsed.size()));
    }
    const auto label = static_cast<std::int32_t>(parsed[0]);
    if (static_cast<float>(label) != parsed[0] || label < 0) {
      throw DatasetError(path.string() + ":" + std::to_string(lineno) + ": label must be a non-negative integer");
    }
    d.labels.push_back(label);
    max_label = std::max(max_label, label);
    for (std::size_t i = 1; i < parsed.size(); ++i) values.push_back(parsed[i] * scale);
  }
  if (d.labels.empty()) throw DatasetError(path.string() + ": no samples");
  Shape shape{d.labels.size()};
  shape.insert(shape.end(), sample_shape.begin(), sample_shape.end());
  d.images = Tensor(std::move(shape), std::move(values));
  d.class_count = std::max<std::size_t>(2, static_cast<std::size_t>(max_label) + 1);
  d.compute_channel_stats();
  d.validate();
  return d;
}

SyntheticKind parse_synthetic_kind(std::string_view name) {
  if (name == "blobs") return SyntheticKind::blobs;
  if (name == "rings") return SyntheticKind::rings;
  throw ConfigError("unknown synthetic dataset kind '" + std::string(name) + "' (expected blobs or rings)");
}

Dataset make_synthetic(std::string_view kind, std::size_t n, std::uint64_t seed, const SyntheticOptions& options) {
  return make_synthetic(parse_synthetic_kind(kind), n, seed, options);
}

Dataset make_synthetic(SyntheticKind kind, std::size_t n, std::uint64_t seed, const SyntheticOptions& options) {
  if (n < 2) throw ConfigError("synthetic dataset needs n >= 2");
  if (options.classes < 2) throw ConfigError("synthetic dataset needs at least 2 classes");
  if (!(options.noise > 0.0f)) throw ConfigError("synthetic noise must be > 0");
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> gauss(0.0f, 1.0f);

  Dataset d;
  d.class_count = options.classes;
  d.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) d.labels[i] = static_cast<std::int32_t>(i % options.classes);
  std::shuffle(d.labels.begin(), d.labels.end(), rng);

  Shape sample = kind == SyntheticKind::rings ? Shape{2} : options.sample_shape;
  if (kind == SyntheticKind::rings && options.sample_shape != Shape{2}) {
    throw ConfigError("rings are two-dimensional; sample_shape must be [2]");
  }
  const std::size_t dims = element_count(sample);
  std::vector<float> values(n * dims);

  if (kind == SyntheticKind::blobs) {
    std::vector<std::vector<float>> centers;
    const float sigma = options.noise;
    const float min_dist = options.separation * sigma;
    for (int attempt = 0; centers.size() < options.classes; ++attempt) {
      if (attempt > 100000) throw ConfigError("cannot place blob centres at the requested separation");
      std::vector<float> c(dims);
      for (auto& v : c) v = gauss(rng) * min_dist;
      bool ok = true;
      for (const auto& other : centers) {
        double dist = 0.0;
        for (std::size_t k = 0; k < dims; ++k) dist += static_cast<double>(c[k] - other[k]) * (c[k] - other[k]);
        if (std::sqrt(dist) < min_dist) ok = false;
      }
      if (ok) centers.push_back(std::move(c));
    }
    for (std::size_t i = 0; i < n; ++i) {
      const auto& c = centers[static_cast<std::size_t>(d.labels[i])];
      for (std::size_t k = 0; k < dims; ++k) values[i * dims + k] = c[k] + sigma * gauss(rng);
    }
  } else {
    std::uniform_real_distribution<float> angle(0.0f, 2.0f * std::numbers::pi_v<float>);
    for (std::size_t i = 0; i < n; ++i) {
      const float r = static_cast<float>(d.labels[i] + 1) + 0.1f * options.noise * gauss(rng);
      const float a = angle(rng);
      values[i * 2] = r * std::cos(a);
      values[i * 2 + 1] = r * std::sin(a);
    }
  }
  Shape shape{n};
  shape.insert(shape.end(), sample.begin(), sample.end());
  d.images = Tensor(std::move(shape), std::move(values));
  d.compute_channel_stats();
  d.validate();
  return d;
}

}  // namespace snnc
