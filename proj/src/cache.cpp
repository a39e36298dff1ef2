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

#include "snnc/cache.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "container.hpp"
#include "snnc/digest.hpp"
#include "snnc/error.hpp"
#include "snnc/io.hpp"
#include "snnc/model_store.hpp"

namespace snnc {

namespace {

constexpr std::string_view kMagic = "SNCA";
constexpr std::uint16_t kVersion = 1;
constexpr std::size_t kChunk = 256;

}  // namespace

void CalibrationCache::check_model(const ModelGraph& model) const {
  const auto expected = reference_digest(model);
  if (expected != model_digest) {
    throw DigestMismatch("calibration cache was built from model " + model_digest.substr(0, 12) +
                         "..., not from " + expected.substr(0, 12) + "...");
  }
}

std::string CalibrationCache::digest() const { return sha256_hex(serialize_cache(*this)); }

CalibrationCache build_calibration_cache(const ModelGraph& model, const Dataset& dataset, std::size_t sample_count,
                                         std::uint64_t seed) {
  model.validate();
  dataset.validate();
  if (sample_count == 0 || sample_count > dataset.size()) {
    throw ConfigError("calibration sample count " + std::to_string(sample_count) + " must be in [1, " +
                      std::to_string(dataset.size()) + "]");
  }
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  order.resize(sample_count);
  std::sort(order.begin(), order.end());

  CalibrationCache cache;
  cache.model_digest = model_digest(model);
  cache.sample_indices = order;
  cache.inputs = dataset.images.gather_rows(order);
  for (auto i : order) cache.labels.push_back(dataset.labels[i]);
  cache.tap_layers = model.spiking_layers();

  for (std::size_t start = 0; start < sample_count; start += kChunk) {
    const std::size_t end = std::min(sample_count, start + kChunk);
    auto part = forward_with_taps(model, cache.inputs.slice_rows(start, end));
    cache.logits = cache.logits.empty() ? part.logits : Tensor::concat_rows(cache.logits, part.logits);
    if (cache.taps.empty()) cache.taps.resize(cache.tap_layers.size());
    for (std::size_t k = 0; k < cache.tap_layers.size(); ++k) {
      auto& t = part.taps.at(cache.tap_layers[k]);
      cache.taps[k] = cache.taps[k].empty() ? t : Tensor::concat_rows(cache.taps[k], t);
    }
  }
  return cache;
}

std::vector<std::byte> serialize_cache(const CalibrationCache& cache) {
  detail::BlobWriter blob;
  nlohmann::json h;
  h["format"] = "snnc-calibration-cache";
  h["model_digest"] = cache.model_digest;
  h["sample_indices"] = cache.sample_indices;
  h["labels"] = cache.labels;
  h["inputs"] = blob.add(cache.inputs);
  h["logits"] = blob.add(cache.logits);
  auto taps = nlohmann::json::array();
  for (std::size_t k = 0; k < cache.taps.size(); ++k) {
    auto j = blob.add(cache.taps[k]);
    j["layer"] = cache.tap_layers.at(k);
    taps.push_back(std::move(j));
  }
  h["taps"] = std::move(taps);
  h["blob_length"] = blob.bytes().size();
  return detail::write_container(kMagic, kVersion, h, blob.bytes());
}

CalibrationCache parse_cache(std::span<const std::byte> bytes) {
  auto c = detail::read_container(bytes, kMagic, kVersion, "calibration cache");
  detail::BlobReader reader(c.blob, "calibration cache");
  CalibrationCache cache;
  try {
    cache.model_digest = c.header.at("model_digest").get<std::string>();
    cache.sample_indices = c.header.at("sample_indices").get<std::vector<std::size_t>>();
    cache.labels = c.header.at("labels").get<std::vector<std::int32_t>>();
    cache.inputs = reader.read(c.header.at("inputs"), "inputs");
    cache.logits = reader.read(c.header.at("logits"), "logits");
    for (const auto& j : c.header.at("taps")) {
      cache.tap_layers.push_back(j.at("layer").get<std::size_t>());
      cache.taps.push_back(reader.read(j, "tap " + std::to_string(cache.tap_layers.back())));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(FormatError::Kind::malformed, std::string("calibration cache: bad header: ") + e.what());
  }
  reader.finish();
  const std::size_t n = cache.sample_indices.size();
  bool consistent = n > 0 && cache.labels.size() == n && cache.inputs.dim(0) == n && cache.logits.dim(0) == n;
  for (const auto& t : cache.taps) consistent = consistent && t.dim(0) == n;
  if (!consistent) throw FormatError(FormatError::Kind::malformed, "calibration cache: sample counts disagree");
  return cache;
}

void save_cache(const CalibrationCache& cache, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_cache(cache));
}

CalibrationCache load_cache(const std::filesystem::path& path) { return parse_cache(read_file_bytes(path)); }

}  // namespace snnc
