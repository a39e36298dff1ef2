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

#include "snnc/model_store.hpp"

#include "container.hpp"
#include "snnc/digest.hpp"
#include "snnc/error.hpp"
#include "snnc/io.hpp"

namespace snnc {

namespace {

constexpr std::string_view kMagic = "SNNC";

}  // namespace

std::vector<std::byte> serialize_model(const ModelGraph& model) {
  model.validate();
  detail::BlobWriter blob;
  nlohmann::json header;
  header["format"] = "snnc-model";
  header["input_shape"] = model.input_shape;
  header["class_count"] = model.class_count;
  header["source_digest"] = model.source_digest;
  auto layers = nlohmann::json::array();
  for (const auto& l : model.layers) {
    nlohmann::json j;
    j["kind"] = std::string(to_string(l.kind));
    switch (l.kind) {
      case LayerKind::dense:
        j["in_features"] = l.in_features;
        j["out_features"] = l.out_features;
        break;
      case LayerKind::conv2d:
        j["in_channels"] = l.in_channels;
        j["out_channels"] = l.out_channels;
        j["kernel"] = l.kernel;
        j["stride"] = l.stride;
        j["padding"] = l.padding;
        break;
      case LayerKind::avgpool2d:
        j["kernel"] = l.kernel;
        j["stride"] = l.stride;
        break;
      case LayerKind::flatten:
      case LayerKind::relu: break;
    }
    if (l.has_parameters()) {
      j["weight"] = blob.add(l.weight);
      j["bias"] = blob.add(l.bias);
    }
    layers.push_back(std::move(j));
  }
  header["layers"] = std::move(layers);
  header["blob_length"] = blob.bytes().size();
  return detail::write_container(kMagic, kModelFormatVersion, header, blob.bytes());
}

ModelGraph parse_model(std::span<const std::byte> bytes) {
  auto c = detail::read_container(bytes, kMagic, kModelFormatVersion, "model file");
  detail::BlobReader reader(c.blob, "model file");
  ModelGraph m;
  try {
    const auto& h = c.header;
    m.input_shape = h.at("input_shape").get<Shape>();
    m.class_count = h.at("class_count").get<std::size_t>();
    m.source_digest = h.value("source_digest", std::string{});
    std::size_t index = 0;
    for (const auto& j : h.at("layers")) {
      LayerSpec l;
      l.kind = parse_layer_kind(j.at("kind").get<std::string>());
      switch (l.kind) {
        case LayerKind::dense:
          l.in_features = j.at("in_features").get<std::size_t>();
          l.out_features = j.at("out_features").get<std::size_t>();
          break;
        case LayerKind::conv2d:
          l.in_channels = j.at("in_channels").get<std::size_t>();
          l.out_channels = j.at("out_channels").get<std::size_t>();
          l.kernel = j.at("kernel").get<std::size_t>();
          l.stride = j.at("stride").get<std::size_t>();
          l.padding = j.at("padding").get<std::size_t>();
          break;
        case LayerKind::avgpool2d:
          l.kernel = j.at("kernel").get<std::size_t>();
          l.stride = j.at("stride").get<std::size_t>();
          break;
        case LayerKind::flatten:
        case LayerKind::relu: break;
      }
      if (l.has_parameters()) {
        const auto tag = "layer " + std::to_string(index);
        l.weight = reader.read(j.at("weight"), tag + " weight");
        l.bias = reader.read(j.at("bias"), tag + " bias");
      }
      m.layers.push_back(std::move(l));
      ++index;
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(FormatError::Kind::malformed, std::string("model file: bad header: ") + e.what());
  } catch (const ConfigError& e) {
    throw FormatError(FormatError::Kind::malformed, std::string("model file: ") + e.what());
  }
  reader.finish();
  try {
    m.validate();
  } catch (const ShapeError& e) {
    throw FormatError(FormatError::Kind::malformed, std::string("model file: ") + e.what());
  }
  return m;
}

void save_model(const ModelGraph& model, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_model(model));
}

ModelGraph load_model(const std::filesystem::path& path) { return parse_model(read_file_bytes(path)); }

std::string model_digest(const ModelGraph& model) { return sha256_hex(serialize_model(model)); }

std::string reference_digest(const ModelGraph& model) {
  return model.source_digest.empty() ? model_digest(model) : model.source_digest;
}

}  // namespace snnc
