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
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "snnc/model.hpp"

namespace snnc {

/// Model file: "SNNC" magic, u16 version, u32 header length, JSON header,
/// then a little-endian f32 blob holding every weight and bias.
inline constexpr std::uint16_t kModelFormatVersion = 1;

std::vector<std::byte> serialize_model(const ModelGraph& model);
ModelGraph parse_model(std::span<const std::byte> bytes);

void save_model(const ModelGraph& model, const std::filesystem::path& path);
ModelGraph load_model(const std::filesystem::path& path);

/// SHA-256 of the serialized model.
std::string model_digest(const ModelGraph& model);

/// Digest the calibration cache must carry for this model: the model's own
/// digest, or the digest of the source model it was calibrated from.
std::string reference_digest(const ModelGraph& model);

}  // namespace snnc
