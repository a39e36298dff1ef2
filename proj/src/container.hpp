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

// Shared layout of the model file and the calibration cache:
//
//   magic      4 bytes
//   version    u16, little endian
//   header_len u32, little endian
//   header     header_len bytes of UTF-8 JSON
//   blob       little-endian f32 tensors, addressed by the header

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "snnc/tensor.hpp"

namespace snnc::detail {

struct Container {
  nlohmann::json header;
  std::span<const std::byte> blob;
};

std::vector<std::byte> write_container(std::string_view magic, std::uint16_t version,
                                       const nlohmann::json& header, std::span<const std::byte> blob);

/// Checks magic, version and the header/blob framing. The blob length must
/// equal header["blob_length"] exactly.
Container read_container(std::span<const std::byte> bytes, std::string_view magic, std::uint16_t version,
                         std::string_view what);

/// Appends tensors to a blob and records their location.
class BlobWriter {
 public:
  nlohmann::json add(const Tensor& t);
  const std::vector<std::byte>& bytes() const noexcept { return blob_; }

 private:
  std::vector<std::byte> blob_;
};

/// Reads tensors described in a header and checks that, together, they tile
/// the blob without gaps or overlaps (call finish() after the last read).
class BlobReader {
 public:
  BlobReader(std::span<const std::byte> blob, std::string_view what) : blob_(blob), what_(what) {}

  Tensor read(const nlohmann::json& desc, const std::string& name);
  void finish();

 private:
  struct Range {
    std::uint64_t offset, length;
    std::string name;
  };
  std::span<const std::byte> blob_;
  std::string what_;
  std::vector<Range> ranges_;
};

}  // namespace snnc::detail
