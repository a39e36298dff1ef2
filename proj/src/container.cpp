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

#include "container.hpp"

#include <algorithm>
#include <bit>
#include <cstring>

#include "snnc/error.hpp"

namespace snnc::detail {

namespace {

using Kind = FormatError::Kind;

void put_le(std::vector<std::byte>& out, std::uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) out.push_back(static_cast<std::byte>((v >> (8 * i)) & 0xFF));
}

std::uint64_t get_le(std::span<const std::byte> in, std::size_t at, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(in[at + static_cast<std::size_t>(i)]) << (8 * i);
  return v;
}

constexpr std::size_t kPreamble = 4 + 2 + 4;

}  // namespace

std::vector<std::byte> write_container(std::string_view magic, std::uint16_t version, const nlohmann::json& header,
                                       std::span<const std::byte> blob) {
  const std::string text = header.dump(2) + "\n";
  std::vector<std::byte> out;
  out.reserve(kPreamble + text.size() + blob.size());
  for (char c : magic) out.push_back(static_cast<std::byte>(c));
  put_le(out, version, 2);
  put_le(out, text.size(), 4);
  for (char c : text) out.push_back(static_cast<std::byte>(c));
  out.insert(out.end(), blob.begin(), blob.end());
  return out;
}

Container read_container(std::span<const std::byte> bytes, std::string_view magic, std::uint16_t version,
                         std::string_view what) {
  const std::string name(what);
  if (bytes.size() < 4) throw FormatError(Kind::truncated, name + ": file shorter than its magic bytes");
  if (std::memcmp(bytes.data(), magic.data(), 4) != 0) {
    throw FormatError(Kind::bad_magic, name + ": bad magic bytes, expected '" + std::string(magic) + "'");
  }
  if (bytes.size() < kPreamble) throw FormatError(Kind::truncated, name + ": truncated preamble");
  const auto ver = static_cast<std::uint16_t>(get_le(bytes, 4, 2));
  if (ver != version) {
    throw FormatError(Kind::version_mismatch, name + ": format version " + std::to_string(ver) +
                                                  " is not supported (expected " + std::to_string(version) + ")");
  }
  const auto header_len = get_le(bytes, 6, 4);
  if (kPreamble + header_len > bytes.size()) {
    throw FormatError(Kind::truncated, name + ": header declares " + std::to_string(header_len) +
                                           " bytes but the file ends first");
  }
  Container c;
  const auto* text = reinterpret_cast<const char*>(bytes.data() + kPreamble);
  try {
    c.header = nlohmann::json::parse(text, text + header_len);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(Kind::malformed, name + ": header is not valid JSON: " + e.what());
  }
  if (!c.header.is_object() || !c.header.contains("blob_length") || !c.header["blob_length"].is_number_unsigned()) {
    throw FormatError(Kind::malformed, name + ": header lacks blob_length");
  }
  c.blob = bytes.subspan(kPreamble + header_len);
  const auto expected = c.header["blob_length"].get<std::uint64_t>();
  if (c.blob.size() < expected) {
    throw FormatError(Kind::truncated, name + ": parameter blob truncated, expected " + std::to_string(expected) +
                                           " bytes, got " + std::to_string(c.blob.size()));
  }
  if (c.blob.size() > expected) {
    throw FormatError(Kind::malformed, name + ": " + std::to_string(c.blob.size() - expected) +
                                           " unexpected trailing bytes after the blob");
  }
  return c;
}

nlohmann::json BlobWriter::add(const Tensor& t) {
  nlohmann::json desc;
  desc["shape"] = t.shape();
  desc["offset"] = blob_.size();
  desc["length"] = t.size() * sizeof(float);
  for (float v : t.data()) {
    auto bits = std::bit_cast<std::uint32_t>(v);
    put_le(blob_, bits, 4);
  }
  return desc;
}

Tensor BlobReader::read(const nlohmann::json& desc, const std::string& name) {
  Shape shape;
  std::uint64_t offset = 0, length = 0;
  try {
    shape = desc.at("shape").get<Shape>();
    offset = desc.at("offset").get<std::uint64_t>();
    length = desc.at("length").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(Kind::malformed, what_ + ": bad descriptor for " + name + ": " + e.what());
  }
  if (shape.empty() || element_count(shape) * sizeof(float) != length) {
    throw FormatError(Kind::malformed, what_ + ": " + name + " length " + std::to_string(length) +
                                           " does not match shape " + to_string(shape));
  }
  if (offset > blob_.size() || length > blob_.size() - offset) {
    throw FormatError(Kind::offset_overlap, what_ + ": " + name + " range [" + std::to_string(offset) + ", " +
                                                std::to_string(offset + length) + ") exceeds the blob");
  }
  ranges_.push_back({offset, length, name});
  std::vector<float> data(element_count(shape));
  for (std::size_t i = 0; i < data.size(); ++i) {
    data[i] = std::bit_cast<float>(static_cast<std::uint32_t>(get_le(blob_, offset + 4 * i, 4)));
  }
  try {
    return Tensor(std::move(shape), std::move(data));
  } catch (const Error& e) {
    throw FormatError(Kind::malformed, what_ + ": " + name + ": " + e.what());
  }
}

void BlobReader::finish() {
  std::sort(ranges_.begin(), ranges_.end(), [](const Range& a, const Range& b) { return a.offset < b.offset; });
  std::uint64_t cursor = 0;
  for (const auto& r : ranges_) {
    if (r.offset < cursor) {
      throw FormatError(Kind::offset_overlap, what_ + ": " + r.name + " overlaps the preceding tensor");
    }
    if (r.offset > cursor) {
      throw FormatError(Kind::malformed, what_ + ": unused gap before " + r.name);
    }
    cursor = r.offset + r.length;
  }
  if (cursor != blob_.size()) {
    throw FormatError(Kind::malformed, what_ + ": " + std::to_string(blob_.size() - cursor) +
                                           " blob bytes are not referenced by any tensor");
  }
}

}  // namespace snnc::detail
