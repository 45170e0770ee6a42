// Copyright 2026 The Orbitjail Authors. All rights reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "orbitjail/error.hpp"

namespace orbitjail {

// Triple-redundant, CRC-guarded container for configuration payloads.
//
//   "SJC1" | {u32be length | payload | u32be crc32(payload)} x 3
//
// Each copy is independently verifiable. When no copy verifies, the three
// equal-length payloads are voted byte-wise and the result is accepted only
// if it matches one of the stored checksums, so decode never returns bytes
// that were not produced by encode.
inline constexpr std::string_view kContainerMagic = "SJC1";
inline constexpr std::size_t kContainerCopies = 3;

class ContainerError : public Error {
 public:
  enum class Kind { kBadMagic, kTruncated, kUnrecoverable };
  ContainerError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

enum class RecoveryPath { kCopy1, kCopy2, kCopy3, kMajority };
std::string_view to_string(RecoveryPath path);

struct DecodedContainer {
  std::vector<std::uint8_t> payload;
  RecoveryPath path;
};

std::size_t resilient_size(std::size_t payload_size);

std::vector<std::uint8_t> encode_resilient(std::span<const std::uint8_t> payload);

// Throws ContainerError.
DecodedContainer decode_resilient(std::span<const std::uint8_t> container);

bool looks_like_container(std::span<const std::uint8_t> bytes);

}  // namespace orbitjail
