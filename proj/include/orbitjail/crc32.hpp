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

namespace orbitjail {

// CRC-32 as used by zlib/PNG: reflected polynomial 0xEDB88320, initial value
// 0xFFFFFFFF, final xor 0xFFFFFFFF.
std::uint32_t crc32(std::span<const std::uint8_t> data);

// Continues a running checksum; start from kCrc32Init and finish with
// crc32_final().
inline constexpr std::uint32_t kCrc32Init = 0xFFFFFFFFu;
std::uint32_t crc32_update(std::uint32_t state, std::span<const std::uint8_t> data);
inline constexpr std::uint32_t crc32_final(std::uint32_t state) { return state ^ 0xFFFFFFFFu; }

}  // namespace orbitjail
