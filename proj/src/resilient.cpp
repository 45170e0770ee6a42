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

#include "orbitjail/resilient.hpp"

#include <algorithm>
#include <array>
#include <cstring>
#include <limits>
#include <optional>

#include "orbitjail/crc32.hpp"

namespace orbitjail {
namespace {

constexpr std::size_t kRecordOverhead = 8;  // length + crc

void put_u32be(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

std::uint32_t get_u32be(std::span<const std::uint8_t> b, std::size_t at) {
  return (std::uint32_t{b[at]} << 24) | (std::uint32_t{b[at + 1]} << 16) |
         (std::uint32_t{b[at + 2]} << 8) | std::uint32_t{b[at + 3]};
}

struct Record {
  std::uint32_t declared_length;
  std::span<const std::uint8_t> payload;
  std::uint32_t crc;
};

// Records located by walking the declared length fields.
std::vector<Record> parse_sequential(std::span<const std::uint8_t> c) {
  std::vector<Record> records;
  std::size_t at = kContainerMagic.size();
  for (std::size_t i = 0; i < kContainerCopies; ++i) {
    if (c.size() - at < 4) break;
    std::uint32_t len = get_u32be(c, at);
    if (c.size() - at - 4 < std::size_t{len} + 4) break;
    records.push_back({len, c.subspan(at + 4, len), get_u32be(c, at + 4 + len)});
    at += kRecordOverhead + len;
  }
  return records;
}

// Records located purely from the container size. All copies have the same
// length at encode time, so the stride survives corruption of length fields.
std::optional<std::array<Record, 3>> parse_stride(std::span<const std::uint8_t> c) {
  std::size_t body = c.size() - kContainerMagic.size();
  if (body % kContainerCopies != 0) return std::nullopt;
  std::size_t stride = body / kContainerCopies;
  if (stride < kRecordOverhead) return std::nullopt;
  std::size_t len = stride - kRecordOverhead;
  std::array<Record, 3> records{};
  for (std::size_t i = 0; i < kContainerCopies; ++i) {
    std::size_t at = kContainerMagic.size() + i * stride;
    records[i] = {get_u32be(c, at), c.subspan(at + 4, len), get_u32be(c, at + 4 + len)};
  }
  return records;
}

bool verifies(const Record& r) { return crc32(r.payload) == r.crc; }

RecoveryPath copy_path(std::size_t i) {
  static constexpr RecoveryPath kPaths[] = {RecoveryPath::kCopy1, RecoveryPath::kCopy2,
                                            RecoveryPath::kCopy3};
  return kPaths[i];
}

}  // namespace

std::string_view to_string(RecoveryPath path) {
  switch (path) {
    case RecoveryPath::kCopy1: return "copy-1";
    case RecoveryPath::kCopy2: return "copy-2";
    case RecoveryPath::kCopy3: return "copy-3";
    case RecoveryPath::kMajority: return "majority";
  }
  return "unknown";
}

std::size_t resilient_size(std::size_t payload_size) {
  return kContainerMagic.size() + kContainerCopies * (kRecordOverhead + payload_size);
}

std::vector<std::uint8_t> encode_resilient(std::span<const std::uint8_t> payload) {
  if (payload.size() > std::numeric_limits<std::uint32_t>::max()) {
    throw Error("payload too large for a resilient container");
  }
  std::vector<std::uint8_t> out;
  out.reserve(resilient_size(payload.size()));
  out.insert(out.end(), kContainerMagic.begin(), kContainerMagic.end());
  const std::uint32_t crc = crc32(payload);
  for (std::size_t i = 0; i < kContainerCopies; ++i) {
    put_u32be(out, static_cast<std::uint32_t>(payload.size()));
    out.insert(out.end(), payload.begin(), payload.end());
    put_u32be(out, crc);
  }
  return out;
}

bool looks_like_container(std::span<const std::uint8_t> bytes) {
  return bytes.size() >= kContainerMagic.size() &&
         std::memcmp(bytes.data(), kContainerMagic.data(), kContainerMagic.size()) == 0;
}

DecodedContainer decode_resilient(std::span<const std::uint8_t> container) {
  if (container.size() < kContainerMagic.size()) {
    throw ContainerError(ContainerError::Kind::kTruncated, "container shorter than its magic");
  }
  if (!looks_like_container(container)) {
    throw ContainerError(ContainerError::Kind::kBadMagic, "container magic mismatch");
  }

  const auto stride = parse_stride(container);
  if (stride) {
    for (std::size_t i = 0; i < kContainerCopies; ++i) {
      const Record& r = (*stride)[i];
      if (verifies(r)) return {{r.payload.begin(), r.payload.end()}, copy_path(i)};
    }
  }
  const auto sequential = parse_sequential(container);
  for (std::size_t i = 0; i < sequential.size(); ++i) {
    const Record& r = sequential[i];
    if (verifies(r)) return {{r.payload.begin(), r.payload.end()}, copy_path(i)};
  }

  if (stride) {
    const auto& recs = *stride;
    const std::size_t len = recs[0].payload.size();
    const auto agreeing = std::count_if(recs.begin(), recs.end(), [len](const Record& r) {
      return r.declared_length == len;
    });
    // Votes only when the length fields themselves still agree with the
    // layout; losing all of them is not guessed around.
    if (agreeing >= 2) {
      auto vote = [](std::uint8_t a, std::uint8_t b, std::uint8_t c) {
        return static_cast<std::uint8_t>((a & b) | (a & c) | (b & c));
      };
      std::vector<std::uint8_t> voted(len);
      for (std::size_t k = 0; k < len; ++k) {
        voted[k] = vote(recs[0].payload[k], recs[1].payload[k], recs[2].payload[k]);
      }
      // Checksum fields are voted too: a flip in each stored CRC would
      // otherwise leave nothing to compare the voted payload against.
      std::uint32_t voted_crc = 0;
      for (int shift = 24; shift >= 0; shift -= 8) {
        voted_crc = (voted_crc << 8) | vote(static_cast<std::uint8_t>(recs[0].crc >> shift),
                                            static_cast<std::uint8_t>(recs[1].crc >> shift),
                                            static_cast<std::uint8_t>(recs[2].crc >> shift));
      }
      const std::uint32_t crc = crc32(voted);
      if (crc == voted_crc || crc == recs[0].crc || crc == recs[1].crc || crc == recs[2].crc) {
        return {std::move(voted), RecoveryPath::kMajority};
      }
    }
    throw ContainerError(ContainerError::Kind::kUnrecoverable,
                         "no copy verifies and majority vote does not match any checksum");
  }
  if (sequential.size() < kContainerCopies) {
    throw ContainerError(ContainerError::Kind::kTruncated, "container ends inside a record");
  }
  throw ContainerError(ContainerError::Kind::kUnrecoverable, "no copy verifies");
}

}  // namespace orbitjail
