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
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "orbitjail/error.hpp"

namespace orbitjail::mw {

enum class FrameType : std::uint8_t {
  kSub = 0x01,
  kPub = 0x02,
  kReq = 0x03,
  kResp = 0x04,
  kRegSvc = 0x05,
  kErr = 0x06,
};
std::string_view to_string(FrameType type);

inline constexpr std::size_t kMaxNameLength = 255;
// Largest length field accepted from a stream; guards against bogus peers.
inline constexpr std::uint32_t kMaxFrameLength = 16u << 20;
// length(4) type(1) name_len(2) corr_id(4)
inline constexpr std::size_t kFrameOverhead = 11;

struct Frame {
  FrameType type = FrameType::kPub;
  std::string name;
  std::uint32_t corr_id = 0;
  std::string payload;

  friend bool operator==(const Frame&, const Frame&) = default;
};

class FrameError : public Error {
 public:
  enum class Kind { kTruncated, kBadType, kNameTooLong, kLengthMismatch, kTooLarge };
  FrameError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

std::vector<std::uint8_t> encode_frame(const Frame& frame);

// Decodes exactly one frame occupying all of bytes.
Frame decode_frame(std::span<const std::uint8_t> bytes);

// Stream form: returns the frame and its encoded size, or nullopt when more
// bytes are needed. Never reads past the declared length.
std::optional<std::pair<Frame, std::size_t>> try_decode_frame(std::span<const std::uint8_t> bytes);

}  // namespace orbitjail::mw
