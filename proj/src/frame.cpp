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

#include "orbitjail/frame.hpp"

namespace orbitjail::mw {

namespace {

std::uint32_t load_be32(const std::uint8_t* p) {
  return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) | p[3];
}

void store_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

bool valid_type(std::uint8_t t) { return t >= 0x01 && t <= 0x06; }

// Parses the body that follows the length field.
Frame decode_body(std::span<const std::uint8_t> body) {
  if (body.size() < kFrameOverhead - 4) throw FrameError(FrameError::Kind::kTruncated, "frame body too short");
  if (!valid_type(body[0])) {
    throw FrameError(FrameError::Kind::kBadType, "bad frame type " + std::to_string(body[0]));
  }
  const std::size_t name_len = (std::size_t{body[1]} << 8) | body[2];
  if (name_len > kMaxNameLength) throw FrameError(FrameError::Kind::kNameTooLong, "frame name too long");
  if (body.size() < 3 + name_len + 4) {
    throw FrameError(FrameError::Kind::kLengthMismatch, "name runs past the declared length");
  }
  Frame f;
  f.type = static_cast<FrameType>(body[0]);
  f.name.assign(reinterpret_cast<const char*>(body.data() + 3), name_len);
  f.corr_id = load_be32(body.data() + 3 + name_len);
  const std::size_t payload_at = 3 + name_len + 4;
  f.payload.assign(reinterpret_cast<const char*>(body.data() + payload_at), body.size() - payload_at);
  return f;
}

}  // namespace

std::string_view to_string(FrameType type) {
  switch (type) {
    case FrameType::kSub: return "SUB";
    case FrameType::kPub: return "PUB";
    case FrameType::kReq: return "REQ";
    case FrameType::kResp: return "RESP";
    case FrameType::kRegSvc: return "REGSVC";
    case FrameType::kErr: return "ERR";
  }
  return "?";
}

std::vector<std::uint8_t> encode_frame(const Frame& f) {
  if (f.name.size() > kMaxNameLength) throw FrameError(FrameError::Kind::kNameTooLong, "frame name too long");
  const std::size_t length = kFrameOverhead - 4 + f.name.size() + f.payload.size();
  if (length > kMaxFrameLength) throw FrameError(FrameError::Kind::kTooLarge, "frame too large");
  std::vector<std::uint8_t> out;
  out.reserve(4 + length);
  store_be32(out, static_cast<std::uint32_t>(length));
  out.push_back(static_cast<std::uint8_t>(f.type));
  out.push_back(static_cast<std::uint8_t>(f.name.size() >> 8));
  out.push_back(static_cast<std::uint8_t>(f.name.size()));
  out.insert(out.end(), f.name.begin(), f.name.end());
  store_be32(out, f.corr_id);
  out.insert(out.end(), f.payload.begin(), f.payload.end());
  return out;
}

std::optional<std::pair<Frame, std::size_t>> try_decode_frame(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4) return std::nullopt;
  const std::uint32_t length = load_be32(bytes.data());
  if (length > kMaxFrameLength) throw FrameError(FrameError::Kind::kTooLarge, "declared frame length too large");
  if (bytes.size() - 4 < length) return std::nullopt;
  return std::make_pair(decode_body(bytes.subspan(4, length)), std::size_t{4} + length);
}

Frame decode_frame(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4) throw FrameError(FrameError::Kind::kTruncated, "missing length field");
  const std::uint32_t length = load_be32(bytes.data());
  if (bytes.size() - 4 < length) throw FrameError(FrameError::Kind::kTruncated, "frame shorter than its length");
  if (bytes.size() - 4 > length) {
    throw FrameError(FrameError::Kind::kLengthMismatch, "bytes follow the declared length");
  }
  return decode_body(bytes.subspan(4, length));
}

}  // namespace orbitjail::mw
