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

#include <doctest.h>

#include <random>

#include "orbitjail/frame.hpp"

using namespace orbitjail::mw;

namespace {

std::vector<std::uint8_t> hex(std::initializer_list<int> v) { return {v.begin(), v.end()}; }

Frame random_frame(std::mt19937& rng) {
  Frame f;
  f.type = static_cast<FrameType>(1 + rng() % 6);
  f.name.resize(rng() % 40);
  for (auto& c : f.name) c = static_cast<char>('a' + rng() % 26);
  if (f.type != FrameType::kPub && f.type != FrameType::kSub) f.corr_id = static_cast<std::uint32_t>(rng());
  f.payload.resize(rng() % 300);
  for (auto& c : f.payload) c = static_cast<char>(rng());
  return f;
}

}  // namespace

TEST_CASE("publish on channel A with payload hi") {
  // length = type(1) + name_len(2) + name(1) + corr_id(4) + payload(2) = 10
  const auto expected = hex({0x00, 0x00, 0x00, 0x0A, 0x02, 0x00, 0x01, 0x41, 0x00, 0x00, 0x00, 0x00, 0x68, 0x69});
  const Frame f{FrameType::kPub, "A", 0, "hi"};
  CHECK(encode_frame(f) == expected);
  CHECK(decode_frame(expected) == f);
}

TEST_CASE("request frame layout") {
  const Frame f{FrameType::kReq, "cmd", 0x01020304, "PING"};
  const auto b = encode_frame(f);
  REQUIRE(b.size() == 4 + 1 + 2 + 3 + 4 + 4);
  CHECK(b[3] == 1 + 2 + 3 + 4 + 4);
  CHECK(b[4] == 0x03);
  CHECK(b[6] == 3);
  CHECK(b[10] == 0x01);
  CHECK(b[13] == 0x04);
}

TEST_CASE("round trip over random frames") {
  std::mt19937 rng(5);
  for (int i = 0; i < 2000; ++i) {
    const Frame f = random_frame(rng);
    CHECK(decode_frame(encode_frame(f)) == f);
  }
}

TEST_CASE("malformed frames") {
  auto kind_of = [](std::vector<std::uint8_t> b) {
    try {
      decode_frame(b);
    } catch (const FrameError& e) {
      return e.kind();
    }
    FAIL("decoded");
    return FrameError::Kind::kTooLarge;
  };
  auto good = encode_frame(Frame{FrameType::kPub, "A", 0, "hi"});

  auto bad_type = good;
  bad_type[4] = 0x07;
  CHECK(kind_of(bad_type) == FrameError::Kind::kBadType);
  bad_type[4] = 0x00;
  CHECK(kind_of(bad_type) == FrameError::Kind::kBadType);

  auto truncated = good;
  truncated.pop_back();
  CHECK(kind_of(truncated) == FrameError::Kind::kTruncated);
  CHECK(kind_of({0x00, 0x00}) == FrameError::Kind::kTruncated);

  auto trailing = good;
  trailing.push_back(0x00);
  CHECK(kind_of(trailing) == FrameError::Kind::kLengthMismatch);

  auto long_name = good;
  long_name[5] = 0x01;  // name_len = 257
  long_name[6] = 0x01;
  CHECK(kind_of(long_name) == FrameError::Kind::kNameTooLong);

  auto name_overrun = good;
  name_overrun[6] = 0x09;  // name claims more bytes than the frame holds
  CHECK(kind_of(name_overrun) == FrameError::Kind::kLengthMismatch);

  CHECK_THROWS_AS(encode_frame(Frame{FrameType::kPub, std::string(256, 'x'), 0, ""}), FrameError);
}

TEST_CASE("stream decoding waits for whole frames and stops at the declared length") {
  const auto a = encode_frame(Frame{FrameType::kPub, "A", 0, "one"});
  const auto b = encode_frame(Frame{FrameType::kReq, "svc", 9, "two"});
  std::vector<std::uint8_t> stream = a;
  stream.insert(stream.end(), b.begin(), b.end());
  for (std::size_t cut = 0; cut < a.size(); ++cut) {
    CHECK_FALSE(try_decode_frame(std::span(stream).first(cut)).has_value());
  }
  auto first = try_decode_frame(stream);
  REQUIRE(first);
  CHECK(first->second == a.size());
  CHECK(first->first.payload == "one");
  auto second = try_decode_frame(std::span(stream).subspan(first->second));
  REQUIRE(second);
  CHECK(second->first == Frame{FrameType::kReq, "svc", 9, "two"});

  const std::vector<std::uint8_t> huge{0x7f, 0xff, 0xff, 0xff};
  CHECK_THROWS_AS(try_decode_frame(huge), FrameError);
}
