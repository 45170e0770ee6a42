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
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "orbitjail/frame.hpp"

namespace orbitjail::mw {

using ConnId = std::uint64_t;

struct Delivery {
  ConnId to = 0;
  Frame frame;

  friend bool operator==(const Delivery&, const Delivery&) = default;
};

// Routing tables of the broker. Single-threaded; the server serializes calls.
class BrokerCore {
 public:
  struct Pending {
    ConnId requester = 0;
    std::uint32_t requester_corr = 0;
    ConnId provider = 0;
    std::string service;
  };

  // Routes one inbound frame and returns what must be sent where.
  std::vector<Delivery> route(ConnId from, const Frame& frame);
  // Forgets a connection; requests it was serving fail back to requesters.
  std::vector<Delivery> disconnect(ConnId conn);

  const std::map<std::string, std::set<ConnId>>& subscriptions() const { return subscriptions_; }
  const std::map<std::string, ConnId>& services() const { return services_; }
  const std::map<std::uint32_t, Pending>& pending() const { return pending_; }
  // Frames that had nowhere to go, one line each.
  const std::vector<std::string>& dropped() const { return dropped_; }

 private:
  std::map<std::string, std::set<ConnId>> subscriptions_;
  std::map<std::string, ConnId> services_;
  std::map<std::uint32_t, Pending> pending_;
  std::uint32_t next_corr_ = 1;
  std::vector<std::string> dropped_;
};

// Error payloads sent in ERR frames.
inline constexpr std::string_view kErrNoSuchService = "no such service";
inline constexpr std::string_view kErrDuplicateService = "duplicate service";
inline constexpr std::string_view kErrProviderGone = "provider disconnected";
inline constexpr std::string_view kErrBadFrame = "unexpected frame type";

// Broker addresses: "unix:/path", "tcp:host:port", or a bare filesystem path.
struct Address {
  enum class Kind { kUnix, kTcp } kind = Kind::kUnix;
  std::string path;
  std::string host;
  std::uint16_t port = 0;
};
Address parse_address(const std::string& text);
std::string to_string(const Address& address);

// Connects a stream socket; throws ConnectionLost-style errors as Error.
int connect_socket(const Address& address);

// Writes all bytes, retrying on short writes. False when the peer is gone.
bool write_all(int fd, const void* data, std::size_t size);

// Concurrent broker over local stream sockets.
class BrokerServer {
 public:
  explicit BrokerServer(const std::string& address);
  ~BrokerServer();
  BrokerServer(const BrokerServer&) = delete;
  BrokerServer& operator=(const BrokerServer&) = delete;

  // Bound address; for tcp with port 0 it carries the chosen port.
  std::string address() const;
  void stop();
  std::uint64_t frames_routed() const;
  std::vector<std::string> dropped() const;
  // Optional sink for the drop log (called with the routing lock held).
  void set_drop_log(int fd);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace orbitjail::mw
