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

#include <chrono>
#include <condition_variable>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

#include "orbitjail/broker.hpp"

namespace orbitjail::mw {

class ConnectionLost : public Error {
 public:
  using Error::Error;
};

class Timeout : public Error {
 public:
  using Error::Error;
};

// An ERR frame from the broker or from the serving node.
class ServiceError : public Error {
 public:
  using Error::Error;
};

struct Message {
  std::string channel;
  std::string payload;
};

using Handler = std::function<std::string(const std::string& payload)>;

// One client connection to the broker. A background reader dispatches
// deliveries, replies, and requests for services this node serves.
class Node {
 public:
  static constexpr std::chrono::milliseconds kDefaultTimeout{5000};

  // Address from the argument, else ORBITJAIL_BROKER.
  static std::unique_ptr<Node> connect(const std::string& address = {});
  ~Node();
  Node(const Node&) = delete;
  Node& operator=(const Node&) = delete;

  void publish(const std::string& channel, const std::string& payload);
  // Returns once the broker has recorded the subscription.
  void subscribe(const std::string& channel, std::chrono::milliseconds timeout = kDefaultTimeout);
  // Next delivery on any subscribed channel, or nullopt on timeout.
  std::optional<Message> receive(std::chrono::milliseconds timeout = kDefaultTimeout);
  std::string call(const std::string& service, const std::string& payload,
                   std::chrono::milliseconds timeout = kDefaultTimeout);
  // Registers service; handler runs on the reader thread.
  void serve(const std::string& service, Handler handler, std::chrono::milliseconds timeout = kDefaultTimeout);
  // Blocks until the broker connection ends.
  void wait_closed();
  void close();
  bool connected() const;

 private:
  explicit Node(int fd);
  struct Reply {
    bool done = false;
    bool error = false;
    std::string payload;
  };
  std::string request(FrameType type, const std::string& name, const std::string& payload,
                      std::chrono::milliseconds timeout);
  void send(const Frame& frame);
  void read_loop();

  int fd_;
  std::mutex write_mu_;
  mutable std::mutex mu_;
  std::condition_variable cv_;
  bool closed_ = false;
  std::uint32_t next_corr_ = 1;
  std::map<std::uint32_t, Reply> replies_;
  std::deque<Message> inbox_;
  std::map<std::string, Handler> handlers_;
  std::thread reader_;
};

}  // namespace orbitjail::mw
