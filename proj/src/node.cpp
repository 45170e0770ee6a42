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

#include "orbitjail/node.hpp"

#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstdlib>

namespace orbitjail::mw {

std::unique_ptr<Node> Node::connect(const std::string& address) {
  std::string addr = address;
  if (addr.empty()) {
    const char* env = std::getenv("ORBITJAIL_BROKER");
    if (!env || !*env) throw Error("no broker address given and ORBITJAIL_BROKER is unset");
    addr = env;
  }
  int fd;
  try {
    fd = connect_socket(parse_address(addr));
  } catch (const Error& e) {
    throw ConnectionLost(e.what());
  }
  return std::unique_ptr<Node>(new Node(fd));
}

Node::Node(int fd) : fd_(fd) {
  reader_ = std::thread([this] { read_loop(); });
}

Node::~Node() {
  close();
  if (reader_.joinable()) reader_.join();
  ::close(fd_);
}

void Node::close() { ::shutdown(fd_, SHUT_RDWR); }

bool Node::connected() const {
  std::lock_guard lock(mu_);
  return !closed_;
}

void Node::send(const Frame& frame) {
  const auto bytes = encode_frame(frame);
  std::lock_guard lock(write_mu_);
  if (!write_all(fd_, bytes.data(), bytes.size())) throw ConnectionLost("broker connection lost");
}

void Node::publish(const std::string& channel, const std::string& payload) {
  send(Frame{FrameType::kPub, channel, 0, payload});
}

std::string Node::request(FrameType type, const std::string& name, const std::string& payload,
                          std::chrono::milliseconds timeout) {
  std::uint32_t corr;
  {
    std::lock_guard lock(mu_);
    if (closed_) throw ConnectionLost("broker connection lost");
    corr = next_corr_++;
    if (next_corr_ == 0) next_corr_ = 1;
    replies_[corr] = Reply{};
  }
  send(Frame{type, name, corr, payload});
  std::unique_lock lock(mu_);
  const bool ready = cv_.wait_for(lock, timeout, [&] { return replies_[corr].done || closed_; });
  Reply r = replies_[corr];
  replies_.erase(corr);
  if (r.done) {
    if (r.error) throw ServiceError(name + ": " + r.payload);
    return r.payload;
  }
  if (!ready) throw Timeout(std::string(to_string(type)) + " " + name + " timed out");
  throw ConnectionLost("broker connection lost");
}

void Node::subscribe(const std::string& channel, std::chrono::milliseconds timeout) {
  request(FrameType::kSub, channel, {}, timeout);
}

std::string Node::call(const std::string& service, const std::string& payload, std::chrono::milliseconds timeout) {
  return request(FrameType::kReq, service, payload, timeout);
}

void Node::serve(const std::string& service, Handler handler, std::chrono::milliseconds timeout) {
  {
    std::lock_guard lock(mu_);
    handlers_[service] = std::move(handler);
  }
  try {
    request(FrameType::kRegSvc, service, {}, timeout);
  } catch (...) {
    std::lock_guard lock(mu_);
    handlers_.erase(service);
    throw;
  }
}

std::optional<Message> Node::receive(std::chrono::milliseconds timeout) {
  std::unique_lock lock(mu_);
  cv_.wait_for(lock, timeout, [&] { return !inbox_.empty() || closed_; });
  if (inbox_.empty()) {
    if (closed_) throw ConnectionLost("broker connection lost");
    return std::nullopt;
  }
  Message m = std::move(inbox_.front());
  inbox_.pop_front();
  return m;
}

void Node::wait_closed() {
  std::unique_lock lock(mu_);
  cv_.wait(lock, [&] { return closed_; });
}

void Node::read_loop() {
  std::vector<std::uint8_t> buf;
  std::uint8_t chunk[65536];
  while (true) {
    const ssize_t n = ::recv(fd_, chunk, sizeof chunk, 0);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) break;
    buf.insert(buf.end(), chunk, chunk + n);
    std::size_t used = 0;
    try {
      while (auto decoded = try_decode_frame(std::span(buf).subspan(used))) {
        used += decoded->second;
        const Frame& f = decoded->first;
        if (f.type == FrameType::kPub) {
          std::lock_guard lock(mu_);
          inbox_.push_back(Message{f.name, f.payload});
          cv_.notify_all();
        } else if (f.type == FrameType::kResp || f.type == FrameType::kErr) {
          std::lock_guard lock(mu_);
          auto it = replies_.find(f.corr_id);
          if (it != replies_.end()) {
            it->second = Reply{true, f.type == FrameType::kErr, f.payload};
            cv_.notify_all();
          }
        } else if (f.type == FrameType::kReq) {
          Handler h;
          {
            std::lock_guard lock(mu_);
            auto it = handlers_.find(f.name);
            if (it != handlers_.end()) h = it->second;
          }
          Frame reply{FrameType::kResp, f.name, f.corr_id, {}};
          if (!h) {
            reply.type = FrameType::kErr;
            reply.payload = std::string(kErrNoSuchService);
          } else {
            try {
              reply.payload = h(f.payload);
            } catch (const std::exception& e) {
              reply.type = FrameType::kErr;
              reply.payload = e.what();
            }
          }
          try {
            send(reply);
          } catch (const ConnectionLost&) {
          }
        }
      }
    } catch (const FrameError&) {
      break;
    }
    buf.erase(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(used));
  }
  std::lock_guard lock(mu_);
  closed_ = true;
  cv_.notify_all();
}

}  // namespace orbitjail::mw
