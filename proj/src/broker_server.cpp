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

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <sys/stat.h>
#include <sys/un.h>
#include <unistd.h>

#include <fcntl.h>

#include <algorithm>
#include <atomic>
#include <cerrno>
#include <condition_variable>
#include <cstring>
#include <deque>

#include "orbitjail/broker.hpp"

namespace orbitjail::mw {

namespace {

struct Conn {
  ConnId id = 0;
  int fd = -1;
  std::mutex mu;
  std::condition_variable cv;
  std::deque<std::vector<std::uint8_t>> out;
  bool closing = false;
  std::thread reader;
  std::thread writer;

  void enqueue(std::vector<std::uint8_t> bytes) {
    std::lock_guard lock(mu);
    if (closing) return;
    out.push_back(std::move(bytes));
    cv.notify_one();
  }

  void close_soon() {
    std::lock_guard lock(mu);
    closing = true;
    cv.notify_one();
  }
};

int listen_socket(const Address& a, Address& bound) {
  bound = a;
  if (a.kind == Address::Kind::kUnix) {
    struct stat st;
    if (::lstat(a.path.c_str(), &st) == 0 && S_ISSOCK(st.st_mode)) ::unlink(a.path.c_str());
    int fd = ::socket(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0);
    sockaddr_un sa{};
    sa.sun_family = AF_UNIX;
    std::strncpy(sa.sun_path, a.path.c_str(), sizeof sa.sun_path - 1);
    if (fd < 0 || ::bind(fd, reinterpret_cast<sockaddr*>(&sa), sizeof sa) != 0 || ::listen(fd, 64) != 0) {
      const int err = errno;
      if (fd >= 0) ::close(fd);
      throw Error("listen " + to_string(a) + ": " + std::strerror(err));
    }
    return fd;
  }
  int fd = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
  int one = 1;
  ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in sa{};
  sa.sin_family = AF_INET;
  sa.sin_port = htons(a.port);
  if (::inet_pton(AF_INET, a.host.c_str(), &sa.sin_addr) != 1) {
    ::close(fd);
    throw Error("tcp host must be a dotted IPv4 address: " + a.host);
  }
  if (::bind(fd, reinterpret_cast<sockaddr*>(&sa), sizeof sa) != 0 || ::listen(fd, 64) != 0) {
    const int err = errno;
    ::close(fd);
    throw Error("listen " + to_string(a) + ": " + std::strerror(err));
  }
  socklen_t len = sizeof sa;
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&sa), &len);
  bound.port = ntohs(sa.sin_port);
  return fd;
}

}  // namespace

struct BrokerServer::Impl {
  Address address;
  int listen_fd = -1;
  int wake[2] = {-1, -1};
  std::thread acceptor;

  // Routing lock: every inbound frame is routed and its deliveries queued
  // atomically, so per-sender order carries through to every receiver.
  mutable std::mutex route_mu;
  BrokerCore core;
  std::map<ConnId, std::shared_ptr<Conn>> conns;
  std::vector<std::string> extra_drops;
  std::uint64_t routed = 0;
  int drop_fd = -1;
  std::size_t drops_logged = 0;

  std::mutex dead_mu;
  std::vector<std::shared_ptr<Conn>> dead;
  std::vector<std::shared_ptr<Conn>> all;
  std::atomic<ConnId> next_id{1};
  std::atomic<bool> stopping{false};

  void log_drops() {
    if (drop_fd < 0) return;
    const auto& drops = core.dropped();
    for (; drops_logged < drops.size(); ++drops_logged) {
      const std::string line = "dropped " + drops[drops_logged] + "\n";
      (void)!::write(drop_fd, line.data(), line.size());
    }
  }

  void dispatch(const std::vector<Delivery>& deliveries) {
    for (const auto& d : deliveries) {
      auto it = conns.find(d.to);
      if (it == conns.end()) {
        extra_drops.push_back(std::string(to_string(d.frame.type)) + " " + d.frame.name + ": receiver gone");
        continue;
      }
      it->second->enqueue(encode_frame(d.frame));
    }
    log_drops();
  }

  void read_loop(std::shared_ptr<Conn> c) {
    std::vector<std::uint8_t> buf;
    std::uint8_t chunk[65536];
    bool ok = true;
    while (ok) {
      const ssize_t n = ::recv(c->fd, chunk, sizeof chunk, 0);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) break;
      buf.insert(buf.end(), chunk, chunk + n);
      std::size_t used = 0;
      try {
        while (auto decoded = try_decode_frame(std::span(buf).subspan(used))) {
          used += decoded->second;
          std::lock_guard lock(route_mu);
          ++routed;
          dispatch(core.route(c->id, decoded->first));
        }
      } catch (const FrameError& e) {
        // A malformed stream cannot be resynchronized; answer and hang up.
        c->enqueue(encode_frame(Frame{FrameType::kErr, "", 0, e.what()}));
        ok = false;
      }
      buf.erase(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(used));
    }
    {
      std::lock_guard lock(route_mu);
      conns.erase(c->id);
      dispatch(core.disconnect(c->id));
    }
    c->close_soon();
    std::lock_guard lock(dead_mu);
    dead.push_back(c);
  }

  void write_loop(std::shared_ptr<Conn> c) {
    while (true) {
      std::vector<std::uint8_t> bytes;
      {
        std::unique_lock lock(c->mu);
        c->cv.wait(lock, [&] { return c->closing || !c->out.empty(); });
        if (c->out.empty()) break;
        bytes = std::move(c->out.front());
        c->out.pop_front();
      }
      if (!write_all(c->fd, bytes.data(), bytes.size())) {
        std::lock_guard lock(c->mu);
        c->closing = true;
        c->out.clear();
        break;
      }
    }
    ::shutdown(c->fd, SHUT_RDWR);
  }

  void reap() {
    std::vector<std::shared_ptr<Conn>> done;
    {
      std::lock_guard lock(dead_mu);
      done.swap(dead);
    }
    for (auto& c : done) {
      if (c->reader.joinable()) c->reader.join();
      if (c->writer.joinable()) c->writer.join();
      ::close(c->fd);
      std::lock_guard lock(dead_mu);
      all.erase(std::remove(all.begin(), all.end(), c), all.end());
    }
  }

  void accept_loop() {
    pollfd fds[2] = {{listen_fd, POLLIN, 0}, {wake[0], POLLIN, 0}};
    while (!stopping) {
      if (::poll(fds, 2, 1000) < 0 && errno != EINTR) break;
      if (fds[1].revents) break;
      reap();
      if (!(fds[0].revents & POLLIN)) continue;
      const int fd = ::accept4(listen_fd, nullptr, nullptr, SOCK_CLOEXEC);
      if (fd < 0) continue;
      if (address.kind == Address::Kind::kTcp) {
        int one = 1;
        ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
      }
      auto c = std::make_shared<Conn>();
      c->id = next_id++;
      c->fd = fd;
      {
        std::lock_guard lock(route_mu);
        conns[c->id] = c;
      }
      {
        std::lock_guard lock(dead_mu);
        all.push_back(c);
      }
      c->writer = std::thread([this, c] { write_loop(c); });
      c->reader = std::thread([this, c] { read_loop(c); });
    }
  }
};

BrokerServer::BrokerServer(const std::string& address) : impl_(std::make_unique<Impl>()) {
  impl_->listen_fd = listen_socket(parse_address(address), impl_->address);
  if (::pipe2(impl_->wake, O_CLOEXEC) != 0) {
    ::close(impl_->listen_fd);
    throw Error("pipe failed");
  }
  impl_->acceptor = std::thread([this] { impl_->accept_loop(); });
}

BrokerServer::~BrokerServer() { stop(); }

std::string BrokerServer::address() const { return to_string(impl_->address); }

void BrokerServer::stop() {
  if (impl_->stopping.exchange(true)) return;
  (void)!::write(impl_->wake[1], "x", 1);
  impl_->acceptor.join();
  std::vector<std::shared_ptr<Conn>> live;
  {
    std::lock_guard lock(impl_->dead_mu);
    live = impl_->all;
  }
  for (auto& c : live) ::shutdown(c->fd, SHUT_RDWR);
  for (auto& c : live) {
    if (c->reader.joinable()) c->reader.join();
    c->close_soon();
    if (c->writer.joinable()) c->writer.join();
    ::close(c->fd);
  }
  {
    std::lock_guard lock(impl_->dead_mu);
    impl_->all.clear();
    impl_->dead.clear();
  }
  ::close(impl_->listen_fd);
  ::close(impl_->wake[0]);
  ::close(impl_->wake[1]);
  if (impl_->address.kind == Address::Kind::kUnix) ::unlink(impl_->address.path.c_str());
}

std::uint64_t BrokerServer::frames_routed() const {
  std::lock_guard lock(impl_->route_mu);
  return impl_->routed;
}

std::vector<std::string> BrokerServer::dropped() const {
  std::lock_guard lock(impl_->route_mu);
  auto out = impl_->core.dropped();
  out.insert(out.end(), impl_->extra_drops.begin(), impl_->extra_drops.end());
  return out;
}

void BrokerServer::set_drop_log(int fd) {
  std::lock_guard lock(impl_->route_mu);
  impl_->drop_fd = fd;
}

}  // namespace orbitjail::mw
