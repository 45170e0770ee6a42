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

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <csignal>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include "jail_internal.hpp"

namespace orbitjail::jail::detail {
namespace {

struct Hierarchy {
  std::string mountpoint;
  std::string root;  // path of the mount root inside the hierarchy
};

std::vector<std::string> split_ws(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

// Controller name -> v1 mount, plus "" -> the v2 mount if any.
std::map<std::string, Hierarchy> find_hierarchies() {
  std::map<std::string, Hierarchy> out;
  std::ifstream in("/proc/self/mountinfo");
  for (std::string line; std::getline(in, line);) {
    const auto dash = line.find(" - ");
    if (dash == std::string::npos) continue;
    const auto pre = split_ws(line.substr(0, dash));
    const auto post = split_ws(line.substr(dash + 3));
    if (pre.size() < 5 || post.size() < 3) continue;
    const Hierarchy h{pre[4], pre[3]};
    if (post[0] == "cgroup2") {
      out.emplace("", h);
    } else if (post[0] == "cgroup") {
      std::istringstream opts(post[2]);
      for (std::string opt; std::getline(opts, opt, ',');) out.emplace(opt, h);
    }
  }
  return out;
}

// Controller name -> our cgroup path, "" for v2.
std::map<std::string, std::string> own_cgroups() {
  std::map<std::string, std::string> out;
  std::ifstream in("/proc/self/cgroup");
  for (std::string line; std::getline(in, line);) {
    const auto a = line.find(':');
    const auto b = line.find(':', a + 1);
    if (a == std::string::npos || b == std::string::npos) continue;
    const std::string controllers = line.substr(a + 1, b - a - 1);
    const std::string path = line.substr(b + 1);
    if (controllers.empty()) {
      out[""] = path;
      continue;
    }
    std::istringstream cs(controllers);
    for (std::string c; std::getline(cs, c, ',');) out[c] = path;
  }
  return out;
}

std::string join_path(const Hierarchy& h, const std::string& cgroup_path) {
  std::string rel = cgroup_path;
  if (h.root != "/" && rel.rfind(h.root, 0) == 0) rel = rel.substr(h.root.size());
  if (rel == "/") rel.clear();
  return h.mountpoint + rel;
}

std::uint64_t read_counter(const std::string& file, const std::string& key) {
  auto text = read_file(file);
  if (!text) return 0;
  std::istringstream in(*text);
  for (std::string line; std::getline(in, line);) {
    auto words = split_ws(line);
    if (words.size() == 2 && words[0] == key) return std::stoull(words[1]);
  }
  return 0;
}

bool exists(const std::string& path) {
  struct stat st;
  return ::stat(path.c_str(), &st) == 0;
}

}  // namespace

bool write_file(const std::string& path, const std::string& data, int* err) {
  int fd = ::open(path.c_str(), O_WRONLY | O_CLOEXEC);
  if (fd < 0) {
    if (err) *err = errno;
    return false;
  }
  const ssize_t n = ::write(fd, data.data(), data.size());
  const int e = errno;
  ::close(fd);
  if (n != static_cast<ssize_t>(data.size())) {
    if (err) *err = n < 0 ? e : EIO;
    return false;
  }
  return true;
}

std::optional<std::string> read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) return std::nullopt;
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::unique_ptr<Cgroup> Cgroup::create(const std::string& tag, const policy::ResourceLimits& limits) {
  const auto mounts = find_hierarchies();
  const auto own = own_cgroups();
  std::unique_ptr<Cgroup> cg(new Cgroup());
  const std::string leaf = "/orbitjail-" + tag;

  auto make_dir = [&](const std::string& dir) {
    if (::mkdir(dir.c_str(), 0755) != 0 && errno != EEXIST) {
      throw CgroupUnavailable("cannot create " + dir + ": " + std::strerror(errno));
    }
    cg->dirs_.push_back(dir);
  };
  auto set = [&](const std::string& file, const std::string& value) {
    int err = 0;
    if (!write_file(file, value, &err)) {
      throw CgroupUnavailable("cannot write " + file + ": " + std::strerror(err));
    }
  };

  std::vector<std::string> wanted;
  if (limits.memory_bytes) wanted.push_back("memory");
  if (limits.pids_max) wanted.push_back("pids");
  if (limits.cpu_percent) wanted.push_back("cpu");

  bool all_v1 = true;
  for (const auto& c : wanted) all_v1 = all_v1 && mounts.count(c) && own.count(c);
  if (all_v1) {
    std::map<std::string, std::string> dir_of;
    for (const auto& c : wanted) {
      const std::string dir = join_path(mounts.at(c), own.at(c)) + leaf;
      make_dir(dir);
      dir_of[c] = dir;
    }
    if (limits.memory_bytes) {
      const auto& d = dir_of["memory"];
      set(d + "/memory.limit_in_bytes", std::to_string(*limits.memory_bytes));
      // Without this the limit could be escaped into swap.
      if (exists(d + "/memory.memsw.limit_in_bytes")) {
        set(d + "/memory.memsw.limit_in_bytes", std::to_string(*limits.memory_bytes));
      }
      cg->memory_dir_ = d;
    }
    if (limits.pids_max) {
      set(dir_of["pids"] + "/pids.max", std::to_string(*limits.pids_max));
      cg->pids_dir_ = dir_of["pids"];
    }
    if (limits.cpu_percent) {
      set(dir_of["cpu"] + "/cpu.cfs_period_us", "100000");
      set(dir_of["cpu"] + "/cpu.cfs_quota_us", std::to_string(*limits.cpu_percent * 1000));
    }
    return cg;
  }

  if (!mounts.count("") || !own.count("")) throw CgroupUnavailable("no usable cgroup hierarchy");
  cg->v2_ = true;
  const std::string parent = join_path(mounts.at(""), own.at(""));
  std::string enable;
  for (const auto& c : wanted) enable += (enable.empty() ? "+" : " +") + c;
  set(parent + "/cgroup.subtree_control", enable);
  const std::string dir = parent + leaf;
  make_dir(dir);
  if (limits.memory_bytes) {
    set(dir + "/memory.max", std::to_string(*limits.memory_bytes));
    if (exists(dir + "/memory.swap.max")) set(dir + "/memory.swap.max", "0");
    cg->memory_dir_ = dir;
  }
  if (limits.pids_max) {
    set(dir + "/pids.max", std::to_string(*limits.pids_max));
    cg->pids_dir_ = dir;
  }
  if (limits.cpu_percent) set(dir + "/cpu.max", std::to_string(*limits.cpu_percent * 1000) + " 100000");
  return cg;
}

Cgroup::~Cgroup() { destroy(); }

void Cgroup::attach(pid_t pid) {
  for (const auto& dir : dirs_) {
    int err = 0;
    if (!write_file(dir + "/cgroup.procs", std::to_string(pid), &err)) {
      throw CgroupUnavailable("cannot attach to " + dir + ": " + std::strerror(err));
    }
  }
}

bool Cgroup::oom_killed() const {
  if (memory_dir_.empty()) return false;
  return v2_ ? read_counter(memory_dir_ + "/memory.events", "oom_kill") > 0
             : read_counter(memory_dir_ + "/memory.oom_control", "oom_kill") > 0;
}

bool Cgroup::pids_limited() const {
  if (pids_dir_.empty()) return false;
  return read_counter(pids_dir_ + "/pids.events", "max") > 0;
}

void Cgroup::destroy() {
  for (const auto& dir : dirs_) {
    if (v2_ && write_file(dir + "/cgroup.kill", "1")) continue;
    for (int round = 0; round < 50; ++round) {
      auto procs = read_file(dir + "/cgroup.procs");
      if (!procs || procs->empty()) break;
      std::istringstream in(*procs);
      for (pid_t pid; in >> pid;) ::kill(pid, SIGKILL);
      std::this_thread::sleep_for(std::chrono::milliseconds(2));
    }
  }
  for (auto it = dirs_.rbegin(); it != dirs_.rend(); ++it) {
    for (int attempt = 0; attempt < 100; ++attempt) {
      if (::rmdir(it->c_str()) == 0 || errno == ENOENT) break;
      std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
  }
  dirs_.clear();
}

}  // namespace orbitjail::jail::detail
