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

#include <linux/filter.h>
#include <sys/types.h>

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "orbitjail/jailer.hpp"

namespace orbitjail::jail::detail {

// Handshake between the cloned child and its supervisor. Requests carry the
// step they belong to; replies carry an errno on failure.
enum class MsgType : std::uint8_t {
  kMapsRequest = 1,
  kCgroupRequest,
  kTraceRequest,
  kStepFailed,
  kReplyOk,
  kReplyFallback,
  kReplyFail,
};

struct Msg {
  MsgType type;
  std::uint8_t step;
  std::uint8_t flags;
  std::uint8_t pad;
  std::int32_t err;
};

inline constexpr std::uint8_t kFlagSetgroupsAllowed = 1;
// errno reported for steps failed on purpose through LaunchOptions::fail_step.
inline constexpr int kInjectedErrno = ECANCELED;
inline constexpr int kChildSetupExit = 121;

struct ChildMount {
  policy::MountKind kind;
  std::string source;
  std::string target;  // host-side path before the root switch
  bool read_only;
  std::vector<std::string> parents;  // directories to create, outermost first
};

// Everything the child needs, prepared before clone so the child does no
// allocation (it is a fork of a multi-threaded process).
struct ChildSpec {
  int sock = -1;
  int parent_sock = -1;
  int target_fd = -1;
  int stdio[3] = {0, 1, 2};
  std::vector<StepKind> steps;
  std::optional<StepKind> fail_step;
  bool observe = false;

  std::uint32_t uid = 0;
  std::uint32_t gid = 0;

  std::string root;  // empty: no root switch
  std::vector<ChildMount> mounts;
  std::string hostname;
  policy::NetworkMode network = policy::NetworkMode::kPassthrough;
  policy::ResourceLimits limits;
  std::uint64_t keep_caps = 0;
  std::vector<sock_filter> filter;

  std::vector<std::string> argv_storage;
  std::vector<std::string> env_storage;
  std::vector<char*> argv;
  std::vector<char*> envp;
};

[[noreturn]] void child_main(const ChildSpec& spec);

class Cgroup {
 public:
  // Throws CgroupUnavailable.
  static std::unique_ptr<Cgroup> create(const std::string& tag, const policy::ResourceLimits& limits);
  ~Cgroup();

  void attach(pid_t pid);
  bool oom_killed() const;
  bool pids_limited() const;
  // Kills every member and removes the groups.
  void destroy();

 private:
  Cgroup() = default;
  bool v2_ = false;
  std::vector<std::string> dirs_;
  std::string memory_dir_;
  std::string pids_dir_;
};

bool write_file(const std::string& path, const std::string& data, int* err = nullptr);
std::optional<std::string> read_file(const std::string& path);

}  // namespace orbitjail::jail::detail
