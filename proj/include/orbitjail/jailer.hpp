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

#include <sys/types.h>

#include <chrono>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "orbitjail/error.hpp"
#include "orbitjail/launch_plan.hpp"

namespace orbitjail::jail {

enum class Mode { kEnforce, kObserve };
std::string_view to_string(Mode mode);

enum class EventKind { kSyscallDenied, kSyscallLogged, kLimitExceeded, kSetupFailure };
std::string_view to_string(EventKind kind);

struct ViolationEvent {
  std::chrono::system_clock::time_point ts;
  EventKind kind;
  std::string detail;
};

// How resource limits ended up being enforced.
enum class LimitEnforcement { kNone, kCgroup, kRlimit };
std::string_view to_string(LimitEnforcement e);

struct SupervisionRecord {
  std::string jail;
  pid_t child = -1;  // host pid
  bool exited = false;
  int exit_code = 0;
  int term_signal = 0;
  bool filter_killed = false;
  std::vector<ViolationEvent> events;
  std::chrono::system_clock::time_point start;
  std::chrono::system_clock::time_point stop;
  LimitEnforcement limits = LimitEnforcement::kNone;
  bool cpu_enforced = false;

  std::size_t count(EventKind kind) const;
  // 0, 10+n for exit n, 10+128+s for signal s, 65 for a filter kill.
  int supervisor_exit_code() const;
};

inline constexpr int kExitSetupFailure = 64;
inline constexpr int kExitFilterKill = 65;

class UnsupportedKernel : public Error {
 public:
  explicit UnsupportedKernel(std::vector<std::string> missing);
  const std::vector<std::string>& missing() const { return missing_; }

 private:
  std::vector<std::string> missing_;
};

class SetupFailure : public Error {
 public:
  SetupFailure(StepKind step, int os_error, const std::string& detail = {});
  StepKind step() const { return step_; }
  int os_error() const { return os_error_; }

 private:
  StepKind step_;
  int os_error_;
};

class CgroupUnavailable : public Error {
 public:
  using Error::Error;
};

struct LaunchOptions {
  Mode mode = Mode::kEnforce;
  int stdin_fd = 0;
  int stdout_fd = 1;
  int stderr_fd = 2;
  // Test hook: make this step fail as if the kernel had refused it.
  std::optional<StepKind> fail_step;
};

// Namespaces from the set this kernel cannot create for the caller.
std::vector<std::string> missing_kernel_features(const policy::NamespaceSet& namespaces);

class JailHandle {
 public:
  JailHandle(JailHandle&&) noexcept;
  JailHandle& operator=(JailHandle&&) noexcept;
  // Kills the jail if it is still running.
  ~JailHandle();

  pid_t pid() const;
  bool done() const;
  // Blocks until the child and its supervisor are finished.
  const SupervisionRecord& wait();
  std::optional<SupervisionRecord> wait_for(std::chrono::milliseconds timeout);
  void kill();

  struct State;

 private:
  friend JailHandle execute(const LaunchPlan&, const LaunchOptions&);
  explicit JailHandle(std::shared_ptr<State> state);
  std::shared_ptr<State> state_;
};

// Returns once the target has been exec'd. Throws UnsupportedKernel, or
// SetupFailure if any step before exec failed (the target never ran).
JailHandle execute(const LaunchPlan& plan, const LaunchOptions& options = {});

// execute() + wait().
SupervisionRecord run(const LaunchPlan& plan, const LaunchOptions& options = {});

// Splits a command line into words (single/double quotes, backslash escapes).
std::vector<std::string> split_command_line(std::string_view line);

// A fresh jail for one command; torn down before this returns.
SupervisionRecord spawn_per_command(const policy::SandboxPolicy& policy, std::string_view command_line,
                                    const LaunchOptions& options = {});

// Single JSON document describing a finished record.
std::string record_json(const SupervisionRecord& record);

// JSON-lines record for the violation log.
std::string event_json(const std::string& jail, const ViolationEvent& event);

}  // namespace orbitjail::jail
