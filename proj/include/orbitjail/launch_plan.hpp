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

#include <array>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "orbitjail/error.hpp"
#include "orbitjail/policy.hpp"
#include "orbitjail/syscall_filter.hpp"

namespace orbitjail::jail {

enum class StepKind : std::uint8_t {
  kCreateNamespaces,
  kWriteIdMaps,
  kApplyMounts,
  kEnterRoot,
  kSetHostname,
  kApplyCgroups,
  kConfigureNetwork,
  kDropCapabilities,
  kInstallFilter,
  kExecTarget,
};
inline constexpr std::array<StepKind, 10> kAllStepKinds = {
    StepKind::kCreateNamespaces, StepKind::kWriteIdMaps,      StepKind::kApplyMounts,
    StepKind::kEnterRoot,        StepKind::kSetHostname,      StepKind::kApplyCgroups,
    StepKind::kConfigureNetwork, StepKind::kDropCapabilities, StepKind::kInstallFilter,
    StepKind::kExecTarget,
};

// "create-namespaces", "write-idmaps", ...
std::string_view to_string(StepKind kind);
std::optional<StepKind> step_from_name(std::string_view name);

struct CreateNamespaces {
  policy::NamespaceSet namespaces;
};
// Empty maps mean the default: inside 0 is the invoking user.
struct WriteIdMaps {
  std::vector<policy::IdMapping> uid_map;
  std::vector<policy::IdMapping> gid_map;
};
struct ApplyMounts {
  std::vector<policy::MountSpec> mounts;
};
struct EnterRoot {
  std::string root;
};
struct SetHostname {
  std::string hostname;
};
struct ApplyCgroups {
  policy::ResourceLimits limits;
};
struct ConfigureNetwork {
  policy::NetworkMode mode;
};
struct DropCapabilities {
  std::set<std::string> keep;
};
struct InstallFilter {
  seccomp::SeccompPolicy policy;
  // Compiled for the native architecture (x86_64 where there is none).
  seccomp::FilterProgram program;
};
// Variables are named here and take their values from the supervisor's
// environment at launch.
struct ExecTarget {
  std::vector<std::string> argv;
  std::vector<std::string> env;
};

using Step = std::variant<CreateNamespaces, WriteIdMaps, ApplyMounts, EnterRoot, SetHostname, ApplyCgroups,
                          ConfigureNetwork, DropCapabilities, InstallFilter, ExecTarget>;

StepKind kind_of(const Step& step);

struct LaunchPlan {
  std::string jail_name;
  std::uint32_t inside_uid = 0;
  std::uint32_t inside_gid = 0;
  std::optional<std::string> log_path;
  std::vector<Step> steps;

  const Step* find(StepKind kind) const;
};

class EmptyCommand : public Error {
 public:
  EmptyCommand() : Error("command line is empty") {}
};

class InvalidPlan : public Error {
 public:
  using Error::Error;
};

// Throws EmptyCommand; the policy must already be valid.
LaunchPlan build_plan(const policy::SandboxPolicy& policy, const std::vector<std::string>& argv);

// Throws InvalidPlan when an ordering rule is broken.
void check_plan(const LaunchPlan& plan);

// One step per line, independent of host and architecture.
std::string render_plan(const LaunchPlan& plan);

}  // namespace orbitjail::jail
