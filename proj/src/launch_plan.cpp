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

#include "orbitjail/launch_plan.hpp"

#include <algorithm>
#include <map>

#include <json.hpp>

namespace orbitjail::jail {
namespace {

constexpr std::string_view kStepNames[] = {
    "create-namespaces", "write-idmaps",      "apply-mounts",   "enter-root",     "set-hostname",
    "apply-cgroups",     "configure-network", "drop-capabilities", "install-filter", "exec",
};

template <typename Range, typename Fn>
std::string bracketed(const Range& items, Fn fmt) {
  std::string out = "[";
  bool first = true;
  for (const auto& item : items) {
    if (!first) out += ',';
    first = false;
    out += fmt(item);
  }
  return out + "]";
}

std::string format_map(const std::vector<policy::IdMapping>& map) {
  return bracketed(map, [](const policy::IdMapping& m) {
    return std::to_string(m.inside) + ":" + std::to_string(m.outside) + ":" + std::to_string(m.count);
  });
}

std::string quoted(const std::string& s) { return nlohmann::json(s).dump(); }

std::string render_step(const Step& step) {
  std::string out(to_string(kind_of(step)));
  std::visit(
      [&out](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, CreateNamespaces>) {
          out += " " + bracketed(s.namespaces.names(), [](std::string_view n) { return std::string(n); });
        } else if constexpr (std::is_same_v<T, WriteIdMaps>) {
          out += " uid=" + format_map(s.uid_map) + " gid=" + format_map(s.gid_map);
        } else if constexpr (std::is_same_v<T, ApplyMounts>) {
          out += " " + bracketed(s.mounts, [](const policy::MountSpec& m) {
                   return std::string(to_string(m.kind)) + "," + m.source + "," + m.dest + "," +
                          (m.read_only ? "ro" : "rw");
                 });
        } else if constexpr (std::is_same_v<T, EnterRoot>) {
          out += " " + s.root;
        } else if constexpr (std::is_same_v<T, SetHostname>) {
          out += " " + s.hostname;
        } else if constexpr (std::is_same_v<T, ApplyCgroups>) {
          if (s.limits.memory_bytes) out += " memory_bytes=" + std::to_string(*s.limits.memory_bytes);
          if (s.limits.pids_max) out += " pids_max=" + std::to_string(*s.limits.pids_max);
          if (s.limits.cpu_percent) out += " cpu_percent=" + std::to_string(*s.limits.cpu_percent);
        } else if constexpr (std::is_same_v<T, ConfigureNetwork>) {
          out += " " + std::string(to_string(s.mode));
        } else if constexpr (std::is_same_v<T, DropCapabilities>) {
          out += " keep=" + bracketed(s.keep, [](const std::string& c) { return c; });
        } else if constexpr (std::is_same_v<T, InstallFilter>) {
          // Rendered from the symbolic policy so the text does not depend on
          // the architecture the plan was built on.
          out += " default=" + seccomp::to_string(s.policy.default_action);
          std::map<std::string, std::vector<std::string>> groups;
          for (const auto& [name, action] : s.policy.rules) groups[seccomp::to_string(action)].push_back(name);
          for (const auto& [key, names] : groups) {
            out += " " + key + "=" + bracketed(names, [](const std::string& n) { return n; });
          }
        } else if constexpr (std::is_same_v<T, ExecTarget>) {
          out += " argv=" + bracketed(s.argv, quoted) + " env=" + bracketed(s.env, quoted);
        }
      },
      step);
  return out;
}

seccomp::Arch plan_arch() { return seccomp::native_arch().value_or(seccomp::Arch::kX8664); }

}  // namespace

std::string_view to_string(StepKind kind) { return kStepNames[static_cast<std::size_t>(kind)]; }

std::optional<StepKind> step_from_name(std::string_view name) {
  for (auto kind : kAllStepKinds) {
    if (to_string(kind) == name) return kind;
  }
  return std::nullopt;
}

StepKind kind_of(const Step& step) { return static_cast<StepKind>(step.index()); }

const Step* LaunchPlan::find(StepKind kind) const {
  auto it = std::find_if(steps.begin(), steps.end(), [kind](const Step& s) { return kind_of(s) == kind; });
  return it == steps.end() ? nullptr : &*it;
}

LaunchPlan build_plan(const policy::SandboxPolicy& p, const std::vector<std::string>& argv) {
  if (argv.empty() || argv.front().empty()) throw EmptyCommand();
  using policy::Namespace;

  LaunchPlan plan;
  plan.jail_name = p.name;
  plan.inside_uid = policy::jail_uid(p);
  plan.inside_gid = policy::jail_gid(p);
  plan.log_path = p.log_path;

  if (!p.namespaces.empty()) plan.steps.emplace_back(CreateNamespaces{p.namespaces});
  if (p.namespaces.contains(Namespace::kUser)) plan.steps.emplace_back(WriteIdMaps{p.uid_map, p.gid_map});
  if (!p.mounts.empty()) plan.steps.emplace_back(ApplyMounts{p.mounts});
  if (p.chroot_root != "/") plan.steps.emplace_back(EnterRoot{p.chroot_root});
  if (!p.hostname.empty()) plan.steps.emplace_back(SetHostname{p.hostname});
  if (!p.limits.empty()) plan.steps.emplace_back(ApplyCgroups{p.limits});
  if (p.network_mode != policy::NetworkMode::kPassthrough) plan.steps.emplace_back(ConfigureNetwork{p.network_mode});
  plan.steps.emplace_back(DropCapabilities{p.capabilities});
  plan.steps.emplace_back(
      InstallFilter{p.seccomp, seccomp::compile_filter(p.seccomp, seccomp::ArchTable::get(plan_arch()))});
  plan.steps.emplace_back(ExecTarget{argv, p.env_allow});
  check_plan(plan);
  return plan;
}

void check_plan(const LaunchPlan& plan) {
  const auto& steps = plan.steps;
  auto index = [&](StepKind kind) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < steps.size(); ++i) {
      if (kind_of(steps[i]) == kind) return i;
    }
    return std::nullopt;
  };
  for (auto kind : kAllStepKinds) {
    const auto n = std::count_if(steps.begin(), steps.end(), [kind](const Step& s) { return kind_of(s) == kind; });
    if (n > 1) throw InvalidPlan(std::string(to_string(kind)) + " appears more than once");
  }
  const auto exec = index(StepKind::kExecTarget);
  const auto filter = index(StepKind::kInstallFilter);
  const auto drop = index(StepKind::kDropCapabilities);
  if (!exec || *exec != steps.size() - 1) throw InvalidPlan("exec must be the last step");
  if (std::get<ExecTarget>(steps[*exec]).argv.empty()) throw InvalidPlan("exec has no argv");
  if (!filter || *filter + 1 != *exec) throw InvalidPlan("install-filter must immediately precede exec");
  if (!drop || *drop > *filter) throw InvalidPlan("drop-capabilities must precede install-filter");
  // These need privileges that drop-capabilities takes away.
  for (auto kind : {StepKind::kApplyMounts, StepKind::kEnterRoot, StepKind::kSetHostname,
                    StepKind::kConfigureNetwork}) {
    if (auto i = index(kind); i && *i > *drop) {
      throw InvalidPlan(std::string(to_string(kind)) + " must precede drop-capabilities");
    }
  }
  // Mount targets are resolved below the new root before switching to it.
  if (auto m = index(StepKind::kApplyMounts), r = index(StepKind::kEnterRoot); m && r && *m > *r) {
    throw InvalidPlan("apply-mounts must precede enter-root");
  }
  if (auto ns = index(StepKind::kCreateNamespaces); ns && *ns != 0) {
    throw InvalidPlan("create-namespaces must be first");
  }
  const auto* create = plan.find(StepKind::kCreateNamespaces);
  const bool user_ns =
      create && std::get<CreateNamespaces>(*create).namespaces.contains(policy::Namespace::kUser);
  const auto maps = index(StepKind::kWriteIdMaps);
  if (user_ns != maps.has_value()) throw InvalidPlan("write-idmaps must accompany the user namespace");
  if (maps && *maps != 1) throw InvalidPlan("write-idmaps must immediately follow create-namespaces");
}

std::string render_plan(const LaunchPlan& plan) {
  std::string out = "plan jail=" + plan.jail_name + " steps=" + std::to_string(plan.steps.size()) + "\n";
  for (std::size_t i = 0; i < plan.steps.size(); ++i) {
    out += std::to_string(i + 1) + " " + render_step(plan.steps[i]) + "\n";
  }
  return out;
}

}  // namespace orbitjail::jail
