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

#include <random>
#include <string>

#include "orbitjail/policy.hpp"
#include "orbitjail/syscall_filter.hpp"

namespace testsupport {

inline orbitjail::seccomp::Action random_action(std::mt19937& rng) {
  using orbitjail::seccomp::Action;
  const auto errnos = orbitjail::seccomp::errno_table();
  switch (rng() % 4) {
    case 0: return Action::allow();
    case 1: return Action::kill();
    case 2: return Action::log();
    default: return Action::error(errnos[rng() % errnos.size()].second);
  }
}

// Names are drawn from both tables, so some rules are vacuous on one arch.
inline orbitjail::seccomp::SeccompPolicy random_seccomp(std::mt19937& rng, std::size_t max_rules = 60) {
  using namespace orbitjail::seccomp;
  SeccompPolicy p;
  p.default_action = random_action(rng);
  const std::size_t n = rng() % (max_rules + 1);
  for (std::size_t i = 0; i < n; ++i) {
    const auto entries = ArchTable::get(kAllArches[rng() % 2]).entries();
    p.rules.emplace(std::string(entries[rng() % entries.size()].name), random_action(rng));
  }
  return p;
}

inline std::string random_path(std::mt19937& rng) {
  static const char* kSegments[] = {"usr", "lib", "data", "run", "x", "node-1", "a_b", "cfg"};
  std::string out;
  const int depth = 1 + static_cast<int>(rng() % 3);
  for (int i = 0; i < depth; ++i) out += std::string("/") + kSegments[rng() % std::size(kSegments)];
  return out;
}

inline std::string random_identifier(std::mt19937& rng, std::size_t max_len) {
  static constexpr std::string_view kChars = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_-";
  std::string out(1 + rng() % max_len, 'a');
  for (auto& c : out) c = kChars[rng() % kChars.size()];
  return out;
}

// A valid policy exercising every field.
inline orbitjail::policy::SandboxPolicy random_policy(std::mt19937& rng) {
  using namespace orbitjail::policy;
  SandboxPolicy p;
  p.name = random_identifier(rng, 64);
  for (auto ns : kAllNamespaces) {
    if (rng() % 2) p.namespaces.insert(ns);
  }
  if (rng() % 3) {
    p.namespaces.insert(Namespace::kMount);
    p.chroot_root = random_path(rng);
  }
  if (p.namespaces.contains(Namespace::kUts) && rng() % 2) p.hostname = "host-" + std::to_string(rng() % 1000);
  if (rng() % 2) p.log_path = random_path(rng) + ".log";
  if (p.namespaces.contains(Namespace::kUser)) {
    for (auto* map : {&p.uid_map, &p.gid_map}) {
      std::uint32_t inside = rng() % 10, outside = 1000 + rng() % 10;
      for (std::size_t i = rng() % 3; i > 0; --i) {
        const std::uint32_t count = 1 + rng() % 100;
        map->push_back({inside, outside, count});
        inside += count + rng() % 5;
        outside += count + rng() % 5;
      }
    }
  }
  if (p.namespaces.contains(Namespace::kMount)) {
    for (std::size_t i = rng() % 4; i > 0; --i) {
      MountSpec m;
      m.kind = static_cast<MountKind>(rng() % 3);
      m.source = m.kind == MountKind::kBind ? random_path(rng) : std::string(to_string(m.kind));
      m.dest = random_path(rng);
      m.read_only = rng() % 2;
      p.mounts.push_back(m);
    }
  }
  p.seccomp = random_seccomp(rng, 20);
  const auto caps = capability_names();
  for (std::size_t i = rng() % 4; i > 0; --i) p.capabilities.insert(std::string(caps[rng() % caps.size()]));
  if (rng() % 2) p.limits.memory_bytes = 1 + rng();
  if (rng() % 2) p.limits.pids_max = 1 + rng() % 1000;
  if (rng() % 2) p.limits.cpu_percent = 1 + static_cast<int>(rng() % 100);
  if (p.namespaces.contains(Namespace::kNet)) {
    p.network_mode = rng() % 2 ? NetworkMode::kIsolated : NetworkMode::kLoopbackOnly;
  } else {
    p.network_mode = NetworkMode::kPassthrough;
  }
  static const char* kVars[] = {"PATH", "HOME", "LANG", "TZ", "ORBITJAIL_BROKER"};
  for (const char* v : kVars) {
    if (rng() % 3 == 0) p.env_allow.emplace_back(v);
  }
  return p;
}

}  // namespace testsupport
