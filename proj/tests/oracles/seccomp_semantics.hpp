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
#include <optional>
#include <vector>

#include "orbitjail/syscall_filter.hpp"

namespace oracle {

// What a policy means, read straight off the declarative rules: look the
// number up by name and fall back to the default.
inline orbitjail::seccomp::Action policy_semantics(const orbitjail::seccomp::SeccompPolicy& policy,
                                                   const orbitjail::seccomp::ArchTable& table,
                                                   std::uint32_t arch_id, std::uint32_t nr) {
  using orbitjail::seccomp::Action;
  if (arch_id != table.audit_id()) return Action::kill();
  if (auto name = table.name(nr)) {
    if (auto it = policy.rules.find(*name); it != policy.rules.end()) return it->second;
  }
  return policy.default_action;
}

// Minimal classic-BPF machine for the opcodes a seccomp filter uses.
struct SeccompData {
  std::uint32_t nr;
  std::uint32_t arch;
};

inline std::optional<std::uint32_t> run_cbpf(const std::vector<orbitjail::seccomp::BpfInstruction>& prog,
                                             const SeccompData& data) {
  std::uint32_t a = 0;
  std::size_t pc = 0;
  for (std::size_t steps = 0; pc < prog.size() && steps <= prog.size(); ++steps) {
    const auto& in = prog[pc];
    switch (in.code) {
      case 0x20:  // ld [k]
        if (in.k == 0) a = data.nr;
        else if (in.k == 4) a = data.arch;
        else return std::nullopt;
        ++pc;
        break;
      case 0x15:  // jeq #k
        pc += 1 + (a == in.k ? in.jt : in.jf);
        break;
      case 0x35:  // jge #k
        pc += 1 + (a >= in.k ? in.jt : in.jf);
        break;
      case 0x06:  // ret #k
        return in.k;
      default:
        return std::nullopt;
    }
  }
  return std::nullopt;
}

}  // namespace oracle
