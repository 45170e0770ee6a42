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

#include "orbitjail/syscall_filter.hpp"

#include <algorithm>
#include <cerrno>
#include <cstdio>
#include <utility>

namespace orbitjail::seccomp {
namespace {

#include "syscall_tables.inc"

constexpr std::pair<std::string_view, int> kErrnos[] = {
    {"EPERM", EPERM},         {"ENOENT", ENOENT},       {"ESRCH", ESRCH},
    {"EINTR", EINTR},         {"EIO", EIO},             {"ENXIO", ENXIO},
    {"E2BIG", E2BIG},         {"ENOEXEC", ENOEXEC},     {"EBADF", EBADF},
    {"ECHILD", ECHILD},       {"EAGAIN", EAGAIN},       {"ENOMEM", ENOMEM},
    {"EACCES", EACCES},       {"EFAULT", EFAULT},       {"EBUSY", EBUSY},
    {"EEXIST", EEXIST},       {"EXDEV", EXDEV},         {"ENODEV", ENODEV},
    {"ENOTDIR", ENOTDIR},     {"EISDIR", EISDIR},       {"EINVAL", EINVAL},
    {"ENFILE", ENFILE},       {"EMFILE", EMFILE},       {"ENOTTY", ENOTTY},
    {"EFBIG", EFBIG},         {"ENOSPC", ENOSPC},       {"ESPIPE", ESPIPE},
    {"EROFS", EROFS},         {"EMLINK", EMLINK},       {"EPIPE", EPIPE},
    {"ENOSYS", ENOSYS},       {"EOPNOTSUPP", EOPNOTSUPP}, {"EAFNOSUPPORT", EAFNOSUPPORT},
    {"EADDRINUSE", EADDRINUSE}, {"ENETUNREACH", ENETUNREACH}, {"ECONNREFUSED", ECONNREFUSED},
};

// Classic BPF encodings and seccomp return values. Both are kernel ABI.
constexpr std::uint16_t kBpfLdWAbs = 0x20;
constexpr std::uint16_t kBpfJeqK = 0x15;
constexpr std::uint16_t kBpfJgeK = 0x35;
constexpr std::uint16_t kBpfRetK = 0x06;
constexpr std::uint32_t kOffsetNr = 0;
constexpr std::uint32_t kOffsetArch = 4;
constexpr std::uint32_t kRetKillProcess = 0x80000000u;
constexpr std::uint32_t kRetErrno = 0x00050000u;
constexpr std::uint32_t kRetTrace = 0x7ff00000u;
constexpr std::uint32_t kRetLog = 0x7ffc0000u;
constexpr std::uint32_t kRetAllow = 0x7fff0000u;
constexpr std::uint32_t kX32SyscallBit = 0x40000000u;

std::uint32_t lower_action(Action action, LoweringMode mode) {
  switch (action.kind) {
    case Action::Kind::kAllow: return kRetAllow;
    case Action::Kind::kErrno: return kRetErrno | (static_cast<std::uint32_t>(action.errno_value) & 0xFFFFu);
    case Action::Kind::kLog: return mode == LoweringMode::kObserve ? (kRetTrace | kTraceLog) : kRetLog;
    case Action::Kind::kKill:
      return mode == LoweringMode::kObserve ? (kRetTrace | kTraceKill) : kRetKillProcess;
  }
  return kRetKillProcess;
}

std::size_t jump_target(std::size_t pc, std::uint8_t offset) { return pc + 1 + offset; }

}  // namespace

std::string_view arch_name(Arch arch) {
  switch (arch) {
    case Arch::kX8664: return "x86_64";
    case Arch::kAarch64: return "aarch64";
  }
  return "unknown";
}

std::uint32_t audit_arch(Arch arch) {
  switch (arch) {
    case Arch::kX8664: return 0xC000003Eu;
    case Arch::kAarch64: return 0xC00000B7u;
  }
  return 0;
}

std::optional<Arch> native_arch() {
#if defined(__x86_64__)
  return Arch::kX8664;
#elif defined(__aarch64__)
  return Arch::kAarch64;
#else
  return std::nullopt;
#endif
}

ArchTable::ArchTable(Arch arch, std::span<const SyscallEntry> entries)
    : arch_(arch), entries_(entries) {
  for (const auto& e : entries_) {
    by_name_.emplace(e.name, e.nr);
    by_nr_.emplace(e.nr, e.name);
  }
}

const ArchTable& ArchTable::get(Arch arch) {
  static const ArchTable x86(Arch::kX8664, kX8664Syscalls);
  static const ArchTable arm(Arch::kAarch64, kAarch64Syscalls);
  return arch == Arch::kX8664 ? x86 : arm;
}

std::optional<std::uint32_t> ArchTable::number(std::string_view name) const {
  auto it = by_name_.find(name);
  if (it == by_name_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::string_view> ArchTable::name(std::uint32_t nr) const {
  auto it = by_nr_.find(nr);
  if (it == by_nr_.end()) return std::nullopt;
  return it->second;
}

std::uint32_t resolve_syscall(std::string_view name, const ArchTable& table) {
  if (auto nr = table.number(name)) return *nr;
  throw UnknownSyscall(std::string(name));
}

std::string_view syscall_name(std::uint32_t nr, const ArchTable& table) {
  if (auto name = table.name(nr)) return *name;
  throw UnknownSyscall("#" + std::to_string(nr));
}

bool known_syscall(std::string_view name) {
  return std::any_of(kAllArches.begin(), kAllArches.end(),
                     [name](Arch a) { return ArchTable::get(a).number(name).has_value(); });
}

std::span<const std::pair<std::string_view, int>> errno_table() { return kErrnos; }

std::optional<int> errno_from_name(std::string_view name) {
  for (const auto& [n, v] : kErrnos) {
    if (n == name) return v;
  }
  return std::nullopt;
}

std::optional<std::string_view> errno_name(int value) {
  for (const auto& [n, v] : kErrnos) {
    if (v == value) return n;
  }
  return std::nullopt;
}

std::string to_string(Action action) {
  switch (action.kind) {
    case Action::Kind::kAllow: return "allow";
    case Action::Kind::kKill: return "kill";
    case Action::Kind::kLog: return "log";
    case Action::Kind::kErrno: {
      if (auto name = errno_name(action.errno_value)) return "errno." + std::string(*name);
      return "errno." + std::to_string(action.errno_value);
    }
  }
  return "?";
}

std::optional<Action> parse_action(std::string_view text) {
  if (text == "allow") return Action::allow();
  if (text == "kill") return Action::kill();
  if (text == "log") return Action::log();
  constexpr std::string_view kErrnoPrefix = "errno.";
  if (text.substr(0, kErrnoPrefix.size()) == kErrnoPrefix) {
    if (auto v = errno_from_name(text.substr(kErrnoPrefix.size()))) return Action::error(*v);
  }
  return std::nullopt;
}

FilterProgram compile_filter(const SeccompPolicy& policy, const ArchTable& table) {
  std::vector<std::pair<std::uint32_t, Action>> resolved;
  resolved.reserve(policy.rules.size());
  for (const auto& [name, action] : policy.rules) {
    if (auto nr = table.number(name)) {
      resolved.emplace_back(*nr, action);
    } else if (!known_syscall(name)) {
      throw UnknownSyscall(name);
    }
  }
  std::sort(resolved.begin(), resolved.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  const std::size_t length = 3 + (resolved.empty() ? 0 : 1 + 2 * resolved.size()) + 1;
  if (length > kMaxProgramLength) {
    throw ProgramTooLarge("filter would need " + std::to_string(length) + " instructions (limit " +
                          std::to_string(kMaxProgramLength) + ")");
  }

  using Op = Instruction::Op;
  std::vector<Instruction> out;
  out.reserve(length);
  out.push_back({Op::kLoadArch});
  out.push_back({Op::kJumpEqual, table.audit_id(), 1, 0});
  out.push_back({Op::kReturn, 0, 0, 0, Action::kill()});
  if (!resolved.empty()) {
    out.push_back({Op::kLoadNr});
    for (const auto& [nr, action] : resolved) {
      out.push_back({Op::kJumpEqual, nr, 0, 1});
      out.push_back({Op::kReturn, 0, 0, 0, action});
    }
  }
  out.push_back({Op::kReturn, 0, 0, 0, policy.default_action});
  return FilterProgram(table.arch(), std::move(out));
}

void check_program(const FilterProgram& program) {
  using Op = Instruction::Op;
  const auto insns = program.instructions();
  const std::size_t n = insns.size();
  if (n == 0) throw MalformedProgram("empty program");
  if (n > kMaxProgramLength) throw MalformedProgram("program exceeds length limit");
  if (insns[0].op != Op::kLoadArch) throw MalformedProgram("first instruction must load the architecture");
  if (n < 3 || insns[1].op != Op::kJumpEqual) {
    throw MalformedProgram("architecture must be compared before anything else");
  }
  const std::size_t mismatch = jump_target(1, insns[1].else_offset);
  if (mismatch >= n || insns[mismatch].op != Op::kReturn ||
      insns[mismatch].action != Action::kill()) {
    throw MalformedProgram("architecture mismatch must return kill");
  }
  for (std::size_t pc = 0; pc < n; ++pc) {
    if (insns[pc].op != Op::kJumpEqual) continue;
    if (jump_target(pc, insns[pc].then_offset) >= n || jump_target(pc, insns[pc].else_offset) >= n) {
      throw MalformedProgram("jump out of range at " + std::to_string(pc));
    }
  }
  if (insns[n - 1].op != Op::kReturn) throw MalformedProgram("program can fall off the end");
}

Action evaluate(const FilterProgram& program, std::uint32_t arch_id, std::uint32_t nr) {
  using Op = Instruction::Op;
  const auto insns = program.instructions();
  std::uint32_t acc = 0;
  std::size_t pc = 0;
  // Jumps only go forward, so this visits each instruction at most once.
  while (pc < insns.size()) {
    const Instruction& in = insns[pc];
    switch (in.op) {
      case Op::kLoadArch: acc = arch_id; ++pc; break;
      case Op::kLoadNr: acc = nr; ++pc; break;
      case Op::kJumpEqual:
        pc = jump_target(pc, acc == in.value ? in.then_offset : in.else_offset);
        break;
      case Op::kReturn: return in.action;
    }
  }
  throw MalformedProgram("execution ran past the last instruction");
}

std::string disassemble(const FilterProgram& program) {
  using Op = Instruction::Op;
  const ArchTable& table = ArchTable::get(program.arch());
  std::string out;
  out += "; arch=" + std::string(arch_name(program.arch())) +
         " insns=" + std::to_string(program.size()) + "\n";
  bool comparing_nr = false;
  char buf[96];
  const auto insns = program.instructions();
  for (std::size_t pc = 0; pc < insns.size(); ++pc) {
    const Instruction& in = insns[pc];
    switch (in.op) {
      case Op::kLoadArch:
        comparing_nr = false;
        std::snprintf(buf, sizeof buf, "%04zu ld arch", pc);
        break;
      case Op::kLoadNr:
        comparing_nr = true;
        std::snprintf(buf, sizeof buf, "%04zu ld nr", pc);
        break;
      case Op::kJumpEqual:
        if (comparing_nr) {
          auto name = table.name(in.value);
          std::snprintf(buf, sizeof buf, "%04zu jeq %u +%u +%u ; %s", pc, in.value, in.then_offset,
                        in.else_offset, name ? std::string(*name).c_str() : "?");
        } else {
          std::snprintf(buf, sizeof buf, "%04zu jeq 0x%08x +%u +%u", pc, in.value, in.then_offset,
                        in.else_offset);
        }
        break;
      case Op::kReturn:
        std::snprintf(buf, sizeof buf, "%04zu ret %s", pc, to_string(in.action).c_str());
        break;
    }
    out += buf;
    out += '\n';
  }
  return out;
}

std::vector<BpfInstruction> lower_to_bpf(const FilterProgram& program, LoweringMode mode) {
  using Op = Instruction::Op;
  check_program(program);
  const auto insns = program.instructions();
  const bool x32_guard = program.arch() == Arch::kX8664;
  // Foreign-architecture callers are never handed to the tracer.
  const std::size_t arch_mismatch = jump_target(1, insns[1].else_offset);

  // Abstract pc -> BPF pc; the x32 guard adds two instructions after each
  // nr load.
  std::vector<std::size_t> position(insns.size() + 1);
  std::size_t at = 0;
  for (std::size_t pc = 0; pc < insns.size(); ++pc) {
    position[pc] = at;
    at += (x32_guard && insns[pc].op == Op::kLoadNr) ? 3 : 1;
  }
  position[insns.size()] = at;

  std::vector<BpfInstruction> out;
  out.reserve(at);
  for (std::size_t pc = 0; pc < insns.size(); ++pc) {
    const Instruction& in = insns[pc];
    switch (in.op) {
      case Op::kLoadArch: out.push_back({kBpfLdWAbs, 0, 0, kOffsetArch}); break;
      case Op::kLoadNr:
        out.push_back({kBpfLdWAbs, 0, 0, kOffsetNr});
        if (x32_guard) {
          // x32 syscalls share AUDIT_ARCH_X86_64; reject them outright so a
          // rule on the 64-bit number cannot be bypassed.
          out.push_back({kBpfJgeK, 0, 1, kX32SyscallBit});
          out.push_back({kBpfRetK, 0, 0, kRetKillProcess});
        }
        break;
      case Op::kJumpEqual: {
        auto rel = [&](std::uint8_t off) -> std::uint8_t {
          const std::size_t d = position[jump_target(pc, off)] - position[pc] - 1;
          if (d > 255) throw ProgramTooLarge("jump distance exceeds BPF range");
          return static_cast<std::uint8_t>(d);
        };
        out.push_back({kBpfJeqK, rel(in.then_offset), rel(in.else_offset), in.value});
        break;
      }
      case Op::kReturn:
        out.push_back({kBpfRetK, 0, 0,
                       pc == arch_mismatch ? kRetKillProcess : lower_action(in.action, mode)});
        break;
    }
  }
  return out;
}

}  // namespace orbitjail::seccomp
