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
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "orbitjail/error.hpp"

namespace orbitjail::seccomp {

enum class Arch : std::uint8_t { kX8664, kAarch64 };
inline constexpr std::array<Arch, 2> kAllArches = {Arch::kX8664, Arch::kAarch64};

std::string_view arch_name(Arch arch);
// Value reported in seccomp_data.arch (AUDIT_ARCH_*).
std::uint32_t audit_arch(Arch arch);
// Architecture this binary was compiled for, if it has a vendored table.
std::optional<Arch> native_arch();

struct SyscallEntry {
  std::string_view name;
  std::uint32_t nr;
};

class UnknownSyscall : public Error {
 public:
  explicit UnknownSyscall(std::string name)
      : Error("unknown syscall: " + name), name_(std::move(name)) {}
  const std::string& name() const { return name_; }

 private:
  std::string name_;
};

class ProgramTooLarge : public Error {
 public:
  using Error::Error;
};

class MalformedProgram : public Error {
 public:
  using Error::Error;
};

// Bijective syscall name <-> number table for one architecture.
class ArchTable {
 public:
  static const ArchTable& get(Arch arch);

  Arch arch() const { return arch_; }
  std::uint32_t audit_id() const { return audit_arch(arch_); }
  std::optional<std::uint32_t> number(std::string_view name) const;
  std::optional<std::string_view> name(std::uint32_t nr) const;
  std::span<const SyscallEntry> entries() const { return entries_; }

 private:
  ArchTable(Arch arch, std::span<const SyscallEntry> entries);

  Arch arch_;
  std::span<const SyscallEntry> entries_;
  std::map<std::string_view, std::uint32_t, std::less<>> by_name_;
  std::map<std::uint32_t, std::string_view> by_nr_;
};

// Throws UnknownSyscall.
std::uint32_t resolve_syscall(std::string_view name, const ArchTable& table);
std::string_view syscall_name(std::uint32_t nr, const ArchTable& table);

// True if any vendored table knows the name. Policy names only need to exist
// somewhere: a syscall missing from one architecture cannot be invoked there,
// so its rule is vacuous on that architecture.
bool known_syscall(std::string_view name);

std::optional<int> errno_from_name(std::string_view name);
std::optional<std::string_view> errno_name(int value);
std::span<const std::pair<std::string_view, int>> errno_table();

struct Action {
  enum class Kind : std::uint8_t { kAllow, kKill, kErrno, kLog };

  Kind kind = Kind::kAllow;
  int errno_value = 0;

  static constexpr Action allow() { return {Kind::kAllow, 0}; }
  static constexpr Action kill() { return {Kind::kKill, 0}; }
  static constexpr Action log() { return {Kind::kLog, 0}; }
  static constexpr Action error(int value) { return {Kind::kErrno, value}; }

  friend bool operator==(const Action&, const Action&) = default;
  friend auto operator<=>(const Action&, const Action&) = default;
};

// "allow", "kill", "log" or "errno.EPERM".
std::string to_string(Action action);
std::optional<Action> parse_action(std::string_view text);

struct SeccompPolicy {
  Action default_action = Action::allow();
  // Keyed by syscall name, so no name can appear twice.
  std::map<std::string, Action, std::less<>> rules;

  friend bool operator==(const SeccompPolicy&, const SeccompPolicy&) = default;
};

struct Instruction {
  enum class Op : std::uint8_t { kLoadArch, kLoadNr, kJumpEqual, kReturn };

  Op op = Op::kReturn;
  std::uint32_t value = 0;
  // Relative forward offsets: the next instruction is pc + 1 + offset.
  std::uint8_t then_offset = 0;
  std::uint8_t else_offset = 0;
  Action action{};

  friend bool operator==(const Instruction&, const Instruction&) = default;
};

inline constexpr std::size_t kMaxProgramLength = 4096;

class FilterProgram {
 public:
  FilterProgram(Arch arch, std::vector<Instruction> instructions)
      : arch_(arch), instructions_(std::move(instructions)) {}

  Arch arch() const { return arch_; }
  std::span<const Instruction> instructions() const { return instructions_; }
  std::size_t size() const { return instructions_.size(); }

  friend bool operator==(const FilterProgram&, const FilterProgram&) = default;

 private:
  Arch arch_;
  std::vector<Instruction> instructions_;
};

// One JumpEqual/Return pair per applicable rule, after an architecture check
// that kills on mismatch.
//
//   0  load arch
//   1  jeq <audit arch> +1 +0
//   2  ret kill
//   3  load nr                      (only with rules)
//      jeq <nr> +0 +1 / ret <action>   per rule, ascending nr
//   n  ret <default>
//
// Throws UnknownSyscall for names no table knows, ProgramTooLarge past
// kMaxProgramLength.
FilterProgram compile_filter(const SeccompPolicy& policy, const ArchTable& table);

// Structural check: arch test first, in-range forward jumps, every path ends
// in a Return. Throws MalformedProgram.
void check_program(const FilterProgram& program);

// Reference interpreter. Throws MalformedProgram on wild jumps or fallthrough.
Action evaluate(const FilterProgram& program, std::uint32_t arch_id, std::uint32_t nr);

// Stable one-instruction-per-line text.
std::string disassemble(const FilterProgram& program);

// Kernel lowering (classic BPF). In observe mode Log and Kill actions are
// routed to the tracing supervisor instead of being handled in-kernel.
enum class LoweringMode { kEnforce, kObserve };

struct BpfInstruction {
  std::uint16_t code;
  std::uint8_t jt;
  std::uint8_t jf;
  std::uint32_t k;
};

// SECCOMP_RET_DATA values used for traced actions in observe mode.
inline constexpr std::uint16_t kTraceLog = 1;
inline constexpr std::uint16_t kTraceKill = 2;

std::vector<BpfInstruction> lower_to_bpf(const FilterProgram& program, LoweringMode mode);

}  // namespace orbitjail::seccomp
