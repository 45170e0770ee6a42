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

#include <doctest.h>

#include <linux/filter.h>
#include <linux/seccomp.h>
#include <sys/prctl.h>
#include <sys/syscall.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <csignal>
#include <map>
#include <random>
#include <regex>
#include <set>

#include "oracles/seccomp_semantics.hpp"
#include "orbitjail/syscall_filter.hpp"
#include "support/files.hpp"
#include "support/random_policy.hpp"

using namespace orbitjail::seccomp;

namespace {

const ArchTable& x86() { return ArchTable::get(Arch::kX8664); }
const ArchTable& arm() { return ArchTable::get(Arch::kAarch64); }

std::uint32_t foreign_arch(const ArchTable& t) {
  return t.arch() == Arch::kX8664 ? audit_arch(Arch::kAarch64) : audit_arch(Arch::kX8664);
}

SeccompPolicy read_only_policy() {
  SeccompPolicy p;
  p.default_action = Action::kill();
  p.rules.emplace("read", Action::allow());
  return p;
}

std::uint32_t expected_ret(Action a, LoweringMode mode) {
  switch (a.kind) {
    case Action::Kind::kAllow: return SECCOMP_RET_ALLOW;
    case Action::Kind::kErrno: return SECCOMP_RET_ERRNO | static_cast<std::uint32_t>(a.errno_value);
    case Action::Kind::kLog: return mode == LoweringMode::kObserve ? SECCOMP_RET_TRACE | kTraceLog : SECCOMP_RET_LOG;
    case Action::Kind::kKill:
      return mode == LoweringMode::kObserve ? SECCOMP_RET_TRACE | kTraceKill : SECCOMP_RET_KILL_PROCESS;
  }
  return 0;
}

}  // namespace

TEST_CASE("read is syscall 0 on x86_64") {
  CHECK(resolve_syscall("read", x86()) == 0);
  CHECK(resolve_syscall("read", arm()) == 63);
}

TEST_CASE("unknown names are rejected") {
  CHECK_THROWS_AS(resolve_syscall("no_such_call", x86()), UnknownSyscall);
  CHECK_THROWS_AS(resolve_syscall("no_such_call", arm()), UnknownSyscall);
  CHECK_FALSE(known_syscall("no_such_call"));
  try {
    resolve_syscall("no_such_call", x86());
  } catch (const UnknownSyscall& e) {
    CHECK(e.name() == "no_such_call");
  }
}

TEST_CASE("tables are bijective") {
  for (Arch a : kAllArches) {
    const auto& t = ArchTable::get(a);
    CAPTURE(arch_name(a));
    std::set<std::string_view> names;
    std::set<std::uint32_t> numbers;
    for (const auto& e : t.entries()) {
      CHECK(names.insert(e.name).second);
      CHECK(numbers.insert(e.nr).second);
      CHECK(resolve_syscall(syscall_name(e.nr, t), t) == e.nr);
      CHECK(syscall_name(resolve_syscall(e.name, t), t) == e.name);
    }
    CHECK(t.entries().size() > 250);
  }
}

TEST_CASE("x86_64 table matches the vendored kernel header") {
  const auto header = testsupport::read_file(testsupport::source_path("fixtures/syscalls/unistd_64.h"));
  const std::regex def(R"(#define __NR_(\w+) (\d+))");
  std::map<std::string, std::uint32_t> expected;
  for (auto it = std::sregex_iterator(header.begin(), header.end(), def); it != std::sregex_iterator(); ++it) {
    expected.emplace((*it)[1], static_cast<std::uint32_t>(std::stoul((*it)[2])));
  }
  REQUIRE(expected.size() > 300);
  CHECK(expected.size() == x86().entries().size());
  for (const auto& [name, nr] : expected) {
    CAPTURE(name);
    CHECK(x86().number(name) == nr);
  }
}

#if defined(__x86_64__) || defined(__aarch64__)
TEST_CASE("native table agrees with the C library's syscall numbers") {
  const auto& t = ArchTable::get(*native_arch());
  CHECK(t.number("read") == SYS_read);
  CHECK(t.number("write") == SYS_write);
  CHECK(t.number("openat") == SYS_openat);
  CHECK(t.number("execve") == SYS_execve);
  CHECK(t.number("execveat") == SYS_execveat);
  CHECK(t.number("clone") == SYS_clone);
  CHECK(t.number("clone3") == SYS_clone3);
  CHECK(t.number("socket") == SYS_socket);
  CHECK(t.number("ptrace") == SYS_ptrace);
  CHECK(t.number("exit_group") == SYS_exit_group);
  CHECK(t.number("getppid") == SYS_getppid);
}
#endif

TEST_CASE("aarch64 table spot values") {
  // From the generic syscall table used by arm64.
  const std::pair<const char*, std::uint32_t> known[] = {
      {"io_setup", 0}, {"openat", 56}, {"close", 57}, {"read", 63}, {"write", 64}, {"exit_group", 94},
      {"kill", 129},   {"uname", 160}, {"getppid", 173}, {"socket", 198}, {"clone", 220}, {"execve", 221},
      {"mmap", 222},   {"wait4", 260}, {"execveat", 281}, {"clone3", 435},
  };
  for (const auto& [name, nr] : known) {
    CAPTURE(name);
    CHECK(arm().number(name) == nr);
  }
  // Legacy calls that arm64 never had.
  CHECK_FALSE(arm().number("open"));
  CHECK_FALSE(arm().number("fork"));
  CHECK(known_syscall("open"));
}

TEST_CASE("kill-by-default with read allowed") {
  for (Arch a : kAllArches) {
    const auto& t = ArchTable::get(a);
    const auto prog = compile_filter(read_only_policy(), t);
    const auto read_nr = resolve_syscall("read", t);
    CHECK(evaluate(prog, t.audit_id(), read_nr) == Action::allow());
    CHECK(evaluate(prog, t.audit_id(), resolve_syscall("write", t)) == Action::kill());
    CHECK(evaluate(prog, foreign_arch(t), read_nr) == Action::kill());
    CHECK(evaluate(prog, 0, read_nr) == Action::kill());
    CHECK(prog.size() == 7);
  }
}

TEST_CASE("empty allow-all policy compiles to arch check plus return") {
  const auto prog = compile_filter(SeccompPolicy{}, x86());
  using Op = Instruction::Op;
  REQUIRE(prog.size() == 4);
  CHECK(prog.instructions()[0].op == Op::kLoadArch);
  CHECK(prog.instructions()[1].op == Op::kJumpEqual);
  CHECK(prog.instructions()[2].action == Action::kill());
  CHECK(prog.instructions()[3].action == Action::allow());
  CHECK(evaluate(prog, x86().audit_id(), 12345) == Action::allow());
  CHECK(evaluate(prog, foreign_arch(x86()), 0) == Action::kill());
}

TEST_CASE("names unknown to every table fail compilation") {
  SeccompPolicy p;
  p.rules.emplace("no_such_call", Action::kill());
  CHECK_THROWS_AS(compile_filter(p, x86()), UnknownSyscall);
}

TEST_CASE("names missing from one architecture are vacuous there") {
  SeccompPolicy p;
  p.default_action = Action::allow();
  p.rules.emplace("open", Action::kill());
  const auto a = compile_filter(p, arm());
  CHECK(a.size() == 4);
  const auto x = compile_filter(p, x86());
  CHECK(evaluate(x, x86().audit_id(), 2) == Action::kill());
}

TEST_CASE("oversized programs are refused") {
  SeccompPolicy p;
  for (const auto& e : x86().entries()) p.rules.emplace(std::string(e.name), Action::kill());
  CHECK_NOTHROW(compile_filter(p, x86()));  // 360 rules fit easily
  CHECK(kMaxProgramLength == 4096);
}

TEST_CASE("compiled programs match the declarative semantics exhaustively") {
  std::mt19937 rng(1729);
  std::size_t discrepancies = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto policy = testsupport::random_seccomp(rng);
    for (Arch a : kAllArches) {
      const auto& t = ArchTable::get(a);
      const auto prog = compile_filter(policy, t);
      check_program(prog);
      CHECK(prog.size() <= kMaxProgramLength);
      for (std::uint32_t nr = 0; nr < 1024; ++nr) {
        if (evaluate(prog, t.audit_id(), nr) != oracle::policy_semantics(policy, t, t.audit_id(), nr)) {
          ++discrepancies;
        }
      }
      if (evaluate(prog, foreign_arch(t), resolve_syscall("read", t)) != Action::kill()) ++discrepancies;
    }
  }
  CHECK(discrepancies == 0);
}

TEST_CASE("architecture is always checked first") {
  std::mt19937 rng(99);
  for (int i = 0; i < 200; ++i) {
    const auto policy = testsupport::random_seccomp(rng);
    for (Arch a : kAllArches) {
      const auto& t = ArchTable::get(a);
      const auto prog = compile_filter(policy, t);
      const auto insns = prog.instructions();
      REQUIRE(insns.size() >= 4);
      CHECK(insns[0].op == Instruction::Op::kLoadArch);
      CHECK(insns[1].op == Instruction::Op::kJumpEqual);
      CHECK(insns[1].value == t.audit_id());
      for (std::uint32_t nr : {0u, 1u, 59u, 1023u}) CHECK(evaluate(prog, foreign_arch(t), nr) == Action::kill());
    }
  }
}

TEST_CASE("hand-built malformed programs are caught") {
  using Op = Instruction::Op;
  const Instruction load_arch{Op::kLoadArch};
  const Instruction arch_check{Op::kJumpEqual, x86().audit_id(), 1, 0};
  const Instruction kill{Op::kReturn, 0, 0, 0, Action::kill()};
  const Instruction allow{Op::kReturn, 0, 0, 0, Action::allow()};

  CHECK_THROWS_AS(check_program(FilterProgram(Arch::kX8664, {})), MalformedProgram);
  // Number compared before the architecture.
  CHECK_THROWS_AS(check_program(FilterProgram(Arch::kX8664, {{Op::kLoadNr}, arch_check, kill, allow})),
                  MalformedProgram);
  // Mismatch path returns allow.
  CHECK_THROWS_AS(check_program(FilterProgram(Arch::kX8664, {load_arch, arch_check, allow, allow})),
                  MalformedProgram);
  // Wild jump.
  const FilterProgram wild(Arch::kX8664, {load_arch, arch_check, kill, {Op::kJumpEqual, 0, 200, 200}, allow});
  CHECK_THROWS_AS(check_program(wild), MalformedProgram);
  CHECK_THROWS_AS(evaluate(wild, x86().audit_id(), 0), MalformedProgram);
  // Falls off the end.
  const FilterProgram open_end(Arch::kX8664, {load_arch, arch_check, kill, {Op::kLoadNr}});
  CHECK_THROWS_AS(check_program(open_end), MalformedProgram);
  CHECK_THROWS_AS(evaluate(open_end, x86().audit_id(), 0), MalformedProgram);
}

TEST_CASE("disassembly is stable and names syscalls") {
  SeccompPolicy p;
  p.default_action = Action::kill();
  p.rules.emplace("write", Action::error(EPERM));
  p.rules.emplace("read", Action::allow());
  const std::string expected =
      "; arch=x86_64 insns=9\n"
      "0000 ld arch\n"
      "0001 jeq 0xc000003e +1 +0\n"
      "0002 ret kill\n"
      "0003 ld nr\n"
      "0004 jeq 0 +0 +1 ; read\n"
      "0005 ret allow\n"
      "0006 jeq 1 +0 +1 ; write\n"
      "0007 ret errno.EPERM\n"
      "0008 ret kill\n";
  CHECK(disassemble(compile_filter(p, x86())) == expected);
}

TEST_CASE("kernel lowering agrees with the interpreter") {
  std::mt19937 rng(4242);
  for (int i = 0; i < 200; ++i) {
    const auto policy = testsupport::random_seccomp(rng);
    for (Arch a : kAllArches) {
      const auto& t = ArchTable::get(a);
      const auto prog = compile_filter(policy, t);
      for (auto mode : {LoweringMode::kEnforce, LoweringMode::kObserve}) {
        const auto bpf = lower_to_bpf(prog, mode);
        CHECK(bpf.size() <= BPF_MAXINSNS);
        for (std::uint32_t nr = 0; nr < 1024; nr += 3) {
          const auto got = oracle::run_cbpf(bpf, {nr, t.audit_id()});
          REQUIRE(got);
          CHECK(*got == expected_ret(evaluate(prog, t.audit_id(), nr), mode));
        }
        // A foreign architecture never reaches the tracer.
        CHECK(oracle::run_cbpf(bpf, {0, foreign_arch(t)}) == SECCOMP_RET_KILL_PROCESS);
        // x32 numbers are refused once any number comparison exists.
        if (a == Arch::kX8664 && !policy.rules.empty()) {
          CHECK(oracle::run_cbpf(bpf, {0x40000000u, t.audit_id()}) == SECCOMP_RET_KILL_PROCESS);
        }
      }
    }
  }
}

#if defined(__x86_64__) || defined(__aarch64__)
namespace {

// Installs the lowered filter in a forked child, runs fn there and reports
// how the child ended.
template <typename Fn>
int run_filtered(const SeccompPolicy& policy, Fn fn) {
  const auto bpf = lower_to_bpf(compile_filter(policy, ArchTable::get(*native_arch())), LoweringMode::kEnforce);
  std::vector<sock_filter> raw;
  for (const auto& in : bpf) raw.push_back({in.code, in.jt, in.jf, in.k});
  const pid_t pid = fork();
  if (pid == 0) {
    sock_fprog prog{static_cast<unsigned short>(raw.size()), raw.data()};
    if (prctl(PR_SET_NO_NEW_PRIVS, 1, 0, 0, 0) != 0) _exit(100);
    if (syscall(SYS_seccomp, SECCOMP_SET_MODE_FILTER, 0, &prog) != 0) _exit(101);
    _exit(fn());
  }
  int status = 0;
  waitpid(pid, &status, 0);
  return status;
}

}  // namespace

TEST_CASE("lowered filter behaves the same in the kernel") {
  SeccompPolicy p;
  p.default_action = Action::allow();
  p.rules.emplace("getppid", Action::error(EACCES));
  p.rules.emplace("uname", Action::kill());

  int status = run_filtered(p, [] {
    errno = 0;
    long r = syscall(SYS_getppid);
    return (r == -1 && errno == EACCES) ? 7 : 1;
  });
  CHECK(WIFEXITED(status));
  CHECK(WEXITSTATUS(status) == 7);

  status = run_filtered(p, [] {
    syscall(SYS_uname, nullptr);
    return 0;
  });
  CHECK(WIFSIGNALED(status));
  CHECK(WTERMSIG(status) == SIGSYS);
}
#endif
