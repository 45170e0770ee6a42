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

#include <algorithm>
#include <functional>
#include <linux/capability.h>
#include <random>

#include "orbitjail/policy.hpp"
#include "orbitjail/resilient.hpp"
#include "support/files.hpp"
#include "support/random_policy.hpp"

using namespace orbitjail;
using namespace orbitjail::policy;
using testsupport::read_file;
using testsupport::source_path;

namespace {

constexpr std::string_view kMinimal =
    "[sandbox]\n"
    "name = minimal\n"
    "chroot = /srv/jail\n"
    "[namespaces]\n"
    "user = true\n"
    "mount = true\n";

const char* kFixtures[] = {"minimal.pol", "cmd-parser.pol", "reference.pol", "observe-log.pol"};

SandboxPolicy fixture(const std::string& name) { return load_policy_file(source_path("fixtures/policies/" + name)); }

// A valid baseline that individual cases break one field at a time.
SandboxPolicy baseline() {
  SandboxPolicy p;
  p.name = "base";
  p.chroot_root = "/srv/jail";
  p.namespaces = {Namespace::kUser, Namespace::kMount, Namespace::kNet, Namespace::kUts};
  p.uid_map = {{0, 1000, 1}};
  p.gid_map = {{0, 1000, 1}};
  p.mounts = {{MountKind::kBind, "/usr", "/usr", true}};
  p.network_mode = NetworkMode::kIsolated;
  return p;
}

std::string validation_field(const SandboxPolicy& p) {
  try {
    validate(p);
  } catch (const ValidationError& e) {
    return e.field();
  }
  return "";
}

template <typename E>
E parse_error(std::string_view text) {
  try {
    parse_policy(text);
  } catch (const E& e) {
    return e;
  } catch (const std::exception& e) {
    FAIL("wrong exception: " << e.what());
  }
  FAIL("parse unexpectedly succeeded:\n" << text);
  throw;
}

}  // namespace

TEST_CASE("minimal policy parses to two namespaces and no mounts") {
  const auto p = parse_policy(kMinimal);
  CHECK(p.name == "minimal");
  CHECK(p.chroot_root == "/srv/jail");
  CHECK(p.namespaces.size() == 2);
  CHECK(p.namespaces.contains(Namespace::kUser));
  CHECK(p.namespaces.contains(Namespace::kMount));
  CHECK(p.mounts.empty());
  CHECK(p.uid_map.empty());
  CHECK(p.capabilities.empty());
  CHECK(p.network_mode == NetworkMode::kPassthrough);
  CHECK(p.seccomp.default_action == seccomp::Action::allow());
}

TEST_CASE("root inside maps to an ordinary host user") {
  const auto p = parse_policy(std::string(kMinimal) + "[idmap]\nuid = 0:1000:1\ngid = 0:1000:1\n");
  REQUIRE(p.uid_map.size() == 1);
  CHECK(p.uid_map[0] == IdMapping{0, 1000, 1});
  CHECK(p.gid_map[0] == IdMapping{0, 1000, 1});
  CHECK(jail_uid(p) == 0);

  const auto rebased = with_outside_ids(p, 4242, 4343);
  CHECK(rebased.uid_map[0] == IdMapping{0, 4242, 1});
  CHECK(rebased.gid_map[0] == IdMapping{0, 4343, 1});
}

TEST_CASE("parent-relative mount destination is rejected") {
  auto e = parse_error<ValidationError>(std::string(kMinimal) + "[mounts]\nmount = bind,/etc,../etc,ro\n");
  CHECK(e.field() == "dest");
  CHECK(e.reason() == "not-normalized");
  CHECK(e.line() == 8);
}

TEST_CASE("path normalization") {
  CHECK(is_normalized_absolute("/"));
  CHECK(is_normalized_absolute("/a/b"));
  CHECK_FALSE(is_normalized_absolute(""));
  CHECK_FALSE(is_normalized_absolute("a/b"));
  CHECK_FALSE(is_normalized_absolute("/a/"));
  CHECK_FALSE(is_normalized_absolute("/a//b"));
  CHECK_FALSE(is_normalized_absolute("/a/./b"));
  CHECK_FALSE(is_normalized_absolute("/a/../b"));
  CHECK_FALSE(is_normalized_absolute("/a b"));
}

TEST_CASE("round trip holds for the minimal policy and every fixture") {
  const auto p = parse_policy(kMinimal);
  CHECK(parse_policy(serialize_policy(p)) == p);
  for (const char* name : kFixtures) {
    CAPTURE(name);
    const auto f = fixture(name);
    const auto text = serialize_policy(f);
    CHECK(parse_policy(text) == f);
    // Canonical text is a fixed point.
    CHECK(serialize_policy(parse_policy(text)) == text);
  }
}

TEST_CASE("round trip holds for random policies") {
  std::mt19937 rng(20261016);
  for (int i = 0; i < 500; ++i) {
    const auto p = testsupport::random_policy(rng);
    REQUIRE_NOTHROW(validate(p));
    const auto text = serialize_policy(p);
    CAPTURE(text);
    REQUIRE(parse_policy(text) == p);
  }
}

TEST_CASE("key order in the source does not change canonical output") {
  const std::string a =
      "[sandbox]\nname = n\nchroot = /j\nhostname = h\n"
      "[namespaces]\nuts = true\nmount = true\nuser = false\n"
      "[seccomp]\nallow = write,read\ndefault = kill\nerrno.EPERM = mount\n"
      "[limits]\npids_max = 4\nmemory_bytes = 1024\n";
  const std::string b =
      "# same policy, shuffled\n"
      "[limits]\nmemory_bytes = 1024\npids_max = 4\n"
      "[seccomp]\nerrno.EPERM = mount\ndefault = kill\nallow = read,write\n"
      "[namespaces]\nmount = true\nuts = true\n"
      "[sandbox]\nhostname = h\nchroot = /j\nname = n\n";
  CHECK(serialize_policy(parse_policy(a)) == serialize_policy(parse_policy(b)));
}

TEST_CASE("cmd-parser fixture serializes to the golden bytes") {
  const auto golden = read_file(source_path("fixtures/golden/cmd-parser.canonical.pol"));
  CHECK(serialize_policy(fixture("cmd-parser.pol")) == golden);
}

TEST_CASE("packed policy files load transparently, even with one copy damaged") {
  const auto text = read_file(source_path("fixtures/policies/cmd-parser.pol"));
  auto packed = encode_resilient(std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
  for (std::size_t i = 8; i < 8 + text.size(); i += 7) packed[i] ^= 0x5A;
  const std::string path = std::string(ORBITJAIL_BINARY_DIR) + "/test_policy_packed.pol";
  testsupport::write_file(path, std::string(packed.begin(), packed.end()));
  CHECK(load_policy_file(path) == fixture("cmd-parser.pol"));
}

TEST_CASE("every invariant has a reachable validation error") {
  REQUIRE(validation_field(baseline()).empty());

  struct Case {
    const char* label;
    std::function<void(SandboxPolicy&)> mutate;
    const char* field;
  };
  const Case cases[] = {
      {"empty name", [](auto& p) { p.name = ""; }, "name"},
      {"long name", [](auto& p) { p.name = std::string(65, 'a'); }, "name"},
      {"bad name char", [](auto& p) { p.name = "a b"; }, "name"},
      {"relative chroot", [](auto& p) { p.chroot_root = "srv"; }, "chroot"},
      {"dotdot chroot", [](auto& p) { p.chroot_root = "/srv/../etc"; }, "chroot"},
      {"hostname without uts", [](auto& p) { p.hostname = "h"; p.namespaces.erase(Namespace::kUts); }, "hostname"},
      {"bad hostname", [](auto& p) { p.hostname = "h/x"; }, "hostname"},
      {"relative log", [](auto& p) { p.log_path = "log"; }, "log_path"},
      {"dotdot dest", [](auto& p) { p.mounts[0].dest = "/../etc"; }, "dest"},
      {"relative dest", [](auto& p) { p.mounts[0].dest = "etc"; }, "dest"},
      {"root dest", [](auto& p) { p.mounts[0].dest = "/"; }, "dest"},
      {"relative bind source", [](auto& p) { p.mounts[0].source = "usr"; }, "mounts.source"},
      {"id map without user ns", [](auto& p) { p.namespaces.erase(Namespace::kUser); }, "id_map"},
      {"zero count", [](auto& p) { p.uid_map[0].count = 0; }, "id_map.uid"},
      {"inside overlap", [](auto& p) { p.uid_map.push_back({0, 2000, 1}); }, "id_map.uid"},
      {"outside overlap", [](auto& p) { p.gid_map.push_back({5, 1000, 1}); }, "id_map.gid"},
      {"id space overflow", [](auto& p) { p.uid_map[0] = {0xFFFFFFFFu, 1000, 2}; }, "id_map.uid"},
      {"unknown capability", [](auto& p) { p.capabilities.insert("CAP_FLY"); }, "capabilities"},
      {"mounts without mount ns", [](auto& p) { p.chroot_root = "/"; p.namespaces.erase(Namespace::kMount); }, "namespaces"},
      {"chroot without mount ns",
       [](auto& p) { p.mounts.clear(); p.namespaces.erase(Namespace::kMount); }, "namespaces"},
      {"passthrough with net ns", [](auto& p) { p.network_mode = NetworkMode::kPassthrough; }, "network_mode"},
      {"isolated without net ns", [](auto& p) { p.namespaces.erase(Namespace::kNet); }, "network_mode"},
      {"loopback without net ns",
       [](auto& p) { p.network_mode = NetworkMode::kLoopbackOnly; p.namespaces.erase(Namespace::kNet); }, "network_mode"},
      {"zero memory", [](auto& p) { p.limits.memory_bytes = 0; }, "limits.memory_bytes"},
      {"zero pids", [](auto& p) { p.limits.pids_max = 0; }, "limits.pids_max"},
      {"cpu over 100", [](auto& p) { p.limits.cpu_percent = 101; }, "limits.cpu_percent"},
      {"cpu zero", [](auto& p) { p.limits.cpu_percent = 0; }, "limits.cpu_percent"},
      {"unknown syscall", [](auto& p) { p.seccomp.rules.emplace("no_such_call", seccomp::Action::kill()); }, "seccomp"},
      {"errno outside table", [](auto& p) { p.seccomp.rules.emplace("read", seccomp::Action::error(9999)); }, "seccomp"},
      {"bad env name", [](auto& p) { p.env_allow = {"1X"}; }, "env_allow"},
  };
  for (const auto& c : cases) {
    CAPTURE(c.label);
    auto p = baseline();
    c.mutate(p);
    CHECK(validation_field(p) == c.field);
  }
}

TEST_CASE("invariants are also enforced through the text format") {
  struct Case {
    std::string text;
    const char* field;
  };
  const Case cases[] = {
      {"[sandbox]\nname = x\nchroot = /j\n", "namespaces"},
      {"[sandbox]\nname = x\n[namespaces]\nuser = false\n[idmap]\nuid = 0:1:1\n", "id_map"},
      {"[sandbox]\nname = x\nnetwork_mode = isolated\n", "network_mode"},
      {"[sandbox]\nname = x\n[namespaces]\nnet = true\nnetwork_mode = passthrough\n", ""},
      {"[sandbox]\nname = x\n[capabilities]\nkeep = CAP_FLY\n", "capabilities"},
      {"[sandbox]\nname = x\n[limits]\ncpu_percent = 0\n", "limits.cpu_percent"},
      {"[sandbox]\nname = x\n[seccomp]\nallow = no_such_call\n", "seccomp"},
      {"[sandbox]\nname = x\n[seccomp]\nallow = read\nkill = read\n", "seccomp"},
      {"[sandbox]\nname = x\n[seccomp]\nerrno.EWHAT = read\n", "seccomp"},
      {"[sandbox]\nchroot = /\n", "name"},
  };
  for (const auto& c : cases) {
    CAPTURE(c.text);
    if (std::string_view(c.field).empty()) {
      // network_mode under [namespaces] is an unknown key, not a validation issue.
      CHECK_THROWS_AS(parse_policy(c.text), SyntaxError);
      continue;
    }
    CHECK(parse_error<ValidationError>(c.text).field() == c.field);
  }
}

TEST_CASE("duplicate keys are reported with their line") {
  auto e = parse_error<DuplicateKey>("[sandbox]\nname = a\n\n# again\nname = b\n");
  CHECK(e.line() == 5);
  CHECK(e.key() == "name");
  CHECK(parse_error<DuplicateKey>("[sandbox]\nname = a\n[namespaces]\nuser = true\nuser = false\n").line() == 5);
  // Repeatable keys are not duplicates.
  CHECK_NOTHROW(parse_policy(std::string(kMinimal) +
                             "[mounts]\nmount = tmpfs,tmpfs,/a,rw\nmount = tmpfs,tmpfs,/b,rw\n"));
}

TEST_CASE("syntax errors carry line numbers") {
  struct Case {
    std::string text;
    int line;
  };
  const Case cases[] = {
      {"name = x\n", 1},
      {"[sandbox]\nname = x\n[bogus]\n", 3},
      {"[sandbox]\nname = x\n[sandbox]\n", 3},
      {"[sandbox\n", 1},
      {"[sandbox]\nname x\n", 2},
      {"[sandbox]\nname = x\nnmae = y\n", 3},
      {"[sandbox]\nname = x\n[namespaces]\nuser = yes\n", 4},
      {"[sandbox]\nname = x\n[idmap]\nuid = 0:1000\n", 4},
      {"[sandbox]\nname = x\n[idmap]\nuid = 0:-1:1\n", 4},
      {"[sandbox]\nname = x\n[mounts]\nmount = bind,/a,/b\n", 4},
      {"[sandbox]\nname = x\n[mounts]\nmount = bind,/a,/b,rx\n", 4},
      {"[sandbox]\nname = x\n[seccomp]\nallow = read,,write\n", 4},
      {"[sandbox]\nname = x\n[limits]\nmemory_bytes = 1e9\n", 4},
      {"[sandbox]\nname = x\n[limits]\nmemory_bytes = 99999999999999999999999\n", 4},
      {"[sandbox]\nname = x\n[env]\nallow = A,\n", 4},
      {"[sandbox]\nname = x\n[env]\ndeny = A\n", 4},
  };
  for (const auto& c : cases) {
    CAPTURE(c.text);
    CHECK(parse_error<SyntaxError>(c.text).line() == c.line);
  }
}

TEST_CASE("comments, blank lines and a missing trailing newline are accepted") {
  const auto p = parse_policy("  # leading comment\n\n[sandbox]  # trailing\nname = x # inline\n\n[namespaces]\nuts = true");
  CHECK(p.name == "x");
  CHECK(p.namespaces.contains(Namespace::kUts));
}

TEST_CASE("empty capability list drops everything") {
  const auto p = parse_policy("[sandbox]\nname = x\n[capabilities]\nkeep =\n");
  CHECK(p.capabilities.empty());
}

TEST_CASE("capability table matches the kernel header numbering") {
  CHECK(capability_names().size() == CAP_LAST_CAP + 1);
  CHECK(capability_number("CAP_CHOWN") == CAP_CHOWN);
  CHECK(capability_number("CAP_SETUID") == CAP_SETUID);
  CHECK(capability_number("CAP_NET_ADMIN") == CAP_NET_ADMIN);
  CHECK(capability_number("CAP_SYS_CHROOT") == CAP_SYS_CHROOT);
  CHECK(capability_number("CAP_SYS_ADMIN") == CAP_SYS_ADMIN);
  CHECK(capability_number("CAP_AUDIT_READ") == CAP_AUDIT_READ);
  CHECK(capability_number("CAP_BPF") == CAP_BPF);
  CHECK(capability_number("CAP_CHECKPOINT_RESTORE") == CAP_CHECKPOINT_RESTORE);
  CHECK_FALSE(capability_number("CAP_FLY"));
}
