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
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "orbitjail/error.hpp"
#include "orbitjail/syscall_filter.hpp"

namespace orbitjail::policy {

enum class Namespace : std::uint8_t { kUser, kPid, kMount, kNet, kIpc, kUts, kCgroup };
inline constexpr std::array<Namespace, 7> kAllNamespaces = {
    Namespace::kCgroup, Namespace::kIpc, Namespace::kMount, Namespace::kNet,
    Namespace::kPid,    Namespace::kUser, Namespace::kUts};  // sorted by name

std::string_view to_string(Namespace ns);
std::optional<Namespace> namespace_from_name(std::string_view name);

class NamespaceSet {
 public:
  NamespaceSet() = default;
  NamespaceSet(std::initializer_list<Namespace> list) {
    for (auto ns : list) insert(ns);
  }

  bool contains(Namespace ns) const { return (bits_ >> static_cast<unsigned>(ns)) & 1u; }
  void insert(Namespace ns) { bits_ |= 1u << static_cast<unsigned>(ns); }
  void erase(Namespace ns) { bits_ &= ~(1u << static_cast<unsigned>(ns)); }
  bool empty() const { return bits_ == 0; }
  std::size_t size() const;
  // Names in lexicographic order.
  std::vector<std::string_view> names() const;

  friend bool operator==(const NamespaceSet&, const NamespaceSet&) = default;

 private:
  std::uint8_t bits_ = 0;
};

struct IdMapping {
  std::uint32_t inside = 0;
  std::uint32_t outside = 0;
  std::uint32_t count = 1;

  friend bool operator==(const IdMapping&, const IdMapping&) = default;
};

enum class MountKind : std::uint8_t { kBind, kTmpfs, kProc };
std::string_view to_string(MountKind kind);

struct MountSpec {
  MountKind kind = MountKind::kBind;
  // Host path for bind mounts; the kind name otherwise.
  std::string source;
  // Absolute path inside the jail.
  std::string dest;
  bool read_only = true;

  friend bool operator==(const MountSpec&, const MountSpec&) = default;
};

struct ResourceLimits {
  std::optional<std::uint64_t> memory_bytes;
  std::optional<std::uint32_t> pids_max;
  std::optional<int> cpu_percent;

  bool empty() const { return !memory_bytes && !pids_max && !cpu_percent; }
  friend bool operator==(const ResourceLimits&, const ResourceLimits&) = default;
};

enum class NetworkMode : std::uint8_t { kIsolated, kLoopbackOnly, kPassthrough };
std::string_view to_string(NetworkMode mode);

struct SandboxPolicy {
  std::string name;
  std::string chroot_root = "/";
  std::string hostname;  // empty: not set
  NamespaceSet namespaces;
  std::vector<IdMapping> uid_map;
  std::vector<IdMapping> gid_map;
  std::vector<MountSpec> mounts;
  seccomp::SeccompPolicy seccomp;
  std::set<std::string> capabilities;
  ResourceLimits limits;
  NetworkMode network_mode = NetworkMode::kPassthrough;
  std::vector<std::string> env_allow;
  std::optional<std::string> log_path;

  friend bool operator==(const SandboxPolicy&, const SandboxPolicy&) = default;
};

// Linux capability names ("CAP_CHOWN" ...) indexed by capability number.
std::span<const std::string_view> capability_names();
std::optional<int> capability_number(std::string_view name);

class SyntaxError : public Error {
 public:
  SyntaxError(int line, std::string reason)
      : Error("line " + std::to_string(line) + ": " + reason), line_(line), reason_(std::move(reason)) {}
  int line() const { return line_; }
  const std::string& reason() const { return reason_; }

 private:
  int line_;
  std::string reason_;
};

class DuplicateKey : public Error {
 public:
  DuplicateKey(int line, std::string key)
      : Error("line " + std::to_string(line) + ": duplicate key '" + key + "'"),
        line_(line), key_(std::move(key)) {}
  int line() const { return line_; }
  const std::string& key() const { return key_; }

 private:
  int line_;
  std::string key_;
};

// line() is 0 for cross-field violations found after parsing.
class ValidationError : public Error {
 public:
  ValidationError(std::string field, std::string reason, int line = 0)
      : Error((line ? "line " + std::to_string(line) + ": " : std::string()) + field + ": " + reason),
        field_(std::move(field)), reason_(std::move(reason)), line_(line) {}
  const std::string& field() const { return field_; }
  const std::string& reason() const { return reason_; }
  int line() const { return line_; }

 private:
  std::string field_;
  std::string reason_;
  int line_;
};

// Throws ValidationError for the first violated invariant.
void validate(const SandboxPolicy& policy);

// Absolute, no "." / ".." / empty segments, no trailing slash.
bool is_normalized_absolute(std::string_view path);

// Throws SyntaxError, DuplicateKey, ValidationError.
SandboxPolicy parse_policy(std::string_view text);

// Canonical text: sections in grammar order, keys sorted within a section.
std::string serialize_policy(const SandboxPolicy& policy);

// Reads a policy file, transparently unwrapping a resilient container.
SandboxPolicy load_policy_file(const std::string& path);

// Inside id the jailed process runs as (first mapping, or 0).
std::uint32_t jail_uid(const SandboxPolicy& policy);
std::uint32_t jail_gid(const SandboxPolicy& policy);

// Rewrites single-entry id maps so their outside id is the given host id.
// Unprivileged callers can only map their own ids.
SandboxPolicy with_outside_ids(SandboxPolicy policy, std::uint32_t uid, std::uint32_t gid);

}  // namespace orbitjail::policy
