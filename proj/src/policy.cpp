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

#include "orbitjail/policy.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <iterator>
#include <limits>
#include <map>
#include <sstream>

#include "orbitjail/resilient.hpp"

namespace orbitjail::policy {
namespace {

constexpr std::string_view kCapabilityNames[] = {
    "CAP_CHOWN",           "CAP_DAC_OVERRIDE",   "CAP_DAC_READ_SEARCH", "CAP_FOWNER",
    "CAP_FSETID",          "CAP_KILL",           "CAP_SETGID",          "CAP_SETUID",
    "CAP_SETPCAP",         "CAP_LINUX_IMMUTABLE", "CAP_NET_BIND_SERVICE", "CAP_NET_BROADCAST",
    "CAP_NET_ADMIN",       "CAP_NET_RAW",        "CAP_IPC_LOCK",        "CAP_IPC_OWNER",
    "CAP_SYS_MODULE",      "CAP_SYS_RAWIO",      "CAP_SYS_CHROOT",      "CAP_SYS_PTRACE",
    "CAP_SYS_PACCT",       "CAP_SYS_ADMIN",      "CAP_SYS_BOOT",        "CAP_SYS_NICE",
    "CAP_SYS_RESOURCE",    "CAP_SYS_TIME",       "CAP_SYS_TTY_CONFIG",  "CAP_MKNOD",
    "CAP_LEASE",           "CAP_AUDIT_WRITE",    "CAP_AUDIT_CONTROL",   "CAP_SETFCAP",
    "CAP_MAC_OVERRIDE",    "CAP_MAC_ADMIN",      "CAP_SYSLOG",          "CAP_WAKE_ALARM",
    "CAP_BLOCK_SUSPEND",   "CAP_AUDIT_READ",     "CAP_PERFMON",         "CAP_BPF",
    "CAP_CHECKPOINT_RESTORE",
};

enum class Section { kNone, kSandbox, kNamespaces, kIdmap, kMounts, kSeccomp, kCapabilities, kLimits, kEnv };

constexpr std::pair<std::string_view, Section> kSections[] = {
    {"sandbox", Section::kSandbox}, {"namespaces", Section::kNamespaces},
    {"idmap", Section::kIdmap},     {"mounts", Section::kMounts},
    {"seccomp", Section::kSeccomp}, {"capabilities", Section::kCapabilities},
    {"limits", Section::kLimits},   {"env", Section::kEnv},
};

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool is_identifier(std::string_view s, std::string_view extra) {
  if (s.empty() || s.size() > 64) return false;
  return std::all_of(s.begin(), s.end(), [extra](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || extra.find(c) != std::string_view::npos;
  });
}

bool is_env_name(std::string_view s) {
  if (s.empty() || std::isdigit(static_cast<unsigned char>(s.front()))) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
  });
}

template <typename T>
std::optional<T> parse_unsigned(std::string_view s) {
  T value{};
  if (s.empty() || !std::isdigit(static_cast<unsigned char>(s.front()))) return std::nullopt;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = s.find(sep, start);
    parts.push_back(trim(s.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

// Comma list; an empty value is an empty list, an empty item is an error.
std::optional<std::vector<std::string>> parse_list(std::string_view value) {
  std::vector<std::string> out;
  if (value.empty()) return out;
  for (auto item : split(value, ',')) {
    if (item.empty()) return std::nullopt;
    out.emplace_back(item);
  }
  return out;
}

std::string join(const auto& items, std::string_view sep) {
  std::string out;
  for (const auto& item : items) {
    if (!out.empty()) out += sep;
    out += item;
  }
  return out;
}

bool ranges_overlap(const IdMapping& a, const IdMapping& b, bool outside) {
  const std::uint64_t a0 = outside ? a.outside : a.inside;
  const std::uint64_t b0 = outside ? b.outside : b.inside;
  return a0 < b0 + b.count && b0 < a0 + a.count;
}

void validate_id_map(const std::vector<IdMapping>& map, const std::string& field) {
  for (std::size_t i = 0; i < map.size(); ++i) {
    const auto& m = map[i];
    if (m.count == 0) throw ValidationError(field, "count must be at least 1");
    constexpr std::uint64_t kIdSpace = std::uint64_t{1} << 32;
    if (std::uint64_t{m.inside} + m.count > kIdSpace || std::uint64_t{m.outside} + m.count > kIdSpace) {
      throw ValidationError(field, "range exceeds the 32-bit id space");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (ranges_overlap(m, map[j], false)) throw ValidationError(field, "inside ranges overlap");
      if (ranges_overlap(m, map[j], true)) throw ValidationError(field, "outside ranges overlap");
    }
  }
}

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  SandboxPolicy run() {
    int line_no = 0;
    std::size_t start = 0;
    while (start <= text_.size()) {
      std::size_t end = text_.find('\n', start);
      if (end == std::string_view::npos) end = text_.size();
      ++line_no;
      handle_line(line_no, text_.substr(start, end - start));
      start = end + 1;
    }
    finish();
    return std::move(policy_);
  }

 private:
  void handle_line(int line, std::string_view raw) {
    if (auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
    std::string_view s = trim(raw);
    if (s.empty()) return;
    if (s.front() == '[') {
      if (s.back() != ']') throw SyntaxError(line, "unterminated section header");
      std::string_view name = trim(s.substr(1, s.size() - 2));
      auto it = std::find_if(std::begin(kSections), std::end(kSections),
                             [name](const auto& p) { return p.first == name; });
      if (it == std::end(kSections)) throw SyntaxError(line, "unknown section [" + std::string(name) + "]");
      if (!seen_sections_.insert(it->second).second) {
        throw SyntaxError(line, "section [" + std::string(name) + "] appears twice");
      }
      section_ = it->second;
      return;
    }
    const auto eq = s.find('=');
    if (eq == std::string_view::npos) throw SyntaxError(line, "expected 'key = value'");
    const std::string_view key = trim(s.substr(0, eq));
    const std::string_view value = trim(s.substr(eq + 1));
    if (key.empty()) throw SyntaxError(line, "missing key");
    if (section_ == Section::kNone) throw SyntaxError(line, "key outside of any section");

    const bool repeatable = (section_ == Section::kIdmap && (key == "uid" || key == "gid")) ||
                            (section_ == Section::kMounts && key == "mount");
    if (!repeatable && !seen_keys_.insert({section_, std::string(key)}).second) {
      throw DuplicateKey(line, std::string(key));
    }

    switch (section_) {
      case Section::kSandbox: sandbox_key(line, key, value); break;
      case Section::kNamespaces: namespace_key(line, key, value); break;
      case Section::kIdmap: idmap_key(line, key, value); break;
      case Section::kMounts: mount_key(line, key, value); break;
      case Section::kSeccomp: seccomp_key(line, key, value); break;
      case Section::kCapabilities: capabilities_key(line, key, value); break;
      case Section::kLimits: limits_key(line, key, value); break;
      case Section::kEnv: env_key(line, key, value); break;
      case Section::kNone: break;
    }
  }

  [[noreturn]] void unknown_key(int line, std::string_view key) {
    throw SyntaxError(line, "unknown key '" + std::string(key) + "'");
  }

  void sandbox_key(int line, std::string_view key, std::string_view value) {
    if (key == "name") {
      if (!is_identifier(value, "_-")) throw ValidationError("name", "must be 1-64 chars of [A-Za-z0-9_-]", line);
      policy_.name = value;
    } else if (key == "chroot") {
      if (!is_normalized_absolute(value)) throw ValidationError("chroot", "not-normalized", line);
      policy_.chroot_root = value;
    } else if (key == "hostname") {
      if (!is_identifier(value, "_-.")) throw ValidationError("hostname", "must be 1-64 chars of [A-Za-z0-9_.-]", line);
      policy_.hostname = value;
    } else if (key == "log_path") {
      if (!is_normalized_absolute(value) || value == "/") throw ValidationError("log_path", "not-normalized", line);
      policy_.log_path = std::string(value);
    } else if (key == "network_mode") {
      if (value == "isolated") network_mode_ = NetworkMode::kIsolated;
      else if (value == "loopback-only") network_mode_ = NetworkMode::kLoopbackOnly;
      else if (value == "passthrough") network_mode_ = NetworkMode::kPassthrough;
      else throw ValidationError("network_mode", "expected isolated, loopback-only or passthrough", line);
    } else {
      unknown_key(line, key);
    }
  }

  void namespace_key(int line, std::string_view key, std::string_view value) {
    auto ns = namespace_from_name(key);
    if (!ns) unknown_key(line, key);
    if (value == "true") policy_.namespaces.insert(*ns);
    else if (value != "false") throw SyntaxError(line, "expected true or false");
  }

  void idmap_key(int line, std::string_view key, std::string_view value) {
    if (key != "uid" && key != "gid") unknown_key(line, key);
    auto parts = split(value, ':');
    if (parts.size() != 3) throw SyntaxError(line, "expected <inside>:<outside>:<count>");
    auto inside = parse_unsigned<std::uint32_t>(parts[0]);
    auto outside = parse_unsigned<std::uint32_t>(parts[1]);
    auto count = parse_unsigned<std::uint32_t>(parts[2]);
    if (!inside || !outside || !count) throw SyntaxError(line, "id map values must be unsigned 32-bit integers");
    if (*count == 0) throw ValidationError("id_map", "count must be at least 1", line);
    (key == "uid" ? policy_.uid_map : policy_.gid_map).push_back({*inside, *outside, *count});
  }

  void mount_key(int line, std::string_view key, std::string_view value) {
    if (key != "mount") unknown_key(line, key);
    auto parts = split(value, ',');
    if (parts.size() != 4) throw SyntaxError(line, "expected <kind>,<source>,<dest>,<ro|rw>");
    MountSpec m;
    if (parts[0] == "bind") m.kind = MountKind::kBind;
    else if (parts[0] == "tmpfs") m.kind = MountKind::kTmpfs;
    else if (parts[0] == "proc") m.kind = MountKind::kProc;
    else throw ValidationError("mounts.kind", "expected bind, tmpfs or proc", line);
    if (parts[3] == "ro") m.read_only = true;
    else if (parts[3] == "rw") m.read_only = false;
    else throw SyntaxError(line, "mount access must be ro or rw");
    if (m.kind == MountKind::kBind) {
      if (!is_normalized_absolute(parts[1])) throw ValidationError("mounts.source", "not-normalized", line);
      m.source = parts[1];
    } else {
      m.source = to_string(m.kind);
    }
    if (!is_normalized_absolute(parts[2])) throw ValidationError("dest", "not-normalized", line);
    if (parts[2] == "/") throw ValidationError("dest", "cannot mount over the jail root", line);
    m.dest = parts[2];
    policy_.mounts.push_back(std::move(m));
  }

  void add_rules(int line, std::string_view value, seccomp::Action action) {
    auto names = parse_list(value);
    if (!names) throw SyntaxError(line, "empty item in syscall list");
    for (auto& name : *names) {
      if (!seccomp::known_syscall(name)) throw ValidationError("seccomp", "unknown syscall '" + name + "'", line);
      if (!policy_.seccomp.rules.emplace(name, action).second) {
        throw ValidationError("seccomp", "syscall '" + name + "' appears twice", line);
      }
    }
  }

  void seccomp_key(int line, std::string_view key, std::string_view value) {
    using seccomp::Action;
    if (key == "default") {
      auto action = seccomp::parse_action(value);
      if (!action) throw ValidationError("seccomp.default", "expected allow, kill, log or errno.<NAME>", line);
      policy_.seccomp.default_action = *action;
    } else if (key == "allow") {
      add_rules(line, value, Action::allow());
    } else if (key == "kill") {
      add_rules(line, value, Action::kill());
    } else if (key == "log") {
      add_rules(line, value, Action::log());
    } else if (key.substr(0, 6) == "errno.") {
      auto code = seccomp::errno_from_name(key.substr(6));
      if (!code) throw ValidationError("seccomp", "unknown errno '" + std::string(key.substr(6)) + "'", line);
      add_rules(line, value, Action::error(*code));
    } else {
      unknown_key(line, key);
    }
  }

  void capabilities_key(int line, std::string_view key, std::string_view value) {
    if (key != "keep") unknown_key(line, key);
    auto names = parse_list(value);
    if (!names) throw SyntaxError(line, "empty item in capability list");
    for (auto& name : *names) {
      if (!capability_number(name)) throw ValidationError("capabilities", "unknown capability '" + name + "'", line);
      policy_.capabilities.insert(name);
    }
  }

  void limits_key(int line, std::string_view key, std::string_view value) {
    if (key == "memory_bytes") {
      auto v = parse_unsigned<std::uint64_t>(value);
      if (!v) throw SyntaxError(line, "memory_bytes must be an unsigned 64-bit integer");
      policy_.limits.memory_bytes = *v;
    } else if (key == "pids_max") {
      auto v = parse_unsigned<std::uint32_t>(value);
      if (!v) throw SyntaxError(line, "pids_max must be an unsigned 32-bit integer");
      policy_.limits.pids_max = *v;
    } else if (key == "cpu_percent") {
      auto v = parse_unsigned<std::uint32_t>(value);
      if (!v) throw SyntaxError(line, "cpu_percent must be an unsigned integer");
      if (*v < 1 || *v > 100) throw ValidationError("limits.cpu_percent", "must be within 1..100", line);
      policy_.limits.cpu_percent = static_cast<int>(*v);
    } else {
      unknown_key(line, key);
    }
  }

  void env_key(int line, std::string_view key, std::string_view value) {
    if (key != "allow") unknown_key(line, key);
    auto names = parse_list(value);
    if (!names) throw SyntaxError(line, "empty item in variable list");
    for (auto& name : *names) {
      if (!is_env_name(name)) throw ValidationError("env_allow", "invalid variable name '" + name + "'", line);
      if (std::find(policy_.env_allow.begin(), policy_.env_allow.end(), name) != policy_.env_allow.end()) {
        throw ValidationError("env_allow", "variable '" + name + "' listed twice", line);
      }
      policy_.env_allow.push_back(name);
    }
  }

  void finish() {
    if (policy_.name.empty()) throw ValidationError("name", "missing [sandbox] name");
    if (network_mode_) {
      policy_.network_mode = *network_mode_;
    } else {
      policy_.network_mode = policy_.namespaces.contains(Namespace::kNet) ? NetworkMode::kIsolated
                                                                         : NetworkMode::kPassthrough;
    }
    validate(policy_);
  }

  std::string_view text_;
  SandboxPolicy policy_;
  Section section_ = Section::kNone;
  std::set<Section> seen_sections_;
  std::set<std::pair<Section, std::string>> seen_keys_;
  std::optional<NetworkMode> network_mode_;
};

void emit_section(std::string& out, std::string_view name,
                  const std::vector<std::pair<std::string, std::string>>& lines) {
  if (lines.empty()) return;
  if (!out.empty()) out += '\n';
  out += "[";
  out += name;
  out += "]\n";
  for (const auto& [k, v] : lines) {
    out += k;
    out += v.empty() ? " =" : " = ";
    out += v;
    out += '\n';
  }
}

std::string format_mapping(const IdMapping& m) {
  return std::to_string(m.inside) + ":" + std::to_string(m.outside) + ":" + std::to_string(m.count);
}

}  // namespace

std::string_view to_string(Namespace ns) {
  switch (ns) {
    case Namespace::kUser: return "user";
    case Namespace::kPid: return "pid";
    case Namespace::kMount: return "mount";
    case Namespace::kNet: return "net";
    case Namespace::kIpc: return "ipc";
    case Namespace::kUts: return "uts";
    case Namespace::kCgroup: return "cgroup";
  }
  return "?";
}

std::optional<Namespace> namespace_from_name(std::string_view name) {
  for (auto ns : kAllNamespaces) {
    if (to_string(ns) == name) return ns;
  }
  return std::nullopt;
}

std::size_t NamespaceSet::size() const {
  std::size_t n = 0;
  for (auto ns : kAllNamespaces) n += contains(ns);
  return n;
}

std::vector<std::string_view> NamespaceSet::names() const {
  std::vector<std::string_view> out;
  for (auto ns : kAllNamespaces) {
    if (contains(ns)) out.push_back(to_string(ns));
  }
  return out;
}

std::string_view to_string(MountKind kind) {
  switch (kind) {
    case MountKind::kBind: return "bind";
    case MountKind::kTmpfs: return "tmpfs";
    case MountKind::kProc: return "proc";
  }
  return "?";
}

std::string_view to_string(NetworkMode mode) {
  switch (mode) {
    case NetworkMode::kIsolated: return "isolated";
    case NetworkMode::kLoopbackOnly: return "loopback-only";
    case NetworkMode::kPassthrough: return "passthrough";
  }
  return "?";
}

std::span<const std::string_view> capability_names() { return kCapabilityNames; }

std::optional<int> capability_number(std::string_view name) {
  for (std::size_t i = 0; i < std::size(kCapabilityNames); ++i) {
    if (kCapabilityNames[i] == name) return static_cast<int>(i);
  }
  return std::nullopt;
}

bool is_normalized_absolute(std::string_view path) {
  if (path.empty() || path.front() != '/') return false;
  if (path == "/") return true;
  if (path.back() == '/') return false;
  for (auto seg : split(path.substr(1), '/')) {
    if (seg.empty() || seg == "." || seg == "..") return false;
  }
  // split() trims; reject paths whose segments carried whitespace.
  return std::none_of(path.begin(), path.end(), [](char c) {
    return c == '\0' || c == ',' || std::isspace(static_cast<unsigned char>(c));
  });
}

void validate(const SandboxPolicy& p) {
  if (!is_identifier(p.name, "_-")) throw ValidationError("name", "must be 1-64 chars of [A-Za-z0-9_-]");
  if (!is_normalized_absolute(p.chroot_root)) throw ValidationError("chroot", "not-normalized");
  if (!p.hostname.empty() && !is_identifier(p.hostname, "_-.")) {
    throw ValidationError("hostname", "must be 1-64 chars of [A-Za-z0-9_.-]");
  }
  if (!p.hostname.empty() && !p.namespaces.contains(Namespace::kUts)) {
    throw ValidationError("hostname", "requires the uts namespace");
  }
  if (p.log_path && (!is_normalized_absolute(*p.log_path) || *p.log_path == "/")) {
    throw ValidationError("log_path", "not-normalized");
  }

  const bool user_ns = p.namespaces.contains(Namespace::kUser);
  if (!user_ns && (!p.uid_map.empty() || !p.gid_map.empty())) {
    throw ValidationError("id_map", "id maps require the user namespace");
  }
  validate_id_map(p.uid_map, "id_map.uid");
  validate_id_map(p.gid_map, "id_map.gid");

  for (const auto& m : p.mounts) {
    if (!is_normalized_absolute(m.dest) || m.dest == "/") throw ValidationError("dest", "not-normalized");
    if (m.kind == MountKind::kBind && !is_normalized_absolute(m.source)) {
      throw ValidationError("mounts.source", "not-normalized");
    }
  }
  if ((!p.mounts.empty() || p.chroot_root != "/") && !p.namespaces.contains(Namespace::kMount)) {
    throw ValidationError("namespaces", "mounts and chroot require the mount namespace");
  }

  for (const auto& cap : p.capabilities) {
    if (!capability_number(cap)) throw ValidationError("capabilities", "unknown capability '" + cap + "'");
  }

  const bool net_ns = p.namespaces.contains(Namespace::kNet);
  if (p.network_mode == NetworkMode::kPassthrough && net_ns) {
    throw ValidationError("network_mode", "passthrough requires net namespace off");
  }
  if (p.network_mode != NetworkMode::kPassthrough && !net_ns) {
    throw ValidationError("network_mode", std::string(to_string(p.network_mode)) + " requires the net namespace");
  }

  if (p.limits.memory_bytes && *p.limits.memory_bytes == 0) throw ValidationError("limits.memory_bytes", "must be > 0");
  if (p.limits.pids_max && *p.limits.pids_max == 0) throw ValidationError("limits.pids_max", "must be > 0");
  if (p.limits.cpu_percent && (*p.limits.cpu_percent < 1 || *p.limits.cpu_percent > 100)) {
    throw ValidationError("limits.cpu_percent", "must be within 1..100");
  }

  for (const auto& [name, action] : p.seccomp.rules) {
    if (!seccomp::known_syscall(name)) throw ValidationError("seccomp", "unknown syscall '" + name + "'");
    if (action.kind == seccomp::Action::Kind::kErrno && !seccomp::errno_name(action.errno_value)) {
      throw ValidationError("seccomp", "errno value outside the symbolic table");
    }
  }
  for (const auto& var : p.env_allow) {
    if (!is_env_name(var)) throw ValidationError("env_allow", "invalid variable name '" + var + "'");
  }
}

SandboxPolicy parse_policy(std::string_view text) { return Parser(text).run(); }

std::string serialize_policy(const SandboxPolicy& p) {
  using Lines = std::vector<std::pair<std::string, std::string>>;
  std::string out;

  Lines sandbox;
  sandbox.emplace_back("chroot", p.chroot_root);
  if (!p.hostname.empty()) sandbox.emplace_back("hostname", p.hostname);
  if (p.log_path) sandbox.emplace_back("log_path", *p.log_path);
  sandbox.emplace_back("name", p.name);
  sandbox.emplace_back("network_mode", std::string(to_string(p.network_mode)));
  emit_section(out, "sandbox", sandbox);

  Lines ns;
  for (auto n : kAllNamespaces) ns.emplace_back(std::string(to_string(n)), p.namespaces.contains(n) ? "true" : "false");
  emit_section(out, "namespaces", ns);

  Lines idmap;
  for (const auto& m : p.gid_map) idmap.emplace_back("gid", format_mapping(m));
  for (const auto& m : p.uid_map) idmap.emplace_back("uid", format_mapping(m));
  emit_section(out, "idmap", idmap);

  Lines mounts;
  for (const auto& m : p.mounts) {
    mounts.emplace_back("mount", std::string(to_string(m.kind)) + "," + m.source + "," + m.dest + "," +
                                     (m.read_only ? "ro" : "rw"));
  }
  emit_section(out, "mounts", mounts);

  // Group rules by action; std::map keeps both keys and names sorted.
  std::map<std::string, std::vector<std::string>> by_key;
  for (const auto& [name, action] : p.seccomp.rules) by_key[to_string(action)].push_back(name);
  by_key["default"];
  Lines sc;
  for (const auto& [key, names] : by_key) {
    if (key == "default") sc.emplace_back("default", to_string(p.seccomp.default_action));
    else sc.emplace_back(key, join(names, ","));
  }
  emit_section(out, "seccomp", sc);

  if (!p.capabilities.empty()) emit_section(out, "capabilities", {{"keep", join(p.capabilities, ",")}});

  Lines limits;
  if (p.limits.cpu_percent) limits.emplace_back("cpu_percent", std::to_string(*p.limits.cpu_percent));
  if (p.limits.memory_bytes) limits.emplace_back("memory_bytes", std::to_string(*p.limits.memory_bytes));
  if (p.limits.pids_max) limits.emplace_back("pids_max", std::to_string(*p.limits.pids_max));
  emit_section(out, "limits", limits);

  if (!p.env_allow.empty()) emit_section(out, "env", {{"allow", join(p.env_allow, ",")}});
  return out;
}

SandboxPolicy load_policy_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open policy file " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (looks_like_container(bytes)) bytes = decode_resilient(bytes).payload;
  return parse_policy(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

std::uint32_t jail_uid(const SandboxPolicy& p) { return p.uid_map.empty() ? 0 : p.uid_map.front().inside; }
std::uint32_t jail_gid(const SandboxPolicy& p) { return p.gid_map.empty() ? 0 : p.gid_map.front().inside; }

SandboxPolicy with_outside_ids(SandboxPolicy p, std::uint32_t uid, std::uint32_t gid) {
  if (p.uid_map.size() == 1 && p.uid_map.front().count == 1) p.uid_map.front().outside = uid;
  if (p.gid_map.size() == 1 && p.gid_map.front().count == 1) p.gid_map.front().outside = gid;
  return p;
}

}  // namespace orbitjail::policy
