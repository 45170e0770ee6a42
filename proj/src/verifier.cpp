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

#include "orbitjail/verifier.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <sys/stat.h>
#include <sys/statvfs.h>
#include <sys/syscall.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <ctime>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace orbitjail::verify {

namespace {

using nlohmann::json;

// Calls that are harmless to attempt with bogus arguments, tried in order
// when looking for one the policy kills.
constexpr std::string_view kProbeSyscalls[] = {
    "personality", "acct",   "swapoff", "swapon",     "delete_module", "init_module", "finit_module",
    "kexec_load",  "reboot", "ptrace",  "execve",     "socket",        "mount",       "umount2",
    "sethostname", "chroot", "pivot_root", "setns",   "unshare",       "bpf",         "perf_event_open",
};

std::string errno_text(int err) {
  if (auto n = seccomp::errno_name(err)) return std::string(*n);
  return std::to_string(err);
}

CheckResult check(std::string name, std::string expected, std::string observed, bool ok) {
  return CheckResult{std::move(name), std::move(expected), std::move(observed), ok ? Verdict::kPass : Verdict::kFail,
                     {}};
}

std::optional<std::string> read_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) return std::nullopt;
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string trim(std::string s) {
  while (!s.empty() && (s.back() == '\n' || s.back() == ' ')) s.pop_back();
  std::string out;
  bool space = false;
  for (char c : s) {
    if (c == ' ' || c == '\t') {
      space = true;
      continue;
    }
    if (space && !out.empty()) out += ' ';
    space = false;
    out += c;
  }
  return out;
}

CheckResult uid_probe(std::uint32_t expected) {
  const uid_t uid = ::getuid();
  // Uid 0 means nothing on its own: it must be a mapped identity.
  const auto map = read_text("/proc/self/uid_map");
  std::string observed = "uid=" + std::to_string(uid);
  bool remapped = true;
  if (map) {
    const std::string m = trim(*map);
    observed += " uid_map=\"" + m + "\"";
    remapped = m != "0 0 4294967295";
  } else {
    observed += " uid_map=unreadable";
  }
  return check("uid-probe", "uid=" + std::to_string(expected) + " with a non-identity uid map", observed,
               uid == expected && remapped);
}

CheckResult pid_probe() {
  const pid_t pid = ::getpid();
  return check("pid-probe", "pid=1", "pid=" + std::to_string(pid), pid == 1);
}

CheckResult hostname_probe(const std::string& expected) {
  char host[256] = {};
  ::gethostname(host, sizeof host - 1);
  return check("hostname-probe", expected, host, expected == host);
}

CheckResult fs_read_probe(const std::vector<std::string>& paths) {
  std::string bad;
  for (const auto& p : paths) {
    if (::access(p.c_str(), R_OK) != 0) bad += (bad.empty() ? "" : ",") + p + ":" + errno_text(errno);
  }
  std::string expected;
  for (const auto& p : paths) expected += (expected.empty() ? "" : ",") + p;
  return check("fs-read-probe", "readable " + expected, bad.empty() ? "all readable" : "unreadable " + bad,
               bad.empty());
}

CheckResult fs_escape_probe(const std::string& path) {
  struct stat st;
  const bool visible = ::stat(path.c_str(), &st) == 0;
  return check("fs-escape-probe", path + " absent", visible ? path + " present" : path + " " + errno_text(errno),
               !visible);
}

CheckResult ro_probe(const std::vector<std::string>& paths) {
  std::string observed;
  bool ok = true;
  for (const auto& p : paths) {
    // Creating a file is the write attempt; the read-only check on the mount
    // comes before any permission check, so EROFS is unambiguous.
    const std::string scratch = p + (p == "/" ? "" : "/") + ".orbitjail-ro-probe-" + std::to_string(::getpid());
    const int fd = ::open(scratch.c_str(), O_WRONLY | O_CREAT | O_EXCL | O_CLOEXEC, 0600);
    const int err = fd < 0 ? errno : 0;
    if (fd >= 0) {
      ::close(fd);
      ::unlink(scratch.c_str());
    }
    // Pseudo filesystems such as proc refuse creation before the mount
    // check; there the mount flag is the evidence.
    struct statvfs vfs;
    const bool flagged = ::statvfs(p.c_str(), &vfs) == 0 && (vfs.f_flag & ST_RDONLY);
    observed += (observed.empty() ? "" : ",") + p + ":" + (fd >= 0 ? "writable" : errno_text(err));
    if (fd < 0 && err != EROFS) observed += flagged ? "+ro-mount" : "+rw-mount";
    ok = ok && fd < 0 && (err == EROFS || flagged);
  }
  std::string expected;
  for (const auto& p : paths) expected += (expected.empty() ? "" : ",") + p + ":EROFS";
  return check("ro-probe", expected, observed, ok);
}

// errno of a non-blocking connect, 0 on success or in progress.
int try_connect(const char* ip, std::uint16_t port) {
  int fd = ::socket(AF_INET, SOCK_STREAM | SOCK_NONBLOCK | SOCK_CLOEXEC, 0);
  if (fd < 0) return errno;
  sockaddr_in sa{};
  sa.sin_family = AF_INET;
  sa.sin_port = htons(port);
  ::inet_pton(AF_INET, ip, &sa.sin_addr);
  int err = 0;
  if (::connect(fd, reinterpret_cast<sockaddr*>(&sa), sizeof sa) != 0 && errno != EINPROGRESS) err = errno;
  ::close(fd);
  return err;
}

CheckResult net_probe(policy::NetworkMode mode) {
  // TEST-NET-1 is never routed; without any route the connect fails at once.
  const int outbound = try_connect("192.0.2.1", 9);
  std::string observed = "outbound:" + (outbound ? errno_text(outbound) : std::string("connecting"));
  bool ok = outbound == ENETUNREACH;
  std::string expected = "outbound:ENETUNREACH";
  if (mode == policy::NetworkMode::kLoopbackOnly) {
    expected += " loopback:connected";
    int lfd = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
    sockaddr_in sa{};
    sa.sin_family = AF_INET;
    sa.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    socklen_t len = sizeof sa;
    bool loop_ok = lfd >= 0 && ::bind(lfd, reinterpret_cast<sockaddr*>(&sa), sizeof sa) == 0 && ::listen(lfd, 1) == 0 &&
                   ::getsockname(lfd, reinterpret_cast<sockaddr*>(&sa), &len) == 0;
    int cerr = EBADF;
    if (loop_ok) {
      int cfd = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
      cerr = ::connect(cfd, reinterpret_cast<sockaddr*>(&sa), sizeof sa) == 0 ? 0 : errno;
      ::close(cfd);
    }
    if (lfd >= 0) ::close(lfd);
    observed += " loopback:" + (cerr == 0 ? std::string("connected") : errno_text(cerr));
    ok = ok && cerr == 0;
  }
  return check("net-probe", expected, observed, ok);
}

CheckResult syscall_probe(const std::string& name) {
  const auto arch = seccomp::native_arch();
  const auto nr = arch ? seccomp::ArchTable::get(*arch).number(name) : std::nullopt;
  if (!nr) throw ProbeHarnessFailure("no syscall number for " + name + " on this architecture");
  // A sacrificial child makes the call so a kill does not take the prober.
  const pid_t pid = ::fork();
  if (pid < 0) throw ProbeHarnessFailure(std::string("fork: ") + std::strerror(errno));
  if (pid == 0) {
    if (name == "personality") {
      ::syscall(static_cast<long>(*nr), 0xffffffffL);
    } else {
      ::syscall(static_cast<long>(*nr), -1L, -1L, -1L, -1L, -1L, -1L);
    }
    _exit(0);
  }
  int status = 0;
  while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
  }
  std::string observed;
  bool killed = false;
  if (WIFSIGNALED(status)) {
    observed = "child killed by signal " + std::to_string(WTERMSIG(status));
    killed = WTERMSIG(status) == SIGSYS || WTERMSIG(status) == SIGKILL;
  } else {
    observed = "child exited " + std::to_string(WEXITSTATUS(status));
  }
  observed += ", prober alive";
  return check("syscall-probe", name + " kills the calling child, prober survives", observed, killed);
}

CheckResult cap_probe() {
  char host[256] = {};
  ::gethostname(host, sizeof host - 1);
  // Setting the current name again changes nothing even when it succeeds.
  const int r = ::sethostname(host, std::strlen(host));
  const int err = r == 0 ? 0 : errno;
  return check("cap-probe", "sethostname:EPERM", "sethostname:" + (r == 0 ? std::string("allowed") : errno_text(err)),
               r != 0 && err == EPERM);
}

std::string now_iso() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  ::gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

Expectations expectations_from(const policy::SandboxPolicy& p, const std::string& escape_path) {
  using policy::Namespace;
  Expectations e;
  e.policy_name = p.name;
  if (p.namespaces.contains(Namespace::kUser)) e.uid = policy::jail_uid(p);
  e.pid_namespace = p.namespaces.contains(Namespace::kPid);
  if (!p.hostname.empty()) e.hostname = p.hostname;
  for (const auto& m : p.mounts) {
    e.readable.push_back(m.dest);
    if (m.read_only) e.read_only.push_back(m.dest);
  }
  if (p.chroot_root != "/") e.escape_path = escape_path;
  if (p.network_mode != policy::NetworkMode::kPassthrough) e.network = p.network_mode;
  for (auto name : kProbeSyscalls) {
    auto it = p.seccomp.rules.find(name);
    const auto action = it == p.seccomp.rules.end() ? p.seccomp.default_action : it->second;
    const auto arch = seccomp::native_arch();
    if (action == seccomp::Action::kill() && arch && seccomp::ArchTable::get(*arch).number(name)) {
      e.denied_syscall = std::string(name);
      break;
    }
  }
  e.hostname_change_denied = !p.capabilities.count("CAP_SYS_ADMIN");
  return e;
}

std::string expectations_json(const Expectations& e) {
  json j;
  j["policy"] = e.policy_name;
  if (e.uid) j["uid"] = *e.uid;
  j["pid_namespace"] = e.pid_namespace;
  if (e.hostname) j["hostname"] = *e.hostname;
  j["readable"] = e.readable;
  j["read_only"] = e.read_only;
  if (e.escape_path) j["escape_path"] = *e.escape_path;
  if (e.network) j["network"] = std::string(policy::to_string(*e.network));
  if (e.denied_syscall) j["denied_syscall"] = *e.denied_syscall;
  j["hostname_change_denied"] = e.hostname_change_denied;
  return j.dump();
}

Expectations expectations_from_json(const std::string& text) {
  Expectations e;
  try {
    const json j = json::parse(text);
    e.policy_name = j.at("policy").get<std::string>();
    if (j.contains("uid")) e.uid = j["uid"].get<std::uint32_t>();
    e.pid_namespace = j.at("pid_namespace").get<bool>();
    if (j.contains("hostname")) e.hostname = j["hostname"].get<std::string>();
    e.readable = j.at("readable").get<std::vector<std::string>>();
    e.read_only = j.at("read_only").get<std::vector<std::string>>();
    if (j.contains("escape_path")) e.escape_path = j["escape_path"].get<std::string>();
    if (j.contains("network")) {
      const auto mode = j["network"].get<std::string>();
      e.network = mode == "isolated" ? policy::NetworkMode::kIsolated : policy::NetworkMode::kLoopbackOnly;
    }
    if (j.contains("denied_syscall")) e.denied_syscall = j["denied_syscall"].get<std::string>();
    e.hostname_change_denied = j.at("hostname_change_denied").get<bool>();
  } catch (const json::exception& ex) {
    throw ProbeHarnessFailure(std::string("bad expectations: ") + ex.what());
  }
  return e;
}

std::vector<std::string> declared_checks(const Expectations& e) {
  std::vector<std::string> out;
  if (e.uid) out.emplace_back("uid-probe");
  if (e.pid_namespace) out.emplace_back("pid-probe");
  if (e.hostname) out.emplace_back("hostname-probe");
  if (!e.readable.empty()) out.emplace_back("fs-read-probe");
  if (e.escape_path) out.emplace_back("fs-escape-probe");
  if (!e.read_only.empty()) out.emplace_back("ro-probe");
  if (e.network) out.emplace_back("net-probe");
  if (e.denied_syscall) out.emplace_back("syscall-probe");
  if (e.hostname_change_denied) out.emplace_back("cap-probe");
  return out;
}

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::kPass: return "pass";
    case Verdict::kFail: return "fail";
    case Verdict::kSkipped: return "skipped";
  }
  return "?";
}

int IsolationReport::exit_code() const {
  bool skipped = false;
  for (const auto& c : checks) {
    if (c.verdict == Verdict::kFail) return 1;
    skipped = skipped || c.verdict == Verdict::kSkipped;
  }
  return skipped ? 3 : 0;
}

std::string IsolationReport::json() const {
  nlohmann::ordered_json j;
  j["policy"] = policy;
  j["timestamp"] = timestamp;
  j["checks"] = nlohmann::ordered_json::array();
  std::size_t pass = 0, fail = 0, skip = 0;
  for (const auto& c : checks) {
    nlohmann::ordered_json cj;
    cj["name"] = c.name;
    cj["expected"] = c.expected;
    cj["observed"] = c.observed;
    cj["verdict"] = to_string(c.verdict);
    if (c.verdict == Verdict::kSkipped) cj["reason"] = c.reason;
    j["checks"].push_back(cj);
    pass += c.verdict == Verdict::kPass;
    fail += c.verdict == Verdict::kFail;
    skip += c.verdict == Verdict::kSkipped;
  }
  j["summary"] = {{"pass", pass}, {"fail", fail}, {"skipped", skip}};
  return j.dump();
}

IsolationReport run_probes(const Expectations& e) {
  IsolationReport r{e.policy_name, now_iso(), {}};
  for (const auto& name : declared_checks(e)) {
    if (name == "uid-probe") r.checks.push_back(uid_probe(*e.uid));
    if (name == "pid-probe") r.checks.push_back(pid_probe());
    if (name == "hostname-probe") r.checks.push_back(hostname_probe(*e.hostname));
    if (name == "fs-read-probe") r.checks.push_back(fs_read_probe(e.readable));
    if (name == "fs-escape-probe") r.checks.push_back(fs_escape_probe(*e.escape_path));
    if (name == "ro-probe") r.checks.push_back(ro_probe(e.read_only));
    if (name == "net-probe") r.checks.push_back(net_probe(*e.network));
    if (name == "syscall-probe") r.checks.push_back(syscall_probe(*e.denied_syscall));
    if (name == "cap-probe") r.checks.push_back(cap_probe());
  }
  return r;
}

IsolationReport skipped_report(const Expectations& e, const std::string& reason) {
  IsolationReport r{e.policy_name, now_iso(), {}};
  for (const auto& name : declared_checks(e)) r.checks.push_back(CheckResult{name, "", "not run", Verdict::kSkipped, reason});
  return r;
}

}  // namespace orbitjail::verify
