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

// Child side of a launch. Runs between clone and exec in a copy of a
// multi-threaded process: raw syscalls only, no allocation, no locks.

#include <fcntl.h>
#include <linux/capability.h>
#include <linux/securebits.h>
#include <linux/seccomp.h>
#include <net/if.h>
#include <netinet/in.h>
#include <sys/ioctl.h>
#include <sys/mount.h>
#include <sys/prctl.h>
#include <sys/resource.h>
#include <sys/socket.h>
#include <sys/stat.h>
#include <sys/statvfs.h>
#include <sys/syscall.h>
#include <unistd.h>

#include <cerrno>
#include <csignal>
#include <cstring>

#include "jail_internal.hpp"

namespace orbitjail::jail::detail {
namespace {

[[noreturn]] void fail(const ChildSpec& spec, StepKind step, int err) {
  Msg m{MsgType::kStepFailed, static_cast<std::uint8_t>(step), 0, 0, err};
  (void)!::send(spec.sock, &m, sizeof m, MSG_NOSIGNAL);
  _exit(kChildSetupExit);
}

// Sends a request and waits for the reply. Returns the reply.
Msg request(const ChildSpec& spec, MsgType type, StepKind step) {
  Msg m{type, static_cast<std::uint8_t>(step), 0, 0, 0};
  if (::send(spec.sock, &m, sizeof m, MSG_NOSIGNAL) != sizeof m) _exit(kChildSetupExit);
  Msg reply{};
  ssize_t n;
  do {
    n = ::recv(spec.sock, &reply, sizeof reply, 0);
  } while (n < 0 && errno == EINTR);
  // Supervisor gone: nothing may run unsupervised.
  if (n != sizeof reply) _exit(kChildSetupExit);
  return reply;
}

int mkdir_if_missing(const char* path) {
  if (::mkdir(path, 0755) == 0 || errno == EEXIST) return 0;
  return errno;
}

unsigned long locked_flags(const char* path) {
  struct statvfs st;
  if (::statvfs(path, &st) != 0) return 0;
  unsigned long flags = 0;
  if (st.f_flag & ST_NOSUID) flags |= MS_NOSUID;
  if (st.f_flag & ST_NODEV) flags |= MS_NODEV;
  if (st.f_flag & ST_NOEXEC) flags |= MS_NOEXEC;
  if (st.f_flag & ST_NOATIME) flags |= MS_NOATIME;
  if (st.f_flag & ST_NODIRATIME) flags |= MS_NODIRATIME;
  if (st.f_flag & ST_RELATIME) flags |= MS_RELATIME;
  return flags;
}

int prepare_root(const ChildSpec& spec, bool& done) {
  if (done) return 0;
  done = true;
  if (::mount(nullptr, "/", nullptr, MS_REC | MS_PRIVATE, nullptr) != 0) return errno;
  if (spec.root.empty()) return 0;
  if (::mount("tmpfs", spec.root.c_str(), "tmpfs", MS_NOSUID | MS_NODEV, "mode=0755") != 0) return errno;
  return 0;
}

int apply_mount(const ChildMount& m) {
  for (const auto& dir : m.parents) {
    if (int e = mkdir_if_missing(dir.c_str())) return e;
  }
  const char* target = m.target.c_str();
  switch (m.kind) {
    case policy::MountKind::kBind: {
      struct stat st;
      if (::stat(m.source.c_str(), &st) != 0) return errno;
      if (S_ISDIR(st.st_mode)) {
        if (int e = mkdir_if_missing(target)) return e;
      } else {
        int fd = ::open(target, O_WRONLY | O_CREAT | O_CLOEXEC, 0644);
        if (fd < 0 && errno != EEXIST) return errno;
        if (fd >= 0) ::close(fd);
      }
      if (::mount(m.source.c_str(), target, nullptr, MS_BIND | MS_REC, nullptr) != 0) return errno;
      if (m.read_only) {
        const unsigned long flags = MS_REMOUNT | MS_BIND | MS_RDONLY | locked_flags(target);
        if (::mount(nullptr, target, nullptr, flags, nullptr) != 0) return errno;
      }
      return 0;
    }
    case policy::MountKind::kTmpfs: {
      if (int e = mkdir_if_missing(target)) return e;
      const unsigned long flags = MS_NOSUID | MS_NODEV | (m.read_only ? MS_RDONLY : 0);
      if (::mount("tmpfs", target, "tmpfs", flags, "mode=1777") != 0) return errno;
      return 0;
    }
    case policy::MountKind::kProc: {
      if (int e = mkdir_if_missing(target)) return e;
      const unsigned long flags = MS_NOSUID | MS_NODEV | MS_NOEXEC | (m.read_only ? MS_RDONLY : 0);
      if (::mount("proc", target, "proc", flags, nullptr) != 0) return errno;
      return 0;
    }
  }
  return EINVAL;
}

int enter_root(const ChildSpec& spec) {
  if (::chdir(spec.root.c_str()) != 0) return errno;
  if (::syscall(SYS_pivot_root, ".", ".") != 0) return errno;
  if (::umount2(".", MNT_DETACH) != 0) return errno;
  if (::chdir("/") != 0) return errno;
  if (::mount(nullptr, "/", nullptr, MS_REMOUNT | MS_BIND | MS_RDONLY | MS_NOSUID | MS_NODEV, nullptr) != 0) {
    return errno;
  }
  return 0;
}

int switch_ids(const ChildSpec& spec, bool setgroups_allowed) {
  // Keep the namespace capabilities across the uid change; they are dropped
  // explicitly later.
  if (::prctl(PR_SET_SECUREBITS, SECBIT_NO_SETUID_FIXUP, 0, 0, 0) != 0) return errno;
  if (setgroups_allowed && ::syscall(SYS_setgroups, 0, nullptr) != 0) return errno;
  if (::syscall(SYS_setresgid, spec.gid, spec.gid, spec.gid) != 0) return errno;
  if (::syscall(SYS_setresuid, spec.uid, spec.uid, spec.uid) != 0) return errno;
  // A credential change clears both of these.
  ::prctl(PR_SET_PDEATHSIG, SIGKILL, 0, 0, 0);
  ::prctl(PR_SET_DUMPABLE, 1, 0, 0, 0);
  return 0;
}

int configure_network(const ChildSpec& spec) {
  if (spec.network != policy::NetworkMode::kLoopbackOnly) return 0;
  int s = ::socket(AF_INET, SOCK_DGRAM | SOCK_CLOEXEC, 0);
  if (s < 0) return errno;
  struct ifreq ifr;
  std::memset(&ifr, 0, sizeof ifr);
  std::memcpy(ifr.ifr_name, "lo", 3);
  int err = 0;
  if (::ioctl(s, SIOCGIFFLAGS, &ifr) != 0) {
    err = errno;
  } else {
    ifr.ifr_flags |= IFF_UP | IFF_RUNNING;
    if (::ioctl(s, SIOCSIFFLAGS, &ifr) != 0) err = errno;
  }
  ::close(s);
  return err;
}

int drop_capabilities(const ChildSpec& spec) {
  __user_cap_header_struct hdr{_LINUX_CAPABILITY_VERSION_3, 0};
  __user_cap_data_struct data[2]{};
  if (::syscall(SYS_capget, &hdr, data) != 0) return errno;
  const std::uint64_t permitted = data[0].permitted | (std::uint64_t{data[1].permitted} << 32);

  if (permitted != 0) {
    const unsigned long bits = SECBIT_NOROOT | SECBIT_NOROOT_LOCKED | SECBIT_NO_SETUID_FIXUP |
                               SECBIT_NO_SETUID_FIXUP_LOCKED | SECBIT_KEEP_CAPS_LOCKED;
    if (::prctl(PR_SET_SECUREBITS, bits, 0, 0, 0) != 0) return errno;
    for (int cap = 0; cap < 64; ++cap) {
      if (spec.keep_caps & (std::uint64_t{1} << cap)) continue;
      if (::prctl(PR_CAPBSET_DROP, cap, 0, 0, 0) != 0 && errno != EINVAL) return errno;
    }
  }
  const std::uint64_t keep = spec.keep_caps & permitted;
  for (int i = 0; i < 2; ++i) {
    const auto word = static_cast<std::uint32_t>(keep >> (32 * i));
    data[i].effective = data[i].permitted = data[i].inheritable = word;
  }
  if (::syscall(SYS_capset, &hdr, data) != 0) return errno;
  ::prctl(PR_CAP_AMBIENT, PR_CAP_AMBIENT_CLEAR_ALL, 0, 0, 0);
  for (int cap = 0; cap < 64; ++cap) {
    if (!(keep & (std::uint64_t{1} << cap))) continue;
    if (::prctl(PR_CAP_AMBIENT, PR_CAP_AMBIENT_RAISE, cap, 0, 0) != 0) return errno;
  }
  if (::prctl(PR_SET_NO_NEW_PRIVS, 1, 0, 0, 0) != 0) return errno;
  return 0;
}

int apply_rlimits(const ChildSpec& spec) {
  if (spec.limits.memory_bytes) {
    struct rlimit rl{*spec.limits.memory_bytes, *spec.limits.memory_bytes};
    if (::setrlimit(RLIMIT_AS, &rl) != 0) return errno;
  }
  if (spec.limits.pids_max) {
    struct rlimit rl{*spec.limits.pids_max, *spec.limits.pids_max};
    if (::setrlimit(RLIMIT_NPROC, &rl) != 0) return errno;
  }
  return 0;
}

// Moves the stdio sources onto 0-2 and marks everything else close-on-exec.
int prepare_exec_fds(const ChildSpec& spec) {
  int moved[3];
  for (int i = 0; i < 3; ++i) {
    moved[i] = ::fcntl(spec.stdio[i], F_DUPFD_CLOEXEC, 10);
    if (moved[i] < 0) return errno;
  }
  for (int i = 0; i < 3; ++i) {
    if (::dup2(moved[i], i) < 0) return errno;
    ::close(moved[i]);
  }
  if (::syscall(SYS_close_range, 3u, ~0u, CLOSE_RANGE_CLOEXEC) != 0) return errno;
  return 0;
}

int install_filter(const ChildSpec& spec) {
  if (::prctl(PR_SET_NO_NEW_PRIVS, 1, 0, 0, 0) != 0) return errno;
  sock_fprog prog{static_cast<unsigned short>(spec.filter.size()), const_cast<sock_filter*>(spec.filter.data())};
  if (::syscall(SYS_seccomp, SECCOMP_SET_MODE_FILTER, 0, &prog) != 0) return errno;
  return 0;
}

void reset_signals() {
  struct sigaction sa;
  std::memset(&sa, 0, sizeof sa);
  sa.sa_handler = SIG_DFL;
  for (int sig = 1; sig < NSIG; ++sig) {
    if (sig == SIGKILL || sig == SIGSTOP) continue;
    ::sigaction(sig, &sa, nullptr);
  }
  sigset_t none;
  sigemptyset(&none);
  ::sigprocmask(SIG_SETMASK, &none, nullptr);
}

// Closes every descriptor the child does not need, so other jails' handshake
// sockets are not held open by this one.
void close_unneeded(const ChildSpec& spec) {
  int keep[6] = {spec.sock, spec.target_fd, spec.stdio[0], spec.stdio[1], spec.stdio[2], -1};
  int n = 5;
  // Insertion sort; tiny array.
  for (int i = 1; i < n; ++i) {
    for (int j = i; j > 0 && keep[j - 1] > keep[j]; --j) std::swap(keep[j - 1], keep[j]);
  }
  unsigned lo = 3;
  for (int i = 0; i < n; ++i) {
    if (keep[i] < static_cast<int>(lo)) continue;
    if (static_cast<unsigned>(keep[i]) > lo) ::syscall(SYS_close_range, lo, static_cast<unsigned>(keep[i]) - 1, 0);
    lo = static_cast<unsigned>(keep[i]) + 1;
  }
  ::syscall(SYS_close_range, lo, ~0u, 0);
}

}  // namespace

void child_main(const ChildSpec& spec) {
  ::prctl(PR_SET_PDEATHSIG, SIGKILL, 0, 0, 0);
  ::close(spec.parent_sock);
  close_unneeded(spec);
  reset_signals();

  bool root_ready = false;
  for (StepKind step : spec.steps) {
    if (spec.fail_step == step) fail(spec, step, kInjectedErrno);
    int err = 0;
    switch (step) {
      case StepKind::kCreateNamespaces:
        break;  // done by clone
      case StepKind::kWriteIdMaps: {
        Msg reply = request(spec, MsgType::kMapsRequest, step);
        if (reply.type != MsgType::kReplyOk) _exit(kChildSetupExit);
        err = switch_ids(spec, reply.flags & kFlagSetgroupsAllowed);
        break;
      }
      case StepKind::kApplyMounts:
        err = prepare_root(spec, root_ready);
        for (const auto& m : spec.mounts) {
          if (err) break;
          err = apply_mount(m);
        }
        break;
      case StepKind::kEnterRoot:
        err = prepare_root(spec, root_ready);
        if (!err) err = enter_root(spec);
        break;
      case StepKind::kSetHostname:
        if (::sethostname(spec.hostname.data(), spec.hostname.size()) != 0) err = errno;
        break;
      case StepKind::kApplyCgroups: {
        Msg reply = request(spec, MsgType::kCgroupRequest, step);
        if (reply.type == MsgType::kReplyFallback) err = apply_rlimits(spec);
        else if (reply.type != MsgType::kReplyOk) _exit(kChildSetupExit);
        break;
      }
      case StepKind::kConfigureNetwork:
        err = configure_network(spec);
        break;
      case StepKind::kDropCapabilities:
        err = drop_capabilities(spec);
        break;
      case StepKind::kInstallFilter:
        err = prepare_exec_fds(spec);
        if (!err && spec.observe) {
          Msg reply = request(spec, MsgType::kTraceRequest, step);
          if (reply.type != MsgType::kReplyOk) _exit(kChildSetupExit);
        }
        if (!err) err = install_filter(spec);
        break;
      case StepKind::kExecTarget:
        ::syscall(SYS_execveat, spec.target_fd, "", spec.argv.data(), spec.envp.data(), AT_EMPTY_PATH);
        err = errno;
        break;
    }
    if (err) fail(spec, step, err);
  }
  _exit(kChildSetupExit);
}

}  // namespace orbitjail::jail::detail
