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

#include "orbitjail/jailer.hpp"

#include <fcntl.h>
#include <sys/ptrace.h>
#include <sys/socket.h>
#include <sys/stat.h>
#include <sys/syscall.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <condition_variable>
#include <csignal>
#include <cstring>
#include <ctime>
#include <future>
#include <mutex>
#include <set>
#include <thread>

#include <json.hpp>

#include "jail_internal.hpp"

namespace orbitjail::jail {

using detail::ChildSpec;
using detail::Msg;
using detail::MsgType;

namespace {

unsigned long clone_flags(const policy::NamespaceSet& ns) {
  using policy::Namespace;
  unsigned long flags = 0;
  if (ns.contains(Namespace::kUser)) flags |= CLONE_NEWUSER;
  if (ns.contains(Namespace::kPid)) flags |= CLONE_NEWPID;
  if (ns.contains(Namespace::kMount)) flags |= CLONE_NEWNS;
  if (ns.contains(Namespace::kNet)) flags |= CLONE_NEWNET;
  if (ns.contains(Namespace::kIpc)) flags |= CLONE_NEWIPC;
  if (ns.contains(Namespace::kUts)) flags |= CLONE_NEWUTS;
  if (ns.contains(Namespace::kCgroup)) flags |= CLONE_NEWCGROUP;
  return flags;
}

pid_t raw_clone(unsigned long flags) {
  return static_cast<pid_t>(::syscall(SYS_clone, flags | SIGCHLD, nullptr, nullptr, nullptr, nullptr));
}

std::string format_ts(std::chrono::system_clock::time_point tp) {
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(tp.time_since_epoch()).count();
  const std::time_t secs = static_cast<std::time_t>(ms / 1000);
  std::tm tm{};
  ::gmtime_r(&secs, &tm);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900, tm.tm_mon + 1,
                tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec, static_cast<int>(ms % 1000));
  return buf;
}

void append_log(const std::optional<std::string>& path, const std::string& jail, const ViolationEvent& e) {
  if (!path) return;
  const std::string line = event_json(jail, e) + "\n";
  int fd = ::open(path->c_str(), O_WRONLY | O_APPEND | O_CREAT | O_CLOEXEC, 0644);
  if (fd < 0) return;
  // One write per record keeps concurrent jails from interleaving lines.
  (void)!::write(fd, line.data(), line.size());
  ::close(fd);
}

int mkdir_p(const std::string& path) {
  std::string cur;
  std::size_t pos = 1;
  while (pos <= path.size()) {
    const std::size_t next = path.find('/', pos);
    cur = path.substr(0, next);
    if (::mkdir(cur.c_str(), 0755) != 0 && errno != EEXIST) return errno;
    if (next == std::string::npos) break;
    pos = next + 1;
  }
  return 0;
}

std::string resolve_executable(const std::string& name) {
  if (name.find('/') != std::string::npos) return name;
  const char* path = std::getenv("PATH");
  std::string dirs = path ? path : "/usr/local/bin:/usr/bin:/bin";
  std::size_t start = 0;
  while (start <= dirs.size()) {
    std::size_t end = dirs.find(':', start);
    if (end == std::string::npos) end = dirs.size();
    const std::string candidate = dirs.substr(start, end - start) + "/" + name;
    if (::access(candidate.c_str(), X_OK) == 0) return candidate;
    start = end + 1;
  }
  return name;
}

std::string syscall_detail(std::uint32_t arch, std::uint32_t nr, pid_t tid) {
  std::string name = "?";
  for (auto a : seccomp::kAllArches) {
    if (seccomp::audit_arch(a) != arch) continue;
    if (auto n = seccomp::ArchTable::get(a).name(nr)) name = *n;
  }
  return name + " nr=" + std::to_string(nr) + " pid=" + std::to_string(tid);
}

pid_t thread_group_of(pid_t tid) {
  auto status = detail::read_file("/proc/" + std::to_string(tid) + "/status");
  if (!status) return tid;
  const auto pos = status->find("\nTgid:");
  if (pos == std::string::npos) return tid;
  return static_cast<pid_t>(std::strtol(status->c_str() + pos + 6, nullptr, 10));
}

std::atomic<unsigned> g_jail_counter{0};

}  // namespace

std::string_view to_string(Mode mode) { return mode == Mode::kEnforce ? "enforce" : "observe"; }

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::kSyscallDenied: return "syscall-denied";
    case EventKind::kSyscallLogged: return "syscall-logged";
    case EventKind::kLimitExceeded: return "limit-exceeded";
    case EventKind::kSetupFailure: return "setup-failure";
  }
  return "?";
}

std::string_view to_string(LimitEnforcement e) {
  switch (e) {
    case LimitEnforcement::kNone: return "none";
    case LimitEnforcement::kCgroup: return "cgroup";
    case LimitEnforcement::kRlimit: return "rlimit";
  }
  return "?";
}

std::size_t SupervisionRecord::count(EventKind kind) const {
  return static_cast<std::size_t>(
      std::count_if(events.begin(), events.end(), [kind](const ViolationEvent& e) { return e.kind == kind; }));
}

int SupervisionRecord::supervisor_exit_code() const {
  if (filter_killed) return kExitFilterKill;
  if (exited) return exit_code == 0 ? 0 : std::min(10 + exit_code, 255);
  return std::min(10 + 128 + term_signal, 255);
}

UnsupportedKernel::UnsupportedKernel(std::vector<std::string> missing)
    : Error([&] {
        std::string msg = "kernel cannot create namespaces:";
        for (const auto& m : missing) msg += " " + m;
        return msg;
      }()),
      missing_(std::move(missing)) {}

SetupFailure::SetupFailure(StepKind step, int os_error, const std::string& detail)
    : Error("setup step " + std::string(to_string(step)) + " failed: " +
            (os_error == detail::kInjectedErrno ? std::string("injected failure") : std::strerror(os_error)) +
            (detail.empty() ? "" : " (" + detail + ")")),
      step_(step),
      os_error_(os_error) {}

std::string event_json(const std::string& jail, const ViolationEvent& e) {
  nlohmann::ordered_json j;
  j["ts"] = format_ts(e.ts);
  j["jail"] = jail;
  j["kind"] = to_string(e.kind);
  j["detail"] = e.detail;
  return j.dump();
}

std::string record_json(const SupervisionRecord& r) {
  nlohmann::ordered_json j;
  j["jail"] = r.jail;
  j["child_pid"] = r.child;
  j["exited"] = r.exited;
  j["exit_code"] = r.exit_code;
  j["term_signal"] = r.term_signal;
  j["filter_killed"] = r.filter_killed;
  j["limits"] = to_string(r.limits);
  j["cpu_enforced"] = r.cpu_enforced;
  j["duration_ms"] = std::chrono::duration_cast<std::chrono::milliseconds>(r.stop - r.start).count();
  j["supervisor_exit"] = r.supervisor_exit_code();
  j["events"] = nlohmann::ordered_json::array();
  for (const auto& e : r.events) j["events"].push_back(nlohmann::ordered_json::parse(event_json(r.jail, e)));
  return j.dump();
}

std::vector<std::string> missing_kernel_features(const policy::NamespaceSet& namespaces) {
  std::vector<std::string> missing;
  const bool root = ::geteuid() == 0;
  auto works = [](unsigned long flags) {
    const pid_t pid = raw_clone(flags);
    if (pid == 0) _exit(0);
    if (pid < 0) return false;
    int st;
    while (::waitpid(pid, &st, __WALL) < 0 && errno == EINTR) {
    }
    return true;
  };
  const bool user_ok = works(CLONE_NEWUSER);
  for (auto ns : namespaces.names()) {
    const auto which = *policy::namespace_from_name(ns);
    policy::NamespaceSet one{which};
    unsigned long flags = clone_flags(one);
    if (which == policy::Namespace::kUser) {
      if (!user_ok) missing.emplace_back(ns);
      continue;
    }
    // Unprivileged callers only get the other namespaces through a user one.
    if (!root) {
      if (!user_ok) {
        missing.emplace_back(ns);
        continue;
      }
      flags |= CLONE_NEWUSER;
    }
    if (!works(flags)) missing.emplace_back(ns);
  }
  return missing;
}

struct JailHandle::State {
  std::mutex mu;
  std::condition_variable cv;
  bool finished = false;
  SupervisionRecord record;
  int pidfd = -1;
  std::thread thread;
  bool joined = false;

  void join() {
    std::lock_guard lock(join_mu);
    if (!joined && thread.joinable()) thread.join();
    joined = true;
  }

 private:
  std::mutex join_mu;
};

namespace {

struct Supervisor {
  std::shared_ptr<JailHandle::State> state;
  ChildSpec spec;
  LaunchPlan plan;
  LaunchOptions options;
  unsigned long flags = 0;
  std::string tag;
  std::promise<void> launched;
  bool launch_reported = false;
  pid_t pid = -1;
  std::unique_ptr<detail::Cgroup> cgroup;
  std::optional<SetupFailure> failure;

  void add_event(EventKind kind, std::string detail) {
    ViolationEvent e{std::chrono::system_clock::now(), kind, std::move(detail)};
    append_log(plan.log_path, plan.jail_name, e);
    std::lock_guard lock(state->mu);
    state->record.events.push_back(std::move(e));
  }

  void report_launched() {
    if (launch_reported) return;
    launch_reported = true;
    launched.set_value();
  }

  void report_failure(StepKind step, int err, const std::string& detail = {}) {
    failure.emplace(step, err, detail);
    add_event(EventKind::kSetupFailure, failure->what());
  }

  bool reply(MsgType type, int err = 0, std::uint8_t flags_out = 0) {
    Msg m{type, 0, flags_out, 0, err};
    return ::send(spec.parent_sock, &m, sizeof m, MSG_NOSIGNAL) == sizeof m;
  }

  std::string id_map_text(const std::vector<policy::IdMapping>& map, std::uint32_t self) {
    if (map.empty()) return "0 " + std::to_string(self) + " 1\n";
    std::string out;
    for (const auto& m : map) {
      out += std::to_string(m.inside) + " " + std::to_string(m.outside) + " " + std::to_string(m.count) + "\n";
    }
    return out;
  }

  // Returns errno, 0 on success.
  int write_id_maps(bool& setgroups_allowed) {
    const auto& maps = std::get<WriteIdMaps>(*plan.find(StepKind::kWriteIdMaps));
    const std::string proc = "/proc/" + std::to_string(pid);
    int err = 0;
    setgroups_allowed = ::geteuid() == 0;
    if (!setgroups_allowed && !detail::write_file(proc + "/setgroups", "deny", &err)) return err;
    if (!detail::write_file(proc + "/uid_map", id_map_text(maps.uid_map, ::geteuid()), &err)) return err;
    if (!detail::write_file(proc + "/gid_map", id_map_text(maps.gid_map, ::getegid()), &err)) return err;
    return 0;
  }

  // False once setup has failed.
  bool handshake() {
    while (true) {
      Msg m{};
      ssize_t n = ::recv(spec.parent_sock, &m, sizeof m, 0);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) return true;  // exec closed the socket, or the child died
      if (n != sizeof m) continue;
      const auto step = static_cast<StepKind>(m.step);
      switch (m.type) {
        case MsgType::kMapsRequest: {
          bool setgroups_allowed = false;
          int err = options.fail_step == StepKind::kWriteIdMaps ? detail::kInjectedErrno
                                                                 : write_id_maps(setgroups_allowed);
          if (err) {
            reply(MsgType::kReplyFail, err);
            report_failure(step, err);
            return false;
          }
          reply(MsgType::kReplyOk, 0, setgroups_allowed ? detail::kFlagSetgroupsAllowed : 0);
          break;
        }
        case MsgType::kCgroupRequest: {
          if (options.fail_step == StepKind::kApplyCgroups) {
            reply(MsgType::kReplyFail, detail::kInjectedErrno);
            report_failure(step, detail::kInjectedErrno);
            return false;
          }
          const auto& limits = std::get<ApplyCgroups>(*plan.find(StepKind::kApplyCgroups)).limits;
          try {
            cgroup = detail::Cgroup::create(tag, limits);
            cgroup->attach(pid);
            std::lock_guard lock(state->mu);
            state->record.limits = LimitEnforcement::kCgroup;
            state->record.cpu_enforced = limits.cpu_percent.has_value();
            reply(MsgType::kReplyOk);
          } catch (const CgroupUnavailable&) {
            cgroup.reset();
            {
              std::lock_guard lock(state->mu);
              state->record.limits = LimitEnforcement::kRlimit;
              state->record.cpu_enforced = false;
            }
            reply(MsgType::kReplyFallback);
          }
          break;
        }
        case MsgType::kTraceRequest: {
          const long opts = PTRACE_O_TRACESECCOMP | PTRACE_O_TRACEFORK | PTRACE_O_TRACEVFORK |
                            PTRACE_O_TRACECLONE | PTRACE_O_TRACEEXEC | PTRACE_O_EXITKILL;
          if (::ptrace(PTRACE_SEIZE, pid, nullptr, reinterpret_cast<void*>(opts)) != 0) {
            const int err = errno;
            reply(MsgType::kReplyFail, err);
            report_failure(step, err, "cannot trace the child");
            return false;
          }
          reply(MsgType::kReplyOk);
          return true;  // the trace loop takes over from here
        }
        case MsgType::kStepFailed:
          report_failure(step, m.err);
          return false;
        default:
          break;
      }
    }
  }

  // After the child died: a queued failure message means exec never happened.
  void drain_failure() {
    Msg m{};
    while (::recv(spec.parent_sock, &m, sizeof m, MSG_DONTWAIT) == sizeof m) {
      if (m.type == MsgType::kStepFailed && !failure) report_failure(static_cast<StepKind>(m.step), m.err);
    }
  }

  void record_exit(int status) {
    std::lock_guard lock(state->mu);
    auto& r = state->record;
    if (WIFEXITED(status)) {
      r.exited = true;
      r.exit_code = WEXITSTATUS(status);
    } else if (WIFSIGNALED(status)) {
      r.term_signal = WTERMSIG(status);
    }
  }

  void wait_enforce() {
    int status = 0;
    while (::waitpid(pid, &status, __WALL) < 0) {
      if (errno != EINTR) return;
    }
    record_exit(status);
    if (WIFSIGNALED(status) && WTERMSIG(status) == SIGSYS) {
      // The kernel does not say which call it was.
      {
        std::lock_guard lock(state->mu);
        state->record.filter_killed = true;
      }
      add_event(EventKind::kSyscallDenied, "unattributed filter kill");
    }
  }

  void on_seccomp_stop(pid_t tid) {
    unsigned long data = 0;
    ::ptrace(PTRACE_GETEVENTMSG, tid, nullptr, &data);
    __ptrace_syscall_info info{};
    std::string detail = "?";
    if (::ptrace(PTRACE_GET_SYSCALL_INFO, tid, sizeof info, &info) > 0 && info.op == PTRACE_SYSCALL_INFO_SECCOMP) {
      detail = syscall_detail(info.arch, static_cast<std::uint32_t>(info.seccomp.nr), tid);
    }
    if (data == seccomp::kTraceLog) {
      add_event(EventKind::kSyscallLogged, detail);
      ::ptrace(PTRACE_CONT, tid, nullptr, nullptr);
      return;
    }
    // Kill: the call never runs; the whole offending process goes.
    add_event(EventKind::kSyscallDenied, detail);
    if (thread_group_of(tid) == pid) {
      std::lock_guard lock(state->mu);
      state->record.filter_killed = true;
    }
    ::kill(tid, SIGKILL);
  }

  void trace_loop() {
    std::set<pid_t> tracees{pid};
    while (true) {
      int status = 0;
      const pid_t w = ::waitpid(-1, &status, __WALL | __WNOTHREAD);
      if (w < 0) {
        if (errno == EINTR) continue;
        break;
      }
      if (WIFEXITED(status) || WIFSIGNALED(status)) {
        tracees.erase(w);
        if (w == pid) {
          if (!launch_reported) drain_failure();
          record_exit(status);
          for (pid_t t : tracees) ::kill(t, SIGKILL);
        }
        continue;
      }
      if (!WIFSTOPPED(status)) continue;
      const int event = static_cast<unsigned>(status) >> 16;
      const int sig = WSTOPSIG(status);
      switch (event) {
        case PTRACE_EVENT_SECCOMP:
          on_seccomp_stop(w);
          break;
        case PTRACE_EVENT_FORK:
        case PTRACE_EVENT_VFORK:
        case PTRACE_EVENT_CLONE: {
          unsigned long child = 0;
          if (::ptrace(PTRACE_GETEVENTMSG, w, nullptr, &child) == 0) tracees.insert(static_cast<pid_t>(child));
          ::ptrace(PTRACE_CONT, w, nullptr, nullptr);
          break;
        }
        case PTRACE_EVENT_EXEC:
          if (w == pid) report_launched();
          ::ptrace(PTRACE_CONT, w, nullptr, nullptr);
          break;
        case 0:
          tracees.insert(w);
          ::ptrace(PTRACE_CONT, w, nullptr, reinterpret_cast<void*>(static_cast<long>(sig)));
          break;
        default:
          tracees.insert(w);
          ::ptrace(PTRACE_CONT, w, nullptr, nullptr);
          break;
      }
    }
  }

  void finish() {
    if (cgroup) {
      const auto* step = plan.find(StepKind::kApplyCgroups);
      const auto& limits = std::get<ApplyCgroups>(*step).limits;
      if (cgroup->oom_killed()) {
        add_event(EventKind::kLimitExceeded, "memory_bytes=" + std::to_string(*limits.memory_bytes) + " oom-kill");
      }
      if (cgroup->pids_limited()) {
        add_event(EventKind::kLimitExceeded, "pids_max=" + std::to_string(*limits.pids_max) + " reached");
      }
      cgroup->destroy();
    }
    ::close(spec.parent_sock);
    std::lock_guard lock(state->mu);
    state->record.stop = std::chrono::system_clock::now();
    if (state->pidfd >= 0) ::close(state->pidfd);
    state->pidfd = -1;
    state->finished = true;
    state->cv.notify_all();
  }

  void fail_launch() {
    launch_reported = true;
    launched.set_exception(std::make_exception_ptr(*failure));
  }

  void run() {
    {
      std::lock_guard lock(state->mu);
      state->record.start = std::chrono::system_clock::now();
    }
    if (options.fail_step == StepKind::kCreateNamespaces) {
      report_failure(StepKind::kCreateNamespaces, detail::kInjectedErrno);
    } else {
      pid = raw_clone(flags);
      if (pid == 0) detail::child_main(spec);
      if (pid < 0) report_failure(StepKind::kCreateNamespaces, errno);
    }
    ::close(spec.sock);
    ::close(spec.target_fd);
    if (pid < 0) {
      ::close(spec.parent_sock);
      fail_launch();
      return;
    }
    {
      std::lock_guard lock(state->mu);
      state->record.child = pid;
      state->pidfd = static_cast<int>(::syscall(SYS_pidfd_open, pid, 0));
    }

    const bool ok = handshake();
    if (!ok) {
      if (state->pidfd >= 0) ::syscall(SYS_pidfd_send_signal, state->pidfd, SIGKILL, nullptr, 0);
      int status;
      while (::waitpid(pid, &status, __WALL) < 0 && errno == EINTR) {
      }
      finish();
      fail_launch();
      return;
    }
    if (options.mode == Mode::kObserve) {
      trace_loop();
    } else {
      report_launched();
      wait_enforce();
    }
    if (failure) {
      finish();
      fail_launch();
      return;
    }
    report_launched();
    finish();
  }
};

void prepare_child(ChildSpec& spec, const LaunchPlan& plan, const LaunchOptions& options) {
  spec.fail_step = options.fail_step;
  spec.observe = options.mode == Mode::kObserve;
  spec.stdio[0] = options.stdin_fd;
  spec.stdio[1] = options.stdout_fd;
  spec.stdio[2] = options.stderr_fd;
  for (const auto& step : plan.steps) spec.steps.push_back(kind_of(step));
  spec.uid = plan.inside_uid;
  spec.gid = plan.inside_gid;

  if (const auto* root = plan.find(StepKind::kEnterRoot)) spec.root = std::get<EnterRoot>(*root).root;
  if (const auto* mounts = plan.find(StepKind::kApplyMounts)) {
    for (const auto& m : std::get<ApplyMounts>(*mounts).mounts) {
      detail::ChildMount cm{m.kind, m.source, spec.root + m.dest, m.read_only, {}};
      for (std::size_t pos = m.dest.find('/', 1); pos != std::string::npos; pos = m.dest.find('/', pos + 1)) {
        cm.parents.push_back(spec.root + m.dest.substr(0, pos));
      }
      spec.mounts.push_back(std::move(cm));
    }
  }
  if (const auto* h = plan.find(StepKind::kSetHostname)) spec.hostname = std::get<SetHostname>(*h).hostname;
  if (const auto* n = plan.find(StepKind::kConfigureNetwork)) spec.network = std::get<ConfigureNetwork>(*n).mode;
  if (const auto* c = plan.find(StepKind::kApplyCgroups)) spec.limits = std::get<ApplyCgroups>(*c).limits;
  for (const auto& cap : std::get<DropCapabilities>(*plan.find(StepKind::kDropCapabilities)).keep) {
    spec.keep_caps |= std::uint64_t{1} << *policy::capability_number(cap);
  }
  const auto& filter = std::get<InstallFilter>(*plan.find(StepKind::kInstallFilter));
  const auto mode = options.mode == Mode::kObserve ? seccomp::LoweringMode::kObserve : seccomp::LoweringMode::kEnforce;
  for (const auto& in : seccomp::lower_to_bpf(filter.program, mode)) spec.filter.push_back({in.code, in.jt, in.jf, in.k});

  const auto& exec = std::get<ExecTarget>(*plan.find(StepKind::kExecTarget));
  spec.argv_storage = exec.argv;
  for (const auto& name : exec.env) {
    if (const char* v = std::getenv(name.c_str())) spec.env_storage.push_back(name + "=" + v);
  }
  for (auto& s : spec.argv_storage) spec.argv.push_back(s.data());
  spec.argv.push_back(nullptr);
  for (auto& s : spec.env_storage) spec.envp.push_back(s.data());
  spec.envp.push_back(nullptr);
}

}  // namespace

JailHandle::JailHandle(std::shared_ptr<State> state) : state_(std::move(state)) {}
JailHandle::JailHandle(JailHandle&&) noexcept = default;
JailHandle& JailHandle::operator=(JailHandle&&) noexcept = default;

JailHandle::~JailHandle() {
  if (!state_) return;
  kill();
  state_->join();
}

pid_t JailHandle::pid() const {
  std::lock_guard lock(state_->mu);
  return state_->record.child;
}

bool JailHandle::done() const {
  std::lock_guard lock(state_->mu);
  return state_->finished;
}

const SupervisionRecord& JailHandle::wait() {
  {
    std::unique_lock lock(state_->mu);
    state_->cv.wait(lock, [this] { return state_->finished; });
  }
  state_->join();
  return state_->record;
}

std::optional<SupervisionRecord> JailHandle::wait_for(std::chrono::milliseconds timeout) {
  {
    std::unique_lock lock(state_->mu);
    if (!state_->cv.wait_for(lock, timeout, [this] { return state_->finished; })) return std::nullopt;
  }
  state_->join();
  return state_->record;
}

void JailHandle::kill() {
  std::lock_guard lock(state_->mu);
  if (!state_->finished && state_->pidfd >= 0) ::syscall(SYS_pidfd_send_signal, state_->pidfd, SIGKILL, nullptr, 0);
}

JailHandle execute(const LaunchPlan& plan, const LaunchOptions& options) {
  check_plan(plan);
  policy::NamespaceSet namespaces;
  if (const auto* create = plan.find(StepKind::kCreateNamespaces)) {
    namespaces = std::get<CreateNamespaces>(*create).namespaces;
  }
  if (auto missing = missing_kernel_features(namespaces); !missing.empty()) throw UnsupportedKernel(missing);

  auto sup = std::make_unique<Supervisor>();
  sup->state = std::make_shared<JailHandle::State>();
  sup->state->record.jail = plan.jail_name;
  sup->plan = plan;
  sup->options = options;
  sup->flags = clone_flags(namespaces);
  sup->tag = plan.jail_name + "-" + std::to_string(::getpid()) + "-" + std::to_string(g_jail_counter++);
  auto& spec = sup->spec;

  auto setup_error = [&](StepKind step, int err, const std::string& detail) {
    ViolationEvent e{std::chrono::system_clock::now(), EventKind::kSetupFailure,
                     SetupFailure(step, err, detail).what()};
    append_log(plan.log_path, plan.jail_name, e);
    return SetupFailure(step, err, detail);
  };

  const auto& exec = std::get<ExecTarget>(*plan.find(StepKind::kExecTarget));
  const std::string target = resolve_executable(exec.argv.front());
  spec.target_fd = ::open(target.c_str(), O_PATH | O_CLOEXEC);
  if (spec.target_fd < 0) throw setup_error(StepKind::kExecTarget, errno, target);

  if (const auto* root = plan.find(StepKind::kEnterRoot)) {
    const auto& dir = std::get<EnterRoot>(*root).root;
    if (int err = mkdir_p(dir)) {
      ::close(spec.target_fd);
      throw setup_error(StepKind::kEnterRoot, err, dir);
    }
  }
  int sv[2];
  if (::socketpair(AF_UNIX, SOCK_SEQPACKET | SOCK_CLOEXEC, 0, sv) != 0) {
    const int err = errno;
    ::close(spec.target_fd);
    throw setup_error(StepKind::kCreateNamespaces, err, "socketpair");
  }
  spec.parent_sock = sv[0];
  spec.sock = sv[1];
  prepare_child(spec, plan, options);

  auto future = sup->launched.get_future();
  auto state = sup->state;
  state->thread = std::thread([s = std::move(sup)]() mutable { s->run(); });
  try {
    future.get();
  } catch (...) {
    state->join();
    throw;
  }
  return JailHandle(state);
}

SupervisionRecord run(const LaunchPlan& plan, const LaunchOptions& options) {
  auto handle = execute(plan, options);
  return handle.wait();
}

std::vector<std::string> split_command_line(std::string_view line) {
  std::vector<std::string> words;
  std::string cur;
  bool in_word = false;
  char quote = 0;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quote) {
      if (c == quote) {
        quote = 0;
      } else if (c == '\\' && quote == '"' && i + 1 < line.size()) {
        cur += line[++i];
      } else {
        cur += c;
      }
    } else if (c == '\'' || c == '"') {
      quote = c;
      in_word = true;
    } else if (c == '\\' && i + 1 < line.size()) {
      cur += line[++i];
      in_word = true;
    } else if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
      if (in_word) words.push_back(std::move(cur));
      cur.clear();
      in_word = false;
    } else {
      cur += c;
      in_word = true;
    }
  }
  if (quote) throw Error("unterminated quote in command line");
  if (in_word) words.push_back(std::move(cur));
  return words;
}

SupervisionRecord spawn_per_command(const policy::SandboxPolicy& policy, std::string_view command_line,
                                    const LaunchOptions& options) {
  return run(build_plan(policy, split_command_line(command_line)), options);
}

}  // namespace orbitjail::jail
