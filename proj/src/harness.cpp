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

#include "orbitjail/harness.hpp"

#include <fcntl.h>
#include <poll.h>
#include <sys/prctl.h>
#include <sys/stat.h>
#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <csignal>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <thread>

#include <json.hpp>

#include "orbitjail/broker.hpp"
#include "orbitjail/node.hpp"

namespace orbitjail::harness {

using namespace std::chrono_literals;

namespace {

constexpr std::string_view kTelemetry =
    R"({"mode":"nominal","battery_mv":7412,"bus_ma":318,"obc_temp_c":21})";

std::atomic<unsigned> g_scenario_counter{0};

}  // namespace

std::optional<CommandMessage> parse_command(const std::string& payload) {
  const auto space = payload.find(' ');
  const std::string verb = payload.substr(0, space);
  const std::string args = space == std::string::npos ? std::string() : payload.substr(space + 1);
  if (verb == "PING") return CommandMessage{Verb::kPing, args};
  if (verb == "GET_TELEMETRY") return CommandMessage{Verb::kGetTelemetry, args};
  if (verb == "SET_PARAM") return CommandMessage{Verb::kSetParam, args};
  if (verb == "RAW") return CommandMessage{Verb::kRaw, args};
  return std::nullopt;
}

std::string CommandParser::handle(const std::string& payload) {
  const auto cmd = parse_command(payload);
  if (!cmd) return "ERR unknown verb";
#if ORBITJAIL_VULNERABLE_NODE
  // The injected flaw: arguments starting with the magic sequence are run
  // as a host shell command.
  if (vulnerable_ && cmd->args.rfind(kExecMagic, 0) == 0) return run_shell(cmd->args.substr(kExecMagic.size()));
#endif
  switch (cmd->verb) {
    case Verb::kPing:
      return "PONG";
    case Verb::kGetTelemetry:
      return std::string(kTelemetry);
    case Verb::kSetParam: {
      const auto space = cmd->args.find(' ');
      if (cmd->args.empty() || space == 0 || space == std::string::npos) return "ERR SET_PARAM needs name and value";
      const std::string name = cmd->args.substr(0, space);
      const std::string value = cmd->args.substr(space + 1);
      for (auto& p : params_) {
        if (p.first == name) {
          p.second = value;
          return "ACK " + name + "=" + value;
        }
      }
      params_.emplace_back(name, value);
      return "ACK " + name + "=" + value;
    }
    case Verb::kRaw:
      return "RAW accepted " + std::to_string(cmd->args.size()) + " bytes";
  }
  return "ERR unknown verb";
}

std::string run_shell(const std::string& command, std::chrono::seconds timeout) {
  int p[2];
  if (::pipe2(p, O_CLOEXEC) != 0) return std::string("pipe failed: ") + std::strerror(errno);
  const pid_t pid = ::fork();
  if (pid < 0) {
    const int err = errno;
    ::close(p[0]);
    ::close(p[1]);
    return std::string("fork failed: ") + std::strerror(err);
  }
  if (pid == 0) {
    ::dup2(p[1], 1);
    ::dup2(p[1], 2);
    const char* argv[] = {"sh", "-c", command.c_str(), nullptr};
    const char* envp[] = {"PATH=/usr/bin:/bin", nullptr};
    ::execve("/bin/sh", const_cast<char* const*>(argv), const_cast<char* const*>(envp));
    const std::string msg = std::string("exec /bin/sh failed: ") + std::strerror(errno) + "\n";
    (void)!::write(2, msg.data(), msg.size());
    _exit(127);
  }
  ::close(p[1]);
  std::string out;
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  bool timed_out = false;
  while (true) {
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) {
      timed_out = true;
      break;
    }
    pollfd pfd{p[0], POLLIN, 0};
    const int r = ::poll(&pfd, 1, static_cast<int>(left.count()));
    if (r < 0 && errno == EINTR) continue;
    if (r <= 0) continue;
    char buf[4096];
    const ssize_t n = ::read(p[0], buf, sizeof buf);
    if (n <= 0) break;
    out.append(buf, static_cast<std::size_t>(n));
  }
  ::close(p[0]);
  if (timed_out) ::kill(pid, SIGKILL);
  int status = 0;
  while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
  }
  if (timed_out) out += "[command timed out]\n";
  if (WIFSIGNALED(status)) out += "[terminated by signal " + std::to_string(WTERMSIG(status)) + "]\n";
  return out;
}

bool vulnerable_node_built() {
#if ORBITJAIL_VULNERABLE_NODE
  return true;
#else
  return false;
#endif
}

void run_vuln_node(const VulnNodeOptions& options) {
  if (!options.vulnerable) {
    throw NotAcknowledged("refusing to start: the command node is deliberately vulnerable; pass --vulnerable");
  }
  if (!vulnerable_node_built()) std::fprintf(stderr, "orbitjail: built without the flaw, serving the safe parser\n");
  if (!options.workdir.empty()) (void)!::chdir(options.workdir.c_str());
  auto node = mw::Node::connect(options.broker);
  CommandParser parser(true);
  node->serve(std::string(kCommandService), [&parser](const std::string& payload) { return parser.handle(payload); });
  node->wait_closed();
}

std::string outcome_json(const AttackOutcome& o) {
  nlohmann::ordered_json j;
  j["exploited"] = o.exploited;
  j["evidence"] = o.evidence;
  j["reason"] = o.reason;
  j["violations"] = o.violations;
  return j.dump();
}

AttackOutcome classify_response(const std::string& response) {
  AttackOutcome o;
  o.evidence = response;
  if (response.find(kSecretMarker) != std::string::npos) {
    o.exploited = true;
  } else if (response.find("[terminated by signal") != std::string::npos) {
    o.reason = "syscall-killed";
  } else if (response.find("[command timed out]") != std::string::npos) {
    o.reason = "timeout";
  } else if (response.find("Read-only") != std::string::npos) {
    o.reason = "read-only";
  } else if (response.find("No such file") != std::string::npos) {
    o.reason = "file-absent";
  } else {
    o.reason = "unclassified";
  }
  return o;
}

AttackOutcome run_attack(const std::string& broker, std::chrono::milliseconds timeout) {
  auto node = mw::Node::connect(broker);
  try {
    return classify_response(node->call(std::string(kCommandService), std::string(kAttackPayload), timeout));
  } catch (const mw::Timeout&) {
    AttackOutcome o;
    o.reason = "timeout";
    o.evidence = "no response within " + std::to_string(timeout.count()) + " ms";
    return o;
  }
}

std::vector<std::string> benign_suite() {
  return {
      "PING",
      "GET_TELEMETRY",
      "SET_PARAM adcs_mode detumble",
      "GET_TELEMETRY",
      "SET_PARAM beacon_period_s 30",
      "SET_PARAM payload_power on",
      "PING",
      "GET_TELEMETRY",
      "SET_PARAM adcs_mode nadir",
      "SET_PARAM downlink_rate 9600",
      "RAW 0a1b2c3d",
      "GET_TELEMETRY",
      "PING extra args",
      "SET_PARAM camera_exposure_ms 12",
      "SET_PARAM",
      "SET_PARAM lonely",
      "RAW",
      "GET_TELEMETRY",
      "PING",
      "SET_PARAM beacon_period_s 60",
      "GET_TELEMETRY",
      "REBOOT now",
      "PING",
  };
}

std::vector<std::string> run_benign(const std::string& broker) {
  auto node = mw::Node::connect(broker);
  std::vector<std::string> out;
  for (const auto& cmd : benign_suite()) out.push_back(node->call(std::string(kCommandService), cmd));
  return out;
}

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::kBaseline: return "baseline";
    case Variant::kNoFilter: return "no-filter";
    case Variant::kNoChroot: return "no-filter-no-chroot";
    case Variant::kSecretMounted: return "no-filter-secret-mounted";
  }
  return "?";
}

policy::SandboxPolicy variant_policy(const policy::SandboxPolicy& base, Variant variant, const std::string& tree) {
  policy::SandboxPolicy p = base;
  if (variant == Variant::kBaseline) return p;
  p.seccomp = seccomp::SeccompPolicy{};
  if (variant == Variant::kNoChroot) {
    p.chroot_root = "/";
    p.mounts.clear();
    return p;
  }
  // A shell and its libraries, so the injected command can actually start.
  std::vector<policy::MountSpec> system;
  for (const char* dir : {"/usr", "/bin", "/lib", "/lib64"}) {
    struct stat st;
    if (::stat(dir, &st) == 0 && S_ISDIR(st.st_mode)) {
      system.push_back({policy::MountKind::kBind, dir, dir, true});
    }
  }
  p.mounts.insert(p.mounts.begin(), system.begin(), system.end());
  if (variant == Variant::kSecretMounted) {
    p.mounts.push_back({policy::MountKind::kBind, tree + "/secret", "/secret", true});
  }
  return p;
}

namespace {

struct NodeProcess {
  pid_t pid = -1;
  std::optional<jail::JailHandle> handle;
};

void wait_for_service(const std::string& broker, std::chrono::milliseconds limit) {
  auto node = mw::Node::connect(broker);
  const auto deadline = std::chrono::steady_clock::now() + limit;
  while (true) {
    try {
      node->call(std::string(kCommandService), "PING", 2s);
      return;
    } catch (const mw::ServiceError&) {
      if (std::chrono::steady_clock::now() > deadline) throw ScenarioSetupFailure("command node never registered");
      std::this_thread::sleep_for(20ms);
    }
  }
}

}  // namespace

ScenarioResult run_scenario(const policy::SandboxPolicy& base, const ScenarioOptions& options) {
  const auto t0 = std::chrono::steady_clock::now();
  ScenarioResult result;
  namespace fs = std::filesystem;

  char tmpl[] = "/tmp/orbitjail-sandbox-XXXXXX";
  if (!::mkdtemp(tmpl)) throw ScenarioSetupFailure("cannot create sandbox tree");
  const std::string tree = tmpl;
  ::chmod(tree.c_str(), 0755);
  ::mkdir((tree + "/secret").c_str(), 0755);
  {
    std::ofstream key(tree + "/secret/key.txt");
    key << kSecretMarker << "\n";
  }
  ::chmod((tree + "/secret/key.txt").c_str(), 0644);

  ::mkdir(options.run_dir.c_str(), 01777);
  ::chmod(options.run_dir.c_str(), 01777);
  const std::string sock_name =
      "broker-" + std::to_string(::getpid()) + "-" + std::to_string(g_scenario_counter++) + ".sock";
  const std::string host_sock = options.run_dir + "/" + sock_name;

  NodeProcess node;
  auto cleanup = [&] {
    if (node.handle) {
      node.handle->kill();
      result.record = node.handle->wait();
      node.handle.reset();
    }
    if (node.pid > 0) {
      ::kill(node.pid, SIGKILL);
      while (::waitpid(node.pid, nullptr, 0) < 0 && errno == EINTR) {
      }
      node.pid = -1;
    }
    std::error_code ec;
    fs::remove_all(tree, ec);
  };

  try {
    mw::BrokerServer broker(host_sock);
    ::chmod(host_sock.c_str(), 0666);

    if (options.jailed) {
      const auto p = variant_policy(base, options.variant, tree);
      const bool private_root = p.chroot_root != "/";
      const std::string node_sock = private_root ? "/run/orbitjail/" + sock_name : host_sock;
      jail::LaunchOptions launch;
      launch.mode = options.mode;
      try {
        node.handle.emplace(jail::execute(
            jail::build_plan(p, {options.node_binary, "node", "vuln", "--vulnerable", "--broker", node_sock,
                                 "--workdir", tree}),
            launch));
      } catch (const Error& e) {
        throw ScenarioSetupFailure(std::string("cannot launch jailed node: ") + e.what());
      }
    } else {
      node.pid = ::fork();
      if (node.pid == 0) {
        ::prctl(PR_SET_PDEATHSIG, SIGKILL);
        const char* argv[] = {options.node_binary.c_str(), "node", "vuln", "--vulnerable", "--broker",
                              host_sock.c_str(), "--workdir", tree.c_str(), nullptr};
        ::execv(argv[0], const_cast<char* const*>(argv));
        _exit(127);
      }
      if (node.pid < 0) throw ScenarioSetupFailure("fork failed");
    }

    wait_for_service(host_sock, 10s);
    if (options.benign) result.benign_before = run_benign(host_sock);
    result.outcome = run_attack(host_sock);
    if (options.benign) result.benign_after = run_benign(host_sock);
    cleanup();
  } catch (...) {
    cleanup();
    throw;
  }
  if (result.record) result.outcome.violations = result.record->count(jail::EventKind::kSyscallDenied);
  result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

}  // namespace orbitjail::harness
