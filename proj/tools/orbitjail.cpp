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

// orbitjail: operator front end. Every subcommand is a thin adapter over the
// library; exit codes follow the jailer convention.
#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>

#include <CLI11.hpp>

#include "orbitjail/broker.hpp"
#include "orbitjail/harness.hpp"
#include "orbitjail/jailer.hpp"
#include "orbitjail/launch_plan.hpp"
#include "orbitjail/node.hpp"
#include "orbitjail/policy.hpp"
#include "orbitjail/resilient.hpp"
#include "orbitjail/verifier.hpp"

namespace {

using namespace orbitjail;

constexpr int kExitUsage = 2;

std::string self_exe() {
  std::error_code ec;
  auto p = std::filesystem::read_symlink("/proc/self/exe", ec);
  if (ec) throw Error("cannot resolve own executable");
  return p.string();
}

// Policies name a concrete outside id; unprivileged callers can only map
// their own.
policy::SandboxPolicy load_for_caller(const std::string& path) {
  auto p = policy::load_policy_file(path);
  if (::geteuid() != 0) p = policy::with_outside_ids(std::move(p), ::geteuid(), ::getegid());
  return p;
}

std::vector<std::uint8_t> read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("cannot write " + path);
}

void print_record(const jail::SupervisionRecord& r, bool as_json) {
  if (as_json) {
    std::cerr << jail::record_json(r) << "\n";
    return;
  }
  std::cerr << "jail " << r.jail << ": ";
  if (r.exited) std::cerr << "exited " << r.exit_code;
  else std::cerr << "killed by signal " << r.term_signal;
  if (r.filter_killed) std::cerr << " (syscall filter)";
  std::cerr << ", limits=" << jail::to_string(r.limits) << ", events=" << r.events.size() << "\n";
  for (const auto& e : r.events) std::cerr << "  " << jail::to_string(e.kind) << " " << e.detail << "\n";
}

int cmd_plan(const std::string& policy_path, const std::vector<std::string>& argv) {
  const auto p = policy::load_policy_file(policy_path);
  std::cout << jail::render_plan(jail::build_plan(p, argv));
  return 0;
}

int cmd_run(const std::string& policy_path, const std::vector<std::string>& argv, const std::string& mode,
            bool per_command, bool json, const std::string& fail_step) {
  const auto p = load_for_caller(policy_path);
  jail::LaunchOptions options;
  options.mode = mode == "observe" ? jail::Mode::kObserve : jail::Mode::kEnforce;
  if (!fail_step.empty()) {
    options.fail_step = jail::step_from_name(fail_step);
    if (!options.fail_step) throw Error("unknown step " + fail_step);
  }
  if (per_command) {
    int status = 0;
    std::string line;
    while (std::getline(std::cin, line)) {
      if (line.empty()) continue;
      try {
        const auto r = jail::spawn_per_command(p, line, options);
        print_record(r, json);
        if (status == 0) status = r.supervisor_exit_code();
      } catch (const jail::SetupFailure& e) {
        std::cerr << "orbitjail: " << e.what() << "\n";
        if (status == 0) status = jail::kExitSetupFailure;
      }
    }
    return status;
  }
  const auto r = jail::run(jail::build_plan(p, argv), options);
  print_record(r, json);
  return r.supervisor_exit_code();
}

int cmd_verify(const std::string& policy_path, bool unjailed) {
  const auto p = load_for_caller(policy_path);
  // A host file outside the jail root that the prober must not see.
  const std::string canary = "/tmp/orbitjail-verify-canary-" + std::to_string(::getpid());
  { std::ofstream(canary) << "canary\n"; }
  struct Remove {
    std::string path;
    ~Remove() { ::unlink(path.c_str()); }
  } remove{canary};

  const auto expect = verify::expectations_from(p, canary);
  if (unjailed) {
    const auto report = verify::run_probes(expect);
    std::cout << report.json() << "\n";
    return report.exit_code();
  }
  if (auto missing = jail::missing_kernel_features(p.namespaces); !missing.empty()) {
    const bool user = std::find(missing.begin(), missing.end(), "user") != missing.end();
    const auto report = verify::skipped_report(expect, user ? "user-ns-unavailable" : missing.front() + "-ns-unavailable");
    std::cout << report.json() << "\n";
    return report.exit_code();
  }
  std::cout.flush();
  const auto r = jail::run(jail::build_plan(p, {self_exe(), "__probe", verify::expectations_json(expect)}));
  if (!r.exited) {
    std::cerr << "orbitjail: prober did not finish: signal " << r.term_signal << "\n";
    return verify::kExitHarnessFailure;
  }
  return r.exit_code;
}

int cmd_probe(const std::string& expectations) {
  try {
    const auto report = verify::run_probes(verify::expectations_from_json(expectations));
    std::cout << report.json() << "\n";
    return report.exit_code();
  } catch (const verify::ProbeHarnessFailure& e) {
    std::cerr << "probe: " << e.what() << "\n";
    return verify::kExitHarnessFailure;
  }
}

int cmd_broker(const std::string& listen) {
  std::string addr = listen;
  if (addr.empty()) {
    const char* env = std::getenv("ORBITJAIL_BROKER");
    if (!env) throw Error("no --listen address and ORBITJAIL_BROKER is unset");
    addr = env;
  }
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);
  mw::BrokerServer server(addr);
  server.set_drop_log(2);
  std::cerr << "broker listening on " << server.address() << "\n";
  int sig = 0;
  sigwait(&set, &sig);
  server.stop();
  return 0;
}

int cmd_attack_sim(const std::string& policy_path, bool unjailed, const std::string& variant,
                   const std::string& mode) {
  harness::ScenarioOptions opts;
  opts.node_binary = self_exe();
  opts.jailed = !unjailed;
  opts.mode = mode == "enforce" ? jail::Mode::kEnforce : jail::Mode::kObserve;
  if (variant == "no-filter") opts.variant = harness::Variant::kNoFilter;
  else if (variant == "no-chroot") opts.variant = harness::Variant::kNoChroot;
  else if (variant == "secret-mounted") opts.variant = harness::Variant::kSecretMounted;
  policy::SandboxPolicy p;
  if (opts.jailed) {
    if (policy_path.empty()) throw Error("--jailed needs a policy file");
    p = load_for_caller(policy_path);
  }
  const auto result = harness::run_scenario(p, opts);
  std::cout << harness::outcome_json(result.outcome) << "\n";
  const bool continuity = result.benign_before == result.benign_after;
  if (!continuity) std::cerr << "orbitjail: benign responses changed across the attack\n";
  return continuity ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"orbitjail: sandbox supervisor for middleware flight software nodes"};
  app.require_subcommand(1);

  std::string policy_path;
  std::vector<std::string> target;

  auto* plan = app.add_subcommand("plan", "print the launch plan for a policy and command");
  plan->add_option("policy", policy_path, "policy file")->required();
  plan->add_option("argv", target, "command after --")->required();

  std::string mode = "enforce";
  bool per_command = false, stdin_commands = false, json = false;
  auto* run = app.add_subcommand("run", "run a command in a jail");
  run->add_option("--mode", mode, "enforce or observe")->check(CLI::IsMember({"enforce", "observe"}));
  run->add_flag("--per-command", per_command, "one fresh jail per command");
  run->add_flag("--stdin-commands", stdin_commands, "read commands from standard input, one per line");
  run->add_flag("--json", json, "supervision record as JSON on standard error");
  std::string fail_step;
  run->add_option("--fail-step", fail_step, "test hook: fail the named setup step")->group("");
  run->add_option("policy", policy_path, "policy file")->required();
  run->add_option("argv", target, "command after --");

  bool unjailed = false;
  auto* verify_cmd = app.add_subcommand("verify", "run the isolation probes inside the policy's jail");
  verify_cmd->add_flag("--unjailed", unjailed, "run the probes directly (negative control)");
  verify_cmd->add_option("policy", policy_path, "policy file")->required();

  std::string listen;
  auto* broker = app.add_subcommand("broker", "run the middleware broker");
  broker->add_option("--listen", listen, "unix:/path, tcp:host:port, or a socket path");

  std::string node_kind, broker_addr, workdir, service = "echo";
  bool vulnerable = false;
  auto* node = app.add_subcommand("node", "run a middleware node (echo, vuln, attack, benign)");
  node->add_option("kind", node_kind, "node kind")->required()->check(CLI::IsMember({"echo", "vuln", "attack", "benign"}));
  node->add_option("--broker", broker_addr, "broker address (default: ORBITJAIL_BROKER)");
  node->add_option("--service", service, "service name for echo");
  node->add_flag("--vulnerable", vulnerable, "acknowledge running the deliberately vulnerable node");
  node->add_option("--workdir", workdir, "working directory for the vuln node when it exists");

  bool jailed = false;
  std::string variant = "baseline";
  std::string sim_mode = "observe";
  auto* attack = app.add_subcommand("attack-sim", "broker + vulnerable node + attacker; prints the outcome");
  auto* jailed_flag = attack->add_flag("--jailed", jailed, "run the node in the policy's jail (default)");
  attack->add_flag("--unjailed", unjailed, "run the node directly on the host")->excludes(jailed_flag);
  attack->add_option("--variant", variant, "defense matrix variant")
      ->check(CLI::IsMember({"baseline", "no-filter", "no-chroot", "secret-mounted"}));
  attack->add_option("--mode", sim_mode, "supervision mode for the jailed node")
      ->check(CLI::IsMember({"enforce", "observe"}));
  attack->add_option("policy", policy_path, "policy file");

  std::string in_path, out_path;
  auto* pack = app.add_subcommand("pack", "wrap a policy file in the redundant container");
  pack->add_option("in", in_path)->required();
  pack->add_option("out", out_path)->required();
  auto* unpack = app.add_subcommand("unpack", "recover a policy file from the redundant container");
  unpack->add_option("in", in_path)->required();
  unpack->add_option("out", out_path)->required();

  std::string expectations;
  auto* probe = app.add_subcommand("__probe", "");
  probe->group("");
  probe->add_option("expectations", expectations)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "orbitjail: " << e.what() << "\n" << app.help();
    return kExitUsage;
  }

  try {
    if (*plan) return cmd_plan(policy_path, target);
    if (*run) {
      if (per_command != stdin_commands) {
        std::cerr << "orbitjail: --per-command and --stdin-commands go together\n" << run->help();
        return kExitUsage;
      }
      if (!per_command && target.empty()) {
        std::cerr << "orbitjail: missing command after --\n" << run->help();
        return kExitUsage;
      }
      return cmd_run(policy_path, target, mode, per_command, json, fail_step);
    }
    if (*verify_cmd) return cmd_verify(policy_path, unjailed);
    if (*probe) return cmd_probe(expectations);
    if (*broker) return cmd_broker(listen);
    if (*node) {
      if (node_kind == "vuln") {
        harness::run_vuln_node({broker_addr, vulnerable, workdir});
        return 0;
      }
      if (node_kind == "attack") {
        std::cout << harness::outcome_json(harness::run_attack(broker_addr)) << "\n";
        return 0;
      }
      if (node_kind == "benign") {
        for (const auto& r : harness::run_benign(broker_addr)) std::cout << r << "\n";
        return 0;
      }
      auto n = mw::Node::connect(broker_addr);
      n->serve(service, [](const std::string& p) { return p; });
      n->wait_closed();
      return 0;
    }
    if (*attack) return cmd_attack_sim(policy_path, unjailed, variant, sim_mode);
    if (*pack) {
      const auto bytes = read_bytes(in_path);
      policy::parse_policy(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
      write_bytes(out_path, encode_resilient(bytes));
      return 0;
    }
    if (*unpack) {
      const auto decoded = decode_resilient(read_bytes(in_path));
      write_bytes(out_path, decoded.payload);
      std::cerr << "recovered via " << to_string(decoded.path) << "\n";
      return 0;
    }
  } catch (const harness::NotAcknowledged& e) {
    std::cerr << "orbitjail: " << e.what() << "\n";
    return kExitUsage;
  } catch (const jail::SetupFailure& e) {
    std::cerr << "orbitjail: " << e.what() << "\n";
    return jail::kExitSetupFailure;
  } catch (const jail::UnsupportedKernel& e) {
    std::cerr << "orbitjail: " << e.what() << "\n";
    return jail::kExitSetupFailure;
  } catch (const Error& e) {
    // Policy, plan, container, and middleware errors.
    std::cerr << "orbitjail: " << e.what() << "\n";
    return jail::kExitSetupFailure;
  }
  return kExitUsage;
}
