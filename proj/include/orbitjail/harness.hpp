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

#include <chrono>
#include <optional>
#include <string>
#include <vector>

#include "orbitjail/jailer.hpp"
#include "orbitjail/policy.hpp"

namespace orbitjail::harness {

inline constexpr std::string_view kExecMagic = "!#EXEC ";
inline constexpr std::string_view kSecretMarker = "SECRET-MARKER-7f3a";
inline constexpr std::string_view kCommandService = "cmd";
// The attack reads a path relative to the node's working directory.
inline constexpr std::string_view kAttackPayload = "RAW !#EXEC cat secret/key.txt";

enum class Verb { kPing, kGetTelemetry, kSetParam, kRaw };

struct CommandMessage {
  Verb verb;
  std::string args;
};

// "VERB args"; nullopt for an unknown verb.
std::optional<CommandMessage> parse_command(const std::string& payload);

class CommandParser {
 public:
  explicit CommandParser(bool vulnerable) : vulnerable_(vulnerable) {}
  std::string handle(const std::string& payload);

 private:
  bool vulnerable_;
  std::vector<std::pair<std::string, std::string>> params_;
};

// Runs a shell command and returns its combined output, with a trailer when
// it did not exit normally.
std::string run_shell(const std::string& command, std::chrono::seconds timeout = std::chrono::seconds(10));

class NotAcknowledged : public Error {
 public:
  using Error::Error;
};

struct VulnNodeOptions {
  std::string broker;
  bool vulnerable = false;
  std::string workdir;  // entered when it exists
};

// Serves "cmd" until the broker goes away. Refuses to start unless the
// vulnerable flag is set and the build enabled the flaw.
void run_vuln_node(const VulnNodeOptions& options);
bool vulnerable_node_built();

struct AttackOutcome {
  bool exploited = false;
  std::string evidence;
  std::string reason;  // containment reason when not exploited
  std::size_t violations = 0;
};

std::string outcome_json(const AttackOutcome& outcome);

AttackOutcome classify_response(const std::string& response);

// Sends the attack through the broker and classifies the answer.
AttackOutcome run_attack(const std::string& broker, std::chrono::milliseconds timeout = std::chrono::seconds(15));

std::vector<std::string> benign_suite();
// Responses to the benign suite in order.
std::vector<std::string> run_benign(const std::string& broker);

class ScenarioSetupFailure : public Error {
 public:
  using Error::Error;
};

enum class Variant {
  kBaseline,         // shipped policy
  kNoFilter,         // process spawning allowed, shell present in the jail
  kNoChroot,         // as kNoFilter, and the node sees the host filesystem
  kSecretMounted,    // as kNoFilter, with the secret bound into the jail
};
std::string_view to_string(Variant v);

struct ScenarioOptions {
  std::string node_binary;  // orbitjail executable that provides `node vuln`
  bool jailed = true;
  Variant variant = Variant::kBaseline;
  jail::Mode mode = jail::Mode::kObserve;
  std::string run_dir = "/tmp/orbitjail-run";
  bool benign = true;
};

struct ScenarioResult {
  AttackOutcome outcome;
  std::vector<std::string> benign_before;
  std::vector<std::string> benign_after;
  std::optional<jail::SupervisionRecord> record;
  double seconds = 0;
};

// Derives the policy actually used for a defense-matrix variant.
policy::SandboxPolicy variant_policy(const policy::SandboxPolicy& base, Variant variant, const std::string& tree);

// Plants the secret, starts a broker and the node (jailed or not), runs the
// benign suite, the attack, and the suite again, then tears everything down.
ScenarioResult run_scenario(const policy::SandboxPolicy& policy, const ScenarioOptions& options);

}  // namespace orbitjail::harness
