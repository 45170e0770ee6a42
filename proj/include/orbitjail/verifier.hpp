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

#include <optional>
#include <string>
#include <vector>

#include "orbitjail/policy.hpp"

namespace orbitjail::verify {

// What the probes expect, derived from a policy. Passed to the prober as
// JSON because the prober runs inside the jail without the policy file.
struct Expectations {
  std::string policy_name;
  std::optional<std::uint32_t> uid;
  bool pid_namespace = false;
  std::optional<std::string> hostname;
  std::vector<std::string> readable;
  std::vector<std::string> read_only;
  std::optional<std::string> escape_path;
  std::optional<policy::NetworkMode> network;
  std::optional<std::string> denied_syscall;
  bool hostname_change_denied = false;

  friend bool operator==(const Expectations&, const Expectations&) = default;
};

// escape_path: a host file outside the jail root that must not be visible.
Expectations expectations_from(const policy::SandboxPolicy& policy, const std::string& escape_path);
std::string expectations_json(const Expectations& e);
Expectations expectations_from_json(const std::string& text);

// Probe names implied by the expectations, in execution order.
std::vector<std::string> declared_checks(const Expectations& e);

enum class Verdict { kPass, kFail, kSkipped };
std::string_view to_string(Verdict v);

struct CheckResult {
  std::string name;
  std::string expected;
  std::string observed;
  Verdict verdict = Verdict::kFail;
  std::string reason;  // set when skipped
};

struct IsolationReport {
  std::string policy;
  std::string timestamp;
  std::vector<CheckResult> checks;

  // 0 all pass, 1 any fail, 3 only passes and skips.
  int exit_code() const;
  std::string json() const;
};

inline constexpr int kExitHarnessFailure = 2;

class ProbeHarnessFailure : public Error {
 public:
  using Error::Error;
};

IsolationReport run_probes(const Expectations& e);
IsolationReport skipped_report(const Expectations& e, const std::string& reason);

}  // namespace orbitjail::verify
