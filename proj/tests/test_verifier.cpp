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

#include <sys/stat.h>

#include <json.hpp>

#include "orbitjail/verifier.hpp"
#include "support/cli_run.hpp"
#include "support/files.hpp"

using namespace orbitjail;
using testsupport::run_cli;
using testsupport::source_path;

namespace {

std::map<std::string, std::string> verdicts(const std::string& report) {
  std::map<std::string, std::string> out;
  const auto j = nlohmann::json::parse(report);
  for (const auto& c : j.at("checks")) out[c.at("name").get<std::string>()] = c.at("verdict").get<std::string>();
  return out;
}

}  // namespace

TEST_CASE("every enabled isolation property declares a probe") {
  const auto ref = policy::load_policy_file(source_path("fixtures/policies/reference.pol"));
  const auto e = verify::expectations_from(ref, "/tmp/canary");
  CHECK(verify::declared_checks(e) ==
        std::vector<std::string>{"uid-probe", "pid-probe", "hostname-probe", "fs-read-probe", "fs-escape-probe",
                                 "ro-probe", "net-probe", "syscall-probe", "cap-probe"});

  const auto minimal = policy::load_policy_file(source_path("fixtures/policies/minimal.pol"));
  const auto m = verify::expectations_from(minimal, "/tmp/canary");
  const auto checks = verify::declared_checks(m);
  CHECK(std::find(checks.begin(), checks.end(), "fs-escape-probe") != checks.end());
  for (const char* f : {"cmd-parser.pol", "observe-log.pol", "minimal.pol", "reference.pol"}) {
    const auto p = policy::load_policy_file(source_path(std::string("fixtures/policies/") + f));
    const auto names = verify::declared_checks(verify::expectations_from(p, "/tmp/canary"));
    CHECK(names.size() == std::set<std::string>(names.begin(), names.end()).size());
    CHECK(std::find(names.begin(), names.end(), "uid-probe") != names.end());
  }
}

TEST_CASE("expectations survive the trip into the jail") {
  const auto ref = policy::load_policy_file(source_path("fixtures/policies/reference.pol"));
  const auto e = verify::expectations_from(ref, "/tmp/canary");
  CHECK(verify::expectations_from_json(verify::expectations_json(e)) == e);
  CHECK_THROWS(verify::expectations_from_json("{not json"));
}

TEST_CASE("report exit codes") {
  verify::IsolationReport r;
  CHECK(r.exit_code() == 0);
  r.checks.push_back({"a", "", "", verify::Verdict::kPass, ""});
  CHECK(r.exit_code() == 0);
  r.checks.push_back({"b", "", "", verify::Verdict::kSkipped, "x"});
  CHECK(r.exit_code() == 3);
  r.checks.push_back({"c", "", "", verify::Verdict::kFail, ""});
  CHECK(r.exit_code() == 1);
  const auto j = nlohmann::json::parse(r.json());
  CHECK(j.at("summary").at("pass") == 1);
  CHECK(j.at("summary").at("fail") == 1);
  CHECK(j.at("summary").at("skipped") == 1);
  CHECK(j.at("checks").at(1).at("reason") == "x");
}

TEST_CASE("the reference jail passes every probe") {
  const auto r = run_cli({"verify", source_path("fixtures/policies/reference.pol")});
  CHECK(r.exit_code == 0);
  const auto v = verdicts(r.out);
  CHECK(v.size() == 9);
  for (const auto& [name, verdict] : v) CHECK_MESSAGE(verdict == "pass", name);
}

TEST_CASE("probes run outside any jail catch the missing isolation") {
  const auto r = run_cli({"verify", "--unjailed", source_path("fixtures/policies/reference.pol")});
  CHECK(r.exit_code == 1);
  const auto v = verdicts(r.out);
  CHECK(v.at("uid-probe") == "fail");
  CHECK(v.at("pid-probe") == "fail");
  CHECK(v.at("fs-escape-probe") == "fail");
}

TEST_CASE("a kernel without user namespaces yields skips, not passes") {
  // The namespace cannot see files under directories owned by unmapped users,
  // so hand it a world readable copy of the policy.
  const std::string copy = "/tmp/orbitjail-verify-skip-" + std::to_string(::getpid()) + ".pol";
  testsupport::write_file(copy, testsupport::read_file(source_path("fixtures/policies/reference.pol")));
  ::chmod(copy.c_str(), 0644);
  const auto r = run_cli({"verify", copy}, {"", true});
  ::unlink(copy.c_str());
  CHECK(r.exit_code == 3);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j.at("summary").at("pass") == 0);
  for (const auto& c : j.at("checks")) {
    CHECK(c.at("verdict") == "skipped");
    CHECK(c.at("reason") == "user-ns-unavailable");
  }
}
