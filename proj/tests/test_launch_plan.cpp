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

#include <random>
#include <set>

#include "orbitjail/launch_plan.hpp"
#include "orbitjail/policy.hpp"
#include "support/files.hpp"
#include "support/random_policy.hpp"

using namespace orbitjail;
using jail::StepKind;
using testsupport::read_file;
using testsupport::source_path;

namespace {

policy::SandboxPolicy fixture(const std::string& name) {
  return policy::load_policy_file(source_path("fixtures/policies/" + name));
}

std::vector<StepKind> kinds(const jail::LaunchPlan& plan) {
  std::vector<StepKind> out;
  for (const auto& s : plan.steps) out.push_back(jail::kind_of(s));
  return out;
}

}  // namespace

TEST_CASE("step names round trip") {
  std::set<std::string_view> names;
  for (auto k : jail::kAllStepKinds) {
    names.insert(jail::to_string(k));
    CHECK(jail::step_from_name(jail::to_string(k)) == k);
  }
  CHECK(names.size() == 10);
  CHECK_FALSE(jail::step_from_name("mount-everything"));
}

TEST_CASE("minimal policy plans only what it asks for") {
  const auto plan = jail::build_plan(fixture("minimal.pol"), {"/bin/true"});
  CHECK(kinds(plan) == std::vector<StepKind>{StepKind::kCreateNamespaces, StepKind::kWriteIdMaps, StepKind::kEnterRoot,
                                             StepKind::kDropCapabilities, StepKind::kInstallFilter,
                                             StepKind::kExecTarget});
  CHECK(plan.jail_name == "minimal");
}

TEST_CASE("cmd-parser policy uses every step kind in order") {
  const auto plan = jail::build_plan(fixture("cmd-parser.pol"), {"/bin/node", "--flag"});
  CHECK(kinds(plan) == std::vector<StepKind>(jail::kAllStepKinds.begin(), jail::kAllStepKinds.end()));
  const auto& exec = std::get<jail::ExecTarget>(*plan.find(StepKind::kExecTarget));
  CHECK(exec.argv == std::vector<std::string>{"/bin/node", "--flag"});
  CHECK_NOTHROW(jail::check_plan(plan));
}

TEST_CASE("an empty command cannot be planned") {
  CHECK_THROWS_AS(jail::build_plan(fixture("minimal.pol"), {}), jail::EmptyCommand);
  CHECK_THROWS_AS(jail::build_plan(fixture("minimal.pol"), {""}), jail::EmptyCommand);
}

TEST_CASE("plan text matches the goldens and is stable across runs") {
  for (const char* name : {"minimal", "cmd-parser", "reference", "observe-log"}) {
    CAPTURE(name);
    const auto golden = read_file(source_path(std::string("fixtures/golden/") + name + ".plan"));
    for (int run = 0; run < 10; ++run) {
      CHECK(jail::render_plan(jail::build_plan(fixture(std::string(name) + ".pol"), {"/bin/true"})) == golden);
    }
  }
}

TEST_CASE("rendered plans tell different policies apart") {
  std::mt19937 rng(77);
  std::map<std::string, std::string> seen;  // rendering -> canonical policy
  for (int i = 0; i < 300; ++i) {
    const auto p = testsupport::random_policy(rng);
    const std::string text = jail::render_plan(jail::build_plan(p, {"/bin/true"}));
    // Equal renderings must come from policies that differ at most in the
    // log path, which the plan text does not show.
    auto stripped = p;
    stripped.log_path.reset();
    auto [it, inserted] = seen.emplace(text, policy::serialize_policy(stripped));
    if (!inserted) CHECK(it->second == policy::serialize_policy(stripped));
    CHECK_NOTHROW(jail::check_plan(jail::build_plan(p, {"/bin/true"})));
  }
}

TEST_CASE("ordering rules are enforced") {
  const auto good = jail::build_plan(fixture("cmd-parser.pol"), {"/bin/true"});
  auto swap = [&](StepKind a, StepKind b) {
    auto plan = good;
    std::size_t ia = 0, ib = 0;
    for (std::size_t i = 0; i < plan.steps.size(); ++i) {
      if (jail::kind_of(plan.steps[i]) == a) ia = i;
      if (jail::kind_of(plan.steps[i]) == b) ib = i;
    }
    std::swap(plan.steps[ia], plan.steps[ib]);
    return plan;
  };
  CHECK_THROWS_AS(jail::check_plan(swap(StepKind::kCreateNamespaces, StepKind::kWriteIdMaps)), jail::InvalidPlan);
  CHECK_THROWS_AS(jail::check_plan(swap(StepKind::kApplyMounts, StepKind::kEnterRoot)), jail::InvalidPlan);
  CHECK_THROWS_AS(jail::check_plan(swap(StepKind::kDropCapabilities, StepKind::kInstallFilter)), jail::InvalidPlan);
  CHECK_THROWS_AS(jail::check_plan(swap(StepKind::kInstallFilter, StepKind::kExecTarget)), jail::InvalidPlan);
  CHECK_THROWS_AS(jail::check_plan(swap(StepKind::kEnterRoot, StepKind::kDropCapabilities)), jail::InvalidPlan);
  CHECK_THROWS_AS(jail::check_plan(swap(StepKind::kSetHostname, StepKind::kDropCapabilities)), jail::InvalidPlan);
  CHECK_THROWS_AS(jail::check_plan(swap(StepKind::kConfigureNetwork, StepKind::kDropCapabilities)),
                  jail::InvalidPlan);
  // Steps with no mutual dependency may trade places.
  CHECK_NOTHROW(jail::check_plan(swap(StepKind::kSetHostname, StepKind::kApplyCgroups)));

  auto no_exec = good;
  no_exec.steps.pop_back();
  CHECK_THROWS_AS(jail::check_plan(no_exec), jail::InvalidPlan);

  auto no_filter = good;
  no_filter.steps.erase(no_filter.steps.begin() + 8);
  CHECK_THROWS_AS(jail::check_plan(no_filter), jail::InvalidPlan);

  auto twice = good;
  twice.steps.insert(twice.steps.begin() + 5, twice.steps[4]);
  CHECK_THROWS_AS(jail::check_plan(twice), jail::InvalidPlan);
}
