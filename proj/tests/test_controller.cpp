// Copyright 2026 The sdmbox Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include "sdm/controller.hpp"
#include "util.hpp"

using namespace sdm;
using nlohmann::json;

namespace {

json topology(int boxes, const std::vector<double>& gamma = {}) {
  json j;
  j["resources"] = {"cpu"};
  j["boxes"] = json::array();
  for (int n = 0; n < boxes; ++n)
    j["boxes"].push_back({{"id", "b" + std::to_string(n)},
                          {"capacity", {{"cpu", 10}}},
                          {"utilization", {{"cpu", gamma.empty() ? 0.0 : gamma[n]}}}});
  j["sdms"] = {{{"id", "fw"}, {"impls", {{{"id", "fw.a"}, {"demand", {{"cpu", 1}}}}}}},
               {{"id", "ids"}, {"impls", {{{"id", "ids.a"}, {"demand", {{"cpu", 1}}}}}}}};
  j["events"] = json::array();
  return j;
}

json arrival(std::uint64_t t, const std::string& id, const std::vector<std::string>& chain, int packets = 200) {
  return {{"time", t}, {"type", "arrival"}, {"flow", {{"id", id}, {"amount", 1}, {"chain", chain}}},
          {"traffic", {{"packets", packets}}}};
}

void run_until_quiescent(Controller& c, std::uint64_t limit = 100000) {
  for (std::uint64_t i = 0; i < limit && !c.quiescent(); ++i) c.tick();
  ASSERT_TRUE(c.quiescent());
}

void expect_monitor_matches(const Controller& c) {
  auto [p, a] = c.committed();
  const Utilization want = utilization(p, a);
  const Utilization got = c.monitor();
  ASSERT_EQ(got.size(), want.size());
  for (std::size_t n = 0; n < want.size(); ++n)
    for (std::size_t r = 0; r < want[n].size(); ++r) EXPECT_NEAR(got[n][r], want[n][r], 1e-9);
}

}  // namespace

TEST(Controller, EmptyScenario) {
  Scenario s = scenario_from_json(topology(3, {0.1, 0.45, 0.2}));
  Controller c(s);
  EXPECT_TRUE(c.quiescent());
  EXPECT_NEAR(max_utilization(c.monitor()), 0.45, 1e-12);
  EXPECT_TRUE(c.enforce().empty());
  Metrics m = run_scenario(s);
  EXPECT_TRUE(m.flows.empty());
}

TEST(Controller, EnforceIsIdempotent) {
  json j = topology(2);
  j["events"] = {arrival(0, "f1", {"fw", "ids"}), arrival(0, "f2", {"fw"})};
  Scenario s = scenario_from_json(j);
  Controller c(s);
  for (const auto& ev : s.events) c.apply(ev);
  EXPECT_TRUE(c.enforce().empty());
  EXPECT_TRUE(c.enforce().empty());
  EXPECT_TRUE(c.coherent());
  EXPECT_EQ(c.steering().size(), 2u);
  expect_monitor_matches(c);
}

TEST(Controller, ConservationAndChainTraversal) {
  json j = topology(2);
  j["events"] = {arrival(0, "f1", {"fw", "ids"}, 300), arrival(0, "f2", {"ids"}, 150), arrival(3, "f3", {"fw"}, 90)};
  Metrics m = run_scenario(scenario_from_json(j));
  ASSERT_EQ(m.flows.size(), 3u);
  const std::map<std::string, std::size_t> chain_len{{"f1", 2}, {"f2", 1}, {"f3", 1}};
  for (const auto& f : m.flows) {
    EXPECT_TRUE(f.admitted);
    EXPECT_EQ(f.injected, f.delivered + f.dropped + f.in_flight) << f.id;
    EXPECT_EQ(f.dropped, 0u) << f.id;
    EXPECT_EQ(f.reordered, 0u) << f.id;
    EXPECT_EQ(f.delivered_by_sdm_count.size(), 1u);
    EXPECT_EQ(f.delivered_by_sdm_count.begin()->first, chain_len.at(f.id));
  }
  EXPECT_EQ(m.flow("f1")->delivered, 300u);
  EXPECT_TRUE(m.coherent);
}

TEST(Controller, MonitorTracksCommittedLoad) {
  json j = topology(3, {0.05, 0.0, 0.3});
  j["events"] = {arrival(0, "a", {"fw", "ids"}), arrival(1, "b", {"ids"}), arrival(2, "c", {"fw"})};
  j["events"].push_back({{"time", 3}, {"type", "departure"}, {"flow", "a"}});
  Scenario s = scenario_from_json(j);
  Controller c(s);
  for (const auto& ev : s.events) {
    c.apply(ev);
    expect_monitor_matches(c);
  }
}

TEST(Controller, DepartureRetiresDataPlanes) {
  json j = topology(1);
  j["events"] = {arrival(0, "f1", {"fw", "ids"}, 50)};
  j["events"].push_back({{"time", 1}, {"type", "departure"}, {"flow", "f1"}});
  Scenario s = scenario_from_json(j);
  Controller c(s);
  c.apply(s.events[0]);
  EXPECT_EQ(c.live_dp_count(0), 2u);
  for (int i = 0; i < 10; ++i) c.tick();
  c.apply(s.events[1]);
  EXPECT_TRUE(c.steering().empty());
  run_until_quiescent(c);
  EXPECT_EQ(c.live_dp_count(0), 0u);
  const FlowMetrics* f = c.metrics().flow("f1");
  ASSERT_NE(f, nullptr);
  EXPECT_EQ(f->injected, f->delivered + f->dropped);
  EXPECT_EQ(f->dropped, 0u);
}

TEST(Controller, FailureIsolationAndReassignment) {
  json j = topology(3);
  j["events"] = {arrival(0, "f1", {"fw", "ids"}, 400), arrival(0, "f2", {"fw", "ids"}, 400),
                 arrival(0, "f3", {"fw"}, 400), arrival(0, "f4", {"ids"}, 400)};
  Scenario s = scenario_from_json(j);
  Controller c(s);
  for (const auto& ev : s.events) c.apply(ev);
  for (int i = 0; i < 50; ++i) c.tick();

  auto touches = [&](std::size_t f, std::size_t box) {
    auto [p, a] = c.committed();
    for (const Slot& sl : a.paths[f])
      if (sl.box == box) return true;
    return false;
  };
  std::vector<bool> affected;
  for (std::size_t f = 0; f < 4; ++f) affected.push_back(touches(f, 1));
  ASSERT_TRUE(std::count(affected.begin(), affected.end(), true) > 0);
  ASSERT_TRUE(std::count(affected.begin(), affected.end(), false) > 0);
  std::vector<std::uint64_t> dropped_before;
  for (const auto& f : c.metrics().flows) dropped_before.push_back(f.dropped);

  ScenarioEvent fail;
  fail.time = 5;
  fail.type = SimEventType::Failure;
  fail.box_id = "b1";
  c.apply(fail);
  EXPECT_TRUE(c.failed(1));
  EXPECT_EQ(c.shim(1), nullptr);
  EXPECT_TRUE(c.coherent());
  for (std::size_t f = 0; f < 4; ++f) EXPECT_FALSE(touches(f, 1)) << f;
  expect_monitor_matches(c);
  run_until_quiescent(c);

  Metrics m = c.metrics();
  for (std::size_t f = 0; f < 4; ++f) {
    const auto& fm = m.flows[f];
    EXPECT_TRUE(fm.admitted);
    EXPECT_EQ(fm.injected, fm.delivered + fm.dropped) << fm.id;
    if (!affected[f]) {
      EXPECT_EQ(fm.dropped, dropped_before[f]) << fm.id;
      EXPECT_EQ(fm.reassignments, 0u);
    } else {
      EXPECT_EQ(fm.reassignments, 1u);
    }
  }
  EXPECT_TRUE(m.coherent);
}

TEST(Controller, AllBoxesFailedLeavesFlowsUnadmitted) {
  json j = topology(1);
  j["events"] = {arrival(0, "f1", {"fw"}, 100)};
  j["events"].push_back({{"time", 1}, {"type", "failure"}, {"box", "b0"}});
  j["events"].push_back(arrival(2, "f2", {"fw"}, 100));
  Metrics m = run_scenario(scenario_from_json(j));
  EXPECT_FALSE(m.flow("f1")->admitted);
  EXPECT_FALSE(m.flow("f2")->admitted);
  EXPECT_EQ(m.infeasible, (std::vector<std::string>{"f1", "f2"}));
  EXPECT_TRUE(m.coherent);
}

TEST(Controller, MutationRechains) {
  json j = topology(2);
  j["events"] = {arrival(0, "f1", {"fw", "ids"}, 300)};
  j["events"].push_back({{"time", 5}, {"type", "mutation"}, {"flow", "f1"}, {"chain", {"fw"}}});
  Metrics m = run_scenario(scenario_from_json(j));
  const FlowMetrics* f = m.flow("f1");
  EXPECT_EQ(f->delivered, 300u);
  EXPECT_EQ(f->reassignments, 1u);
  EXPECT_GT(f->delivered_by_sdm_count.at(1), 0u);
  EXPECT_GT(f->delivered_by_sdm_count.at(2), 0u);
}

TEST(Controller, FullReoptimizationPolicy) {
  json j = topology(3);
  j["policy"] = {{"reschedule", "full"}};
  j["events"] = {arrival(0, "f1", {"fw", "ids"}), arrival(0, "f2", {"fw"}), arrival(0, "f3", {"ids"})};
  j["events"].push_back({{"time", 2}, {"type", "failure"}, {"box", "b0"}});
  Metrics m = run_scenario(scenario_from_json(j));
  for (const auto& f : m.flows) {
    EXPECT_TRUE(f.admitted);
    EXPECT_EQ(f.injected, f.delivered + f.dropped);
  }
  EXPECT_TRUE(m.coherent);
}

TEST(Controller, DeterministicMetrics) {
  json j = topology(2);
  j["events"] = {arrival(0, "f1", {"fw", "ids"}), arrival(1, "f2", {"fw"})};
  j["events"].push_back({{"time", 3}, {"type", "failure"}, {"box", "b1"}});
  Scenario s = scenario_from_json(j);
  EXPECT_EQ(run_scenario(s).to_json(s.topology).dump(), run_scenario(s).to_json(s.topology).dump());
}

TEST(Controller, ScenarioErrors) {
  json j = topology(1);
  j["events"] = {arrival(0, "f1", {"nope"})};
  EXPECT_SDM_ERROR(scenario_from_json(j), ErrorCode::InvalidProblem);
  j["events"] = {{{"time", 0}, {"type", "failure"}, {"box", "b9"}}};
  EXPECT_SDM_ERROR(scenario_from_json(j), ErrorCode::InvalidProblem);
  j["events"] = {arrival(5, "f1", {"fw"}), arrival(2, "f2", {"fw"})};
  EXPECT_SDM_ERROR(scenario_from_json(j), ErrorCode::InvalidProblem);
  j["events"] = {{{"time", 0}, {"type", "explode"}}};
  EXPECT_SDM_ERROR(scenario_from_json(j), ErrorCode::InvalidProblem);
  j["events"] = {arrival(0, "f1", {"fw"}), arrival(0, "f1", {"fw"})};
  EXPECT_SDM_ERROR(run_scenario(scenario_from_json(j)), ErrorCode::InvalidProblem);
}
