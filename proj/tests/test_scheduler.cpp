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

#include <random>

#include "sdm/scheduler.hpp"
#include "util.hpp"

using namespace sdm;

namespace {

// Boxes with one resource; SDMs described by (demand per impl).
SchedulingProblem make_problem(const std::vector<std::pair<double, double>>& boxes,  // (capacity, gamma)
                               const std::vector<std::vector<double>>& sdm_demands,
                               const std::vector<std::pair<double, std::vector<std::size_t>>>& flows) {
  SchedulingProblem p;
  p.resources = {"cpu"};
  for (std::size_t n = 0; n < boxes.size(); ++n)
    p.boxes.push_back({"b" + std::to_string(n), {boxes[n].first}, {boxes[n].second}, true});
  for (std::size_t k = 0; k < sdm_demands.size(); ++k) {
    SdmSpec s{"s" + std::to_string(k), {}};
    for (std::size_t i = 0; i < sdm_demands[k].size(); ++i)
      s.impls.push_back({"i" + std::to_string(i), {sdm_demands[k][i]}});
    p.sdms.push_back(s);
  }
  for (std::size_t f = 0; f < flows.size(); ++f) p.flows.push_back({"f" + std::to_string(f), flows[f].first, flows[f].second});
  return p;
}

SchedulingProblem symmetric() { return make_problem({{10, 0}, {10, 0}}, {{4}}, {{1, {0}}, {1, {0}}}); }

void expect_unsplittable(const SchedulingProblem& p, const Assignment& a) {
  ASSERT_EQ(a.paths.size(), p.flows.size());
  for (std::size_t f = 0; f < p.flows.size(); ++f) {
    if (!a.admitted[f]) continue;
    ASSERT_EQ(a.paths[f].size(), p.flows[f].chain.size());
    for (std::size_t pos = 0; pos < a.paths[f].size(); ++pos) {
      const Slot s = a.paths[f][pos];
      EXPECT_LT(s.impl, p.sdms[p.flows[f].chain[pos]].impls.size());
      EXPECT_LT(s.box, p.N());
    }
  }
}

SchedulingProblem tiny_random(std::mt19937_64& rng) {
  GeneratorConfig c;
  c.boxes = 1 + rng() % 3;
  c.sdms = 1 + rng() % 3;
  c.resources = 1 + rng() % 2;
  c.flows = 1 + rng() % 4;
  c.min_impls = 1;
  c.max_impls = 2;
  c.max_chain = 2;
  c.min_amount = 5;
  c.max_amount = 30;
  return generate_problem(c, rng());
}

}  // namespace

TEST(Objective, Arithmetic) {
  SchedulingProblem p = make_problem({{10, 0.1}}, {{2}}, {{1, {0}}});
  Assignment empty{{{}}, {false}, 0};
  EXPECT_NEAR(objective(p, empty), 0.1, 1e-12);
  Assignment one{{{Slot{0, 0}}}, {true}, 0};
  EXPECT_NEAR(objective(p, one), 0.3, 1e-12);
  Utilization u = utilization(p, one);
  EXPECT_NEAR(u[0][0], 0.3, 1e-12);
  EXPECT_NEAR(max_utilization(u), 0.3, 1e-12);
}

TEST(Ruop, EdgeCount) {
  SchedulingProblem p = make_problem({{10, 0}, {10, 0}}, {{1, 2}, {1, 2}}, {{1, {0, 1}}});
  RuopModel m = build_ruop(p);
  EXPECT_EQ(m.edges.size(), 24u);
  std::size_t src = 0, sink = 0;
  for (const auto& e : m.edges) {
    src += !e.from;
    sink += !e.to;
  }
  EXPECT_EQ(src, 4u);
  EXPECT_EQ(sink, 4u);

  SchedulingProblem single = make_problem({{10, 0}, {10, 0}, {10, 0}}, {{1}}, {{1, {0}}});
  EXPECT_EQ(build_ruop(single).edges.size(), 6u);
  EXPECT_EQ(slots_of(single, 0).size(), 3u);
}

TEST(Ruop, NoFlows) {
  SchedulingProblem p = make_problem({{10, 0.2}, {10, 0.6}}, {{1}}, {});
  RuopModel m = build_ruop(p);
  EXPECT_TRUE(m.edges.empty());
  EXPECT_EQ(m.lp.variable_count(), m.z + 1);
  EXPECT_NEAR(ruop_lp_bound(p), 0.6, 1e-12);
  EXPECT_NEAR(offline_round(p).assignment.objective, 0.6, 1e-12);
  EXPECT_NEAR(brute_force_optimal(p).objective, 0.6, 1e-12);
}

TEST(Ruop, SymmetricInstance) {
  SchedulingProblem p = symmetric();
  EXPECT_NEAR(ruop_lp_bound(p), 0.4, 1e-9);
  EXPECT_NEAR(lp_bound(p), 0.4, 1e-9);
  OfflineResult off = offline_round(p);
  EXPECT_NEAR(off.assignment.objective, 0.4, 1e-9);
  EXPECT_NE(off.assignment.paths[0][0].box, off.assignment.paths[1][0].box);
  EXPECT_NEAR(brute_force_optimal(p).objective, 0.4, 1e-9);
}

TEST(Ruop, LpBoundsAgreeAcrossFormulations) {
  std::mt19937_64 rng(31);
  for (int i = 0; i < 60; ++i) {
    SchedulingProblem p = tiny_random(rng);
    ASSERT_NEAR(ruop_lp_bound(p), lp_bound(p), 1e-7) << i;
  }
}

TEST(Threshold, UpdateRule) {
  EXPECT_DOUBLE_EQ(next_threshold(0.2, {0.05, 0.5}), 0.2);
  EXPECT_DOUBLE_EQ(next_threshold(0.2, {0.5, 0.5}), 0.5 + 1e-9);
  EXPECT_DOUBLE_EQ(next_threshold(0.2, {0.7, 0.3}), 0.3 + 1e-9);
  EXPECT_DOUBLE_EQ(next_threshold(0.2, {}), 0.2);
}

TEST(Offline, GammaDominance) {
  SchedulingProblem p = make_problem({{10, 0.5}, {10, 0.1}}, {{1}}, {{1, {0}}});
  OfflineResult r = offline_round(p);
  EXPECT_EQ(r.assignment.paths[0][0].box, 1u);
  EXPECT_NEAR(r.assignment.objective, 0.5, 1e-12);
}

TEST(Offline, IntegralLpMatchesRecomputedObjective) {
  SchedulingProblem p = make_problem({{10, 0.3}, {20, 0.0}}, {{2, 6}}, {{1, {0}}});
  OfflineResult r = offline_round(p);
  EXPECT_EQ(r.iterations, 1u);
  EXPECT_NEAR(r.lp_objective, r.assignment.objective, 1e-7);
  EXPECT_NEAR(r.assignment.objective, 0.3, 1e-9);
}

TEST(Offline, SandwichAndInvariants) {
  std::mt19937_64 rng(99);
  for (int i = 0; i < 100; ++i) {
    SchedulingProblem p = tiny_random(rng);
    OfflineResult r = offline_round(p);
    Assignment best = brute_force_optimal(p);
    expect_unsplittable(p, r.assignment);
    EXPECT_LE(r.lp_objective, best.objective + 1e-6) << i;
    EXPECT_LE(best.objective, r.assignment.objective + 1e-6) << i;
    EXPECT_LE(r.iterations, r.initial_variables);
    EXPECT_NEAR(r.assignment.objective, objective(p, r.assignment), 1e-12);
    for (std::size_t t = 1; t < r.thresholds.size(); ++t) EXPECT_GE(r.thresholds[t], r.thresholds[t - 1]);
  }
}

TEST(Offline, DeterministicOnGeneratedInstance) {
  GeneratorConfig c;
  c.flows = 60;
  SchedulingProblem p = generate_problem(c, 7);
  EXPECT_EQ(problem_to_json(p), problem_to_json(generate_problem(c, 7)));
  OfflineResult a = offline_round(p), b = offline_round(p);
  EXPECT_EQ(a.assignment.to_json(p), b.assignment.to_json(p));
  expect_unsplittable(p, a.assignment);
  EXPECT_LE(a.assignment.objective, a.lp_objective * 1.05);
}

TEST(Online, AlternatesOnSymmetricInstance) {
  SchedulingProblem p = symmetric();
  OnlineScheduler s(p);
  auto first = s.place(p.flows[0]);
  auto second = s.place(p.flows[1]);
  EXPECT_NE(first[0].box, second[0].box);
  EXPECT_NEAR(s.max_utilization(), 0.4, 1e-12);
  Assignment a = online_schedule(p);
  EXPECT_NEAR(a.objective, 0.4, 1e-12);
}

TEST(Online, SingleFlowIntoEmptySystem) {
  std::mt19937_64 rng(12);
  OnlineOptions via_offline;
  via_offline.enumeration_limit = 0;
  for (int i = 0; i < 30; ++i) {
    SchedulingProblem p = tiny_random(rng);
    p.flows.resize(1);
    const double off = offline_round(p).assignment.objective;
    EXPECT_NEAR(online_schedule(p, via_offline).objective, off, 1e-12) << i;
    // Enumeration is exact, so it can only improve on rounding.
    const double enumerated = online_schedule(p).objective;
    EXPECT_NEAR(enumerated, brute_force_optimal(p).objective, 1e-9) << i;
    EXPECT_LE(enumerated, off + 1e-12) << i;
  }
}

TEST(Online, ReleaseRestoresUtilization) {
  SchedulingProblem p = make_problem({{10, 0.1}, {10, 0.2}}, {{1, 3}}, {{2, {0}}});
  OnlineScheduler s(p);
  const Utilization before = s.committed();
  auto path = s.place(p.flows[0]);
  EXPECT_GT(s.max_utilization(), 0.2);
  s.release(p.flows[0], path);
  for (std::size_t n = 0; n < 2; ++n) EXPECT_NEAR(s.committed()[n][0], before[n][0], 1e-12);
}

TEST(Online, AdmissionCapAndFailedBoxes) {
  SchedulingProblem p = make_problem({{10, 0}, {10, 0}}, {{6}}, {{1, {0}}, {1, {0}}, {1, {0}}});
  OnlineOptions o;
  o.admission_cap = 1.0;
  Assignment a = online_schedule(p, o);
  EXPECT_EQ(std::count(a.admitted.begin(), a.admitted.end(), true), 2);
  EXPECT_FALSE(a.admitted[2]);

  OnlineScheduler s(p);
  s.set_available(0, false);
  EXPECT_EQ(s.place(p.flows[0])[0].box, 1u);
  s.set_available(1, false);
  EXPECT_SDM_ERROR(s.place(p.flows[1]), ErrorCode::Infeasible);

  p.boxes[0].available = false;
  OfflineResult r = offline_round(p);
  for (const auto& path : r.assignment.paths) EXPECT_EQ(path[0].box, 1u);
}

TEST(Online, BatchModeAdmitsAll) {
  GeneratorConfig c;
  c.flows = 40;
  SchedulingProblem p = generate_problem(c, 3);
  Assignment a = online_schedule_batch(p, 10);
  expect_unsplittable(p, a);
  EXPECT_EQ(std::count(a.admitted.begin(), a.admitted.end(), true), 40);
  EXPECT_GE(a.objective + 1e-9, offline_round(p).lp_objective);
}

TEST(BruteForce, LimitsAndTies) {
  GeneratorConfig c;
  c.flows = 12;
  EXPECT_SDM_ERROR(brute_force_optimal(generate_problem(c, 1)), ErrorCode::TooLarge);
  SchedulingProblem one = make_problem({{10, 0}}, {{1}}, {{1, {0}}});
  Assignment a = brute_force_optimal(one);
  EXPECT_EQ(a.paths[0], (std::vector<Slot>{{0, 0}}));
  // Equal boxes: the lowest path index wins.
  EXPECT_EQ(brute_force_optimal(symmetric()).paths[0][0].box, 0u);
}

TEST(Problem, JsonRoundTripAndValidation) {
  GeneratorConfig c;
  c.flows = 8;
  SchedulingProblem p = generate_problem(c, 5);
  const auto j = problem_to_json(p);
  EXPECT_EQ(problem_to_json(problem_from_json(j)), j);

  auto bad = j;
  bad["boxes"][0]["capacity"]["r0"] = 0;
  EXPECT_SDM_ERROR(problem_from_json(bad).validate(), ErrorCode::InvalidProblem);
  bad = j;
  bad["boxes"][0]["utilization"]["r0"] = 1.5;
  EXPECT_SDM_ERROR(problem_from_json(bad).validate(), ErrorCode::InvalidProblem);
  bad = j;
  bad["flows"][0]["chain"] = {"nope"};
  EXPECT_SDM_ERROR(problem_from_json(bad), ErrorCode::InvalidProblem);
  bad = j;
  bad["sdms"][0]["impls"] = nlohmann::json::array();
  EXPECT_SDM_ERROR(problem_from_json(bad).validate(), ErrorCode::InvalidProblem);
}
