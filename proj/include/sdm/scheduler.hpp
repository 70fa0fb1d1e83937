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

#ifndef SDM_SCHEDULER_HPP
#define SDM_SCHEDULER_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sdm/lp.hpp"

namespace sdm {

struct Implementation {
  std::string id;
  std::vector<double> demand;  // per resource, per unit of flow
};

struct SdmSpec {
  std::string id;
  std::vector<Implementation> impls;
};

struct BoxSpec {
  std::string id;
  std::vector<double> capacity;     // Omega per resource
  std::vector<double> utilization;  // Gamma per resource, in [0,1]
  bool available = true;
};

struct FlowSpec {
  std::string id;
  double amount = 0.0;
  std::vector<std::size_t> chain;  // SDM indices in traversal order
};

struct SchedulingProblem {
  std::vector<std::string> resources;
  std::vector<BoxSpec> boxes;
  std::vector<SdmSpec> sdms;
  std::vector<FlowSpec> flows;

  std::size_t N() const { return boxes.size(); }
  std::size_t K() const { return sdms.size(); }
  std::size_t R() const { return resources.size(); }
  // Throws InvalidProblem. Scheduling against committed load may pass
  // bounded_utilization=false, since committed utilization can exceed 1.
  void validate(bool bounded_utilization = true) const;
};

SchedulingProblem problem_from_json(const nlohmann::json& j);
nlohmann::json problem_to_json(const SchedulingProblem& p);

// One chain position's placement.
struct Slot {
  std::size_t impl = 0;
  std::size_t box = 0;
  auto operator<=>(const Slot&) const = default;
};

// Allowed slots of SDM k: every implementation on every available box,
// ordered by (impl, box).
std::vector<Slot> slots_of(const SchedulingProblem& p, std::size_t k);

// Per flow, one slot per chain position. A flow without a path (rejected
// or infeasible) has admitted[f] == false and an empty path.
struct Assignment {
  std::vector<std::vector<Slot>> paths;
  std::vector<bool> admitted;
  double objective = 0.0;

  nlohmann::json to_json(const SchedulingProblem& p) const;
};

using Utilization = std::vector<std::vector<double>>;  // [box][resource]

// Gamma plus the load of every admitted flow.
Utilization utilization(const SchedulingProblem& p, const Assignment& a);
// Adds (sign=+1) or removes (sign=-1) one flow's load.
void apply_path(const SchedulingProblem& p, const FlowSpec& flow, const std::vector<Slot>& path,
                Utilization& u, double sign = 1.0);
double max_utilization(const Utilization& u);
// Max over available boxes of utilization().
double objective(const SchedulingProblem& p, const Assignment& a);

// Edge formulation: per flow, nodes (position, impl, box) plus virtual
// source and sink; edges join consecutive positions.
struct RuopModel {
  struct Node {
    std::size_t position = 0;
    Slot slot;
  };
  struct Edge {
    std::size_t flow = 0;
    std::optional<Node> from;  // nullopt: virtual source
    std::optional<Node> to;    // nullopt: virtual sink
  };
  LinearProgram lp;
  std::vector<Edge> edges;     // edges[v] is LP variable v
  std::size_t x_begin = 0;     // X_{k,i,n} variables follow the edges
  std::vector<std::pair<std::size_t, Slot>> x_index;  // (k, slot) per X variable
  std::size_t z = 0;           // objective variable
};

RuopModel build_ruop(const SchedulingProblem& p);

// Edge-model LP bound.
double ruop_lp_bound(const SchedulingProblem& p);

// Rounding threshold update.
double next_threshold(double eps, const std::vector<double>& fractional);

struct OfflineOptions {
  double epsilon = 0.2;
  std::size_t max_iterations = 1000;
  double integrality_tolerance = 1e-6;
};

struct OfflineResult {
  Assignment assignment;
  double lp_objective = 0.0;  // first relaxation
  std::size_t iterations = 0;
  std::size_t rollbacks = 0;
  std::size_t initial_variables = 0;
  std::vector<double> thresholds;  // epsilon used per iteration
};

// Progressive rounding. Throws Infeasible (no slot for some position) or
// NonConvergence.
OfflineResult offline_round(const SchedulingProblem& p, const OfflineOptions& options = {});

// Relaxation of the aggregated position model (equal to the edge-model bound).
double lp_bound(const SchedulingProblem& p);

struct OnlineOptions {
  std::size_t enumeration_limit = 10000;
  std::optional<double> admission_cap;
  OfflineOptions offline;
};

// Committed-utilization state for arrival-order scheduling. Boxes and SDMs
// come from the template problem; its flows are ignored.
class OnlineScheduler {
 public:
  explicit OnlineScheduler(SchedulingProblem base, OnlineOptions options = {});

  // Chooses and commits a path. Throws Infeasible when no path respects the
  // admission cap or some SDM has no available slot.
  std::vector<Slot> place(const FlowSpec& flow);
  // Best path without committing.
  std::vector<Slot> propose(const FlowSpec& flow) const;
  void commit(const FlowSpec& flow, const std::vector<Slot>& path);
  void release(const FlowSpec& flow, const std::vector<Slot>& path);
  void set_available(std::size_t box, bool up);

  const Utilization& committed() const { return committed_; }
  const SchedulingProblem& base() const { return base_; }
  double max_utilization() const;

 private:
  SchedulingProblem base_;
  OnlineOptions options_;
  Utilization committed_;
};

// Per-flow arrival order. Infeasible flows are left unadmitted.
Assignment online_schedule(const SchedulingProblem& p, const OnlineOptions& options = {});
// Batch hold: groups of batch_size flows solved jointly by offline_round
// against the committed utilization.
Assignment online_schedule_batch(const SchedulingProblem& p, std::size_t batch_size,
                                 const OnlineOptions& options = {});

inline constexpr double kBruteForceLimit = 1e6;

// Exhaustive optimum over unsplittable assignments; throws TooLarge when the
// joint path count exceeds the limit.
Assignment brute_force_optimal(const SchedulingProblem& p, double limit = kBruteForceLimit);

struct GeneratorConfig {
  std::size_t boxes = 10;
  std::size_t sdms = 6;
  std::size_t resources = 2;
  std::size_t flows = 100;
  std::size_t min_impls = 2, max_impls = 3;
  std::size_t min_chain = 1, max_chain = 5;
  double min_capacity = 50, max_capacity = 150;
  double min_gamma = 0.0, max_gamma = 0.1;
  double min_demand = 0.5, max_demand = 2.0;
  double min_amount = 0.05, max_amount = 0.5;
};

SchedulingProblem generate_problem(const GeneratorConfig& cfg, std::uint64_t seed);

}  // namespace sdm

#endif  // SDM_SCHEDULER_HPP
