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

#ifndef SDM_CONTROLLER_HPP
#define SDM_CONTROLLER_HPP

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sdm/action.hpp"
#include "sdm/chain.hpp"
#include "sdm/registry.hpp"
#include "sdm/scheduler.hpp"

namespace sdm {

struct TrafficSpec {
  std::uint64_t packets = 100;
  std::uint64_t rate = 1;  // packets per tick
  std::size_t size = 64;   // frame bytes
};

// Data-plane program of one SDM implementation.
struct ImplProgram {
  std::string script;  // empty: pass-through counter
  Bindings bindings;
};

enum class SimEventType { Arrival, Departure, Failure, Mutation };

struct ScenarioEvent {
  std::uint64_t time = 0;
  SimEventType type = SimEventType::Arrival;
  FlowSpec flow;                    // Arrival
  TrafficSpec traffic;              // Arrival
  std::string flow_id;              // Departure, Mutation
  std::string box_id;               // Failure
  std::vector<std::size_t> chain;   // Mutation
};

struct SimPolicy {
  OnlineOptions online;
  bool full_reoptimize_on_failure = false;
  std::uint64_t ticks_per_event = 10;  // ticks per scenario time unit
  std::uint64_t drain_ticks = 100000;  // limit after the last event
};

struct Scenario {
  SchedulingProblem topology;  // boxes and SDMs; flows come from events
  std::vector<std::vector<ImplProgram>> programs;  // [sdm][impl]
  std::vector<ScenarioEvent> events;
  SimPolicy policy;
};

// Throws InvalidProblem on malformed input or unresolved references.
Scenario scenario_from_json(const nlohmann::json& j);

struct SteeringHop {
  std::size_t box = 0;
  std::size_t dp = 0;
  bool operator==(const SteeringHop&) const = default;
};
using SteeringTable = std::map<std::string, std::vector<SteeringHop>>;

struct FlowMetrics {
  std::string id;
  bool admitted = false;
  std::uint64_t injected = 0;
  std::uint64_t delivered = 0;
  std::uint64_t dropped = 0;
  std::uint64_t in_flight = 0;
  std::uint64_t reordered = 0;
  std::uint64_t reassignments = 0;
  std::map<std::size_t, std::uint64_t> delivered_by_sdm_count;
};

struct UtilizationSample {
  std::uint64_t tick = 0;
  Utilization values;
};

struct Metrics {
  std::uint64_t ticks = 0;
  double max_utilization = 0.0;
  std::uint64_t reconfigurations = 0;
  std::uint64_t actions = 0;
  bool coherent = true;
  std::vector<UtilizationSample> utilization;
  std::vector<FlowMetrics> flows;  // arrival order
  std::vector<std::string> infeasible;
  std::vector<nlohmann::json> log;

  const FlowMetrics* flow(std::string_view id) const;
  nlohmann::json to_json(const SchedulingProblem& topology) const;
};

class Controller {
 public:
  explicit Controller(const Scenario& scenario);

  void apply(const ScenarioEvent& event);
  // One data-plane tick: inject, step every live shim, forward egress.
  void tick();
  std::uint64_t now() const { return tick_; }
  bool quiescent() const;

  // Gamma0 plus committed flow load.
  Utilization monitor() const;
  // Diff-based application of the committed assignment; returns the
  // actions performed ("start", "steer", "clear", "retire").
  std::vector<std::string> enforce();
  // Steering table equals the committed paths.
  bool coherent() const;

  const SteeringTable& steering() const { return steering_; }
  // Committed assignment over currently admitted, active flows.
  std::pair<SchedulingProblem, Assignment> committed() const;
  BoxShim* shim(std::size_t box);
  bool failed(std::size_t box) const { return failed_.at(box); }
  std::size_t live_dp_count(std::size_t box) const;

  Metrics metrics() const;

 private:
  struct Segment {
    std::size_t box = 0;
    FlowKey key = 0;
    std::vector<std::size_t> dps;
  };
  struct FlowState {
    FlowSpec spec;
    TrafficSpec traffic;
    std::size_t index = 0;
    bool active = true;
    bool admitted = false;
    std::vector<Slot> path;
    std::uint32_t version = 0;
    std::map<std::uint32_t, std::vector<Segment>> segments;  // per steering version
    std::map<std::uint32_t, std::uint64_t> in_flight;
    FlowMetrics m;
    std::optional<std::uint64_t> last_seq;
  };
  struct DpRef {
    std::size_t sdm = 0, impl = 0;
    auto operator<=>(const DpRef&) const = default;
  };

  FlowState* find_flow(const std::string& id);
  void place(FlowState& f);
  void unplace(FlowState& f);
  std::vector<SteeringHop> desired_hops(const FlowState& f) const;
  std::unique_ptr<Pipeline> make_pipeline(std::size_t sdm, std::size_t impl) const;
  void housekeeping(std::vector<std::string>& actions);
  void forward(FlowState& f, std::uint32_t version, std::size_t segment, Packet&& packet, std::size_t sdms);
  void finish(FlowState& f, std::uint32_t version);
  void sample();
  void log(nlohmann::json entry);

  Scenario scenario_;
  Registry registry_;
  OnlineScheduler scheduler_;
  std::vector<std::unique_ptr<BoxShim>> shims_;
  std::vector<bool> failed_;
  std::vector<std::map<DpRef, std::size_t>> dp_of_;        // live DPs per box
  std::vector<std::map<std::size_t, DpRef>> retiring_;    // dp id -> ref
  std::vector<std::unique_ptr<FlowState>> flows_;
  std::map<std::string, std::size_t> flow_index_;
  SteeringTable steering_;
  std::uint64_t tick_ = 0;
  std::uint64_t reconfigurations_ = 0;
  std::uint64_t actions_ = 0;
  bool coherent_ = true;
  std::vector<UtilizationSample> samples_;
  std::vector<std::string> infeasible_;
  std::vector<nlohmann::json> log_;
};

Metrics run_scenario(const Scenario& scenario);

}  // namespace sdm

#endif  // SDM_CONTROLLER_HPP
