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

#ifndef SDM_PIPELINE_HPP
#define SDM_PIPELINE_HPP

#include <cstddef>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sdm/error.hpp"
#include "sdm/graph.hpp"
#include "sdm/packet.hpp"
#include "sdm/trace.hpp"

namespace sdm {

struct OutputRecord {
  std::uint64_t tick = 0;
  std::uint64_t device = 0;
  Packet packet;
};

struct LoggedEvent {
  std::uint64_t tick = 0;
  std::size_t topo_index = 0;
  Event event;
  bool operator==(const LoggedEvent&) const = default;
};

struct FaultRecord {
  std::uint64_t tick = 0;
  std::string instance;
  std::optional<std::uint64_t> packet_ordinal;  // unknown for pulled packets
  ErrorCode code{};
  std::string message;
};

struct ActionCounters {
  std::uint64_t received = 0;
  std::uint64_t forwarded = 0;
  std::uint64_t dropped = 0;
  std::uint64_t held = 0;
  std::uint64_t faults = 0;
  std::uint64_t events = 0;
};

struct PipelineStats {
  std::uint64_t injected = 0;
  std::uint64_t emitted = 0;
  std::uint64_t discarded = 0;  // reached a non-device sink
  std::uint64_t dropped = 0;    // consumed by an action or rejected by a full queue
  std::uint64_t faulted = 0;
  std::uint64_t unmatched = 0;  // trace records for a device no FromDevice reads

  nlohmann::json to_json() const;
};

// Appends from many pipelines; each batch keeps its pipeline's order.
class EventSink {
 public:
  void append(const std::string& pipeline, const std::vector<LoggedEvent>& batch);
  std::vector<std::pair<std::string, LoggedEvent>> snapshot() const;

 private:
  mutable std::mutex mutex_;
  std::vector<std::pair<std::string, LoggedEvent>> records_;
};

struct RunResult {
  std::vector<OutputRecord> outputs;
  std::vector<LoggedEvent> events;
  std::vector<FaultRecord> faults;
  PipelineStats stats;
  std::uint64_t retained = 0;
  std::uint64_t ticks = 0;

  std::vector<TraceRecord> output_trace() const;
  nlohmann::json counters_json() const;
  std::map<std::string, ActionCounters> counters;
};

// Tick-driven execution of a validated graph. Per tick: packets released by
// actions are re-pushed, trace packets are injected and pushed to
// completion, then every pull-capable ending action pulls from its upstream
// scheduler. Events of a tick are ordered by topological position.
class Pipeline {
 public:
  // Throws InvalidArgument carrying the first validation error.
  explicit Pipeline(ActionGraph graph, std::string name = "pipeline");

  const ActionGraph& graph() const { return graph_; }
  Action& action(std::string_view name) { return graph_.action(name); }
  // Ends the configuration phase of every action.
  void start();

  void begin_tick(std::uint64_t tick);
  // Injects at every FromDevice bound to device (normally exactly one).
  void inject(std::uint64_t device, Packet packet);
  void end_tick();

  std::vector<OutputRecord> take_outputs();
  std::vector<LoggedEvent> take_events();
  std::vector<FaultRecord> take_faults();

  const PipelineStats& stats() const { return stats_; }
  const std::map<std::string, ActionCounters>& counters() const { return counters_; }
  std::uint64_t retained() const;
  bool has_pending() const;

  void set_event_sink(EventSink* sink) { sink_ = sink; }

  // Runs ticks 0..ticks-1. Without a tick count it runs through the last
  // trace timestamp and keeps ticking while schedulers still hold packets.
  RunResult run(const std::vector<TraceRecord>& trace, std::optional<std::uint64_t> ticks = std::nullopt);

 private:
  void push(std::size_t node, std::size_t in_port, Packet&& packet, std::optional<std::uint64_t> ordinal);
  void forward(std::size_t node, std::size_t out_port, Packet&& packet, std::optional<std::uint64_t> ordinal);
  void fault(std::size_t node, const Error& e, std::optional<std::uint64_t> ordinal);
  void collect(std::size_t node, ActionContext& ctx);

  ActionGraph graph_;
  std::string name_;
  std::vector<std::size_t> topo_;
  std::vector<std::size_t> topo_pos_;
  // (node, out_port) -> edge index
  std::vector<std::vector<std::optional<std::size_t>>> out_edge_;
  // ending node -> scheduler it pulls from
  std::vector<std::pair<std::size_t, std::size_t>> pullers_;
  std::vector<ActionCounters*> counter_ptr_;
  std::map<std::string, ActionCounters> counters_;
  PipelineStats stats_;
  std::uint64_t tick_ = 0;
  std::uint64_t next_ordinal_ = 0;
  std::vector<std::pair<std::size_t, Event>> tick_events_;
  std::vector<OutputRecord> outputs_;
  std::vector<LoggedEvent> events_;
  std::vector<FaultRecord> faults_;
  EventSink* sink_ = nullptr;
};

}  // namespace sdm

#endif  // SDM_PIPELINE_HPP
