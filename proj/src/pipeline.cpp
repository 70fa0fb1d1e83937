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

#include "sdm/pipeline.hpp"

#include <algorithm>

namespace sdm {

nlohmann::json PipelineStats::to_json() const {
  return {{"injected", injected}, {"emitted", emitted}, {"discarded", discarded},
          {"dropped", dropped},   {"faulted", faulted}, {"unmatched", unmatched}};
}

void EventSink::append(const std::string& pipeline, const std::vector<LoggedEvent>& batch) {
  std::lock_guard lock(mutex_);
  for (const auto& e : batch) records_.emplace_back(pipeline, e);
}

std::vector<std::pair<std::string, LoggedEvent>> EventSink::snapshot() const {
  std::lock_guard lock(mutex_);
  return records_;
}

std::vector<TraceRecord> RunResult::output_trace() const {
  std::vector<TraceRecord> out;
  out.reserve(outputs.size());
  for (const auto& o : outputs) {
    const ByteView d = o.packet.data();
    out.push_back({o.tick, o.device, Bytes(d.begin(), d.end())});
  }
  return out;
}

nlohmann::json RunResult::counters_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [name, c] : counters) {
    j[name] = {{"received", c.received}, {"forwarded", c.forwarded}, {"dropped", c.dropped},
               {"held", c.held},         {"faults", c.faults},       {"events", c.events}};
  }
  return j;
}

Pipeline::Pipeline(ActionGraph graph, std::string name) : graph_(std::move(graph)), name_(std::move(name)) {
  const auto report = validate_graph(graph_);
  if (!report.ok) {
    const auto& e = report.errors.front();
    throw Error(ErrorCode::InvalidArgument,
                "graph fails validation: " + e.kind + (e.node.empty() ? "" : " at " + e.node) + ": " + e.message);
  }
  const std::size_t n = graph_.nodes.size();
  topo_ = graph_.topological_order();
  topo_pos_.assign(n, 0);
  for (std::size_t i = 0; i < topo_.size(); ++i) topo_pos_[topo_[i]] = i;
  out_edge_.resize(n);
  for (std::size_t i = 0; i < n; ++i) out_edge_[i].assign(graph_.nodes[i].action->outputs(), std::nullopt);
  for (std::size_t e = 0; e < graph_.edges.size(); ++e) {
    out_edge_[graph_.edges[e].src][graph_.edges[e].src_port] = e;
  }
  for (auto& node : graph_.nodes) counters_[node.name];
  for (auto& node : graph_.nodes) counter_ptr_.push_back(&counters_[node.name]);

  // An ending action pulls from the nearest scheduler reached by walking up
  // through straight actions.
  for (std::size_t idx : topo_) {
    const Action& a = *graph_.nodes[idx].action;
    if (a.category() != Category::Ending || a.pull_budget() == 0) continue;
    std::size_t cur = idx;
    for (;;) {
      auto in = std::find_if(graph_.edges.begin(), graph_.edges.end(),
                             [&](const GraphEdge& e) { return e.dst == cur; });
      if (in == graph_.edges.end()) break;
      const Category c = graph_.nodes[in->src].action->category();
      if (c == Category::ManyToOne) {
        pullers_.emplace_back(idx, in->src);
        break;
      }
      if (c != Category::OneToOne) break;
      cur = in->src;
    }
  }
}

void Pipeline::start() {
  for (auto& n : graph_.nodes) n.action->start();
}

void Pipeline::collect(std::size_t node, ActionContext& ctx) {
  auto& ev = ctx.events();
  counter_ptr_[node]->events += ev.size();
  for (auto& e : ev) tick_events_.emplace_back(topo_pos_[node], std::move(e));
  ev.clear();
}

void Pipeline::fault(std::size_t node, const Error& e, std::optional<std::uint64_t> ordinal) {
  ++stats_.faulted;
  ++counter_ptr_[node]->faults;
  faults_.push_back({tick_, graph_.nodes[node].name, ordinal, e.code(),
                     graph_.nodes[node].name + (ordinal ? " packet " + std::to_string(*ordinal) : "") + ": " +
                         e.what()});
}

void Pipeline::forward(std::size_t node, std::size_t out_port, Packet&& packet,
                       std::optional<std::uint64_t> ordinal) {
  const auto& slot = out_edge_[node];
  if (out_port >= slot.size() || !slot[out_port]) {
    fault(node, Error(ErrorCode::RuntimeFault, "egress port " + std::to_string(out_port) + " out of range"),
          ordinal);
    return;
  }
  ++counter_ptr_[node]->forwarded;
  const GraphEdge& e = graph_.edges[*slot[out_port]];
  push(e.dst, e.dst_port, std::move(packet), ordinal);
}

void Pipeline::push(std::size_t node, std::size_t in_port, Packet&& packet,
                    std::optional<std::uint64_t> ordinal) {
  Action& a = *graph_.nodes[node].action;
  ++counter_ptr_[node]->received;
  ActionContext ctx(graph_.nodes[node].name);
  if (a.category() == Category::ManyToOne) {
    bool ok = false;
    try {
      std::lock_guard lock(a.mutex());
      ok = a.enqueue(in_port, std::move(packet), ctx);
    } catch (const Error& e) {
      collect(node, ctx);
      fault(node, e, ordinal);
      return;
    }
    collect(node, ctx);
    if (!ok) {
      ++stats_.dropped;
      ++counter_ptr_[node]->dropped;
    }
    return;
  }
  std::optional<std::size_t> port;
  try {
    std::lock_guard lock(a.mutex());
    port = a.process(packet, ctx);
  } catch (const Error& e) {
    collect(node, ctx);
    fault(node, e, ordinal);
    return;
  }
  collect(node, ctx);
  if (a.category() == Category::Ending) {
    if (auto dev = a.device()) {
      ++stats_.emitted;
      outputs_.push_back({tick_, *dev, std::move(packet)});
    } else {
      ++stats_.discarded;
    }
    return;
  }
  if (!port) {
    if (ctx.held()) {
      ++counter_ptr_[node]->held;
    } else {
      ++stats_.dropped;
      ++counter_ptr_[node]->dropped;
    }
    return;
  }
  forward(node, *port, std::move(packet), ordinal);
}

void Pipeline::begin_tick(std::uint64_t tick) {
  tick_ = tick;
  for (std::size_t idx : topo_) {
    Action& a = *graph_.nodes[idx].action;
    std::vector<Packet> released;
    {
      std::lock_guard lock(a.mutex());
      released = a.take_released();
    }
    for (auto& p : released) forward(idx, 0, std::move(p), std::nullopt);
  }
}

void Pipeline::inject(std::uint64_t device, Packet packet) {
  bool matched = false;
  for (std::size_t idx : topo_) {
    const Action& a = *graph_.nodes[idx].action;
    if (a.category() != Category::Starting || a.device() != device) continue;
    matched = true;
    ++stats_.injected;
    push(idx, 0, std::move(packet), next_ordinal_++);
    break;
  }
  if (!matched) ++stats_.unmatched;
}

void Pipeline::end_tick() {
  for (const auto& [ending, sched] : pullers_) {
    Action& s = *graph_.nodes[sched].action;
    const std::size_t budget = graph_.nodes[ending].action->pull_budget();
    for (std::size_t i = 0; i < budget; ++i) {
      ActionContext ctx(graph_.nodes[sched].name);
      std::optional<Packet> p;
      try {
        std::lock_guard lock(s.mutex());
        p = s.pull(ctx);
      } catch (const Error& e) {
        collect(sched, ctx);
        fault(sched, e, std::nullopt);
        break;
      }
      collect(sched, ctx);
      if (!p) break;
      forward(sched, 0, std::move(*p), std::nullopt);
    }
  }
  std::stable_sort(tick_events_.begin(), tick_events_.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<LoggedEvent> batch;
  for (auto& [pos, e] : tick_events_) batch.push_back({tick_, pos, std::move(e)});
  tick_events_.clear();
  if (sink_) sink_->append(name_, batch);
  events_.insert(events_.end(), std::make_move_iterator(batch.begin()), std::make_move_iterator(batch.end()));
}

std::vector<OutputRecord> Pipeline::take_outputs() {
  std::vector<OutputRecord> out;
  out.swap(outputs_);
  return out;
}

std::vector<LoggedEvent> Pipeline::take_events() {
  std::vector<LoggedEvent> out;
  out.swap(events_);
  return out;
}

std::vector<FaultRecord> Pipeline::take_faults() {
  std::vector<FaultRecord> out;
  out.swap(faults_);
  return out;
}

std::uint64_t Pipeline::retained() const {
  std::uint64_t n = 0;
  for (const auto& node : graph_.nodes) {
    std::lock_guard lock(node.action->mutex());
    n += node.action->retained();
  }
  return n;
}

bool Pipeline::has_pending() const {
  for (const auto& [ending, sched] : pullers_) {
    std::lock_guard lock(graph_.nodes[sched].action->mutex());
    if (graph_.nodes[sched].action->has_pending()) return true;
  }
  return false;
}

RunResult Pipeline::run(const std::vector<TraceRecord>& trace, std::optional<std::uint64_t> ticks) {
  std::vector<std::size_t> order(trace.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return trace[a].ts < trace[b].ts; });
  std::uint64_t last = 0;
  for (const auto& r : trace) last = std::max(last, r.ts);
  constexpr std::uint64_t kDrainLimit = 1000000;
  std::size_t next = 0;
  std::uint64_t t = 0;
  for (;; ++t) {
    if (ticks) {
      if (t >= *ticks) break;
    } else if (t > last && (next == order.size()) && !has_pending()) {
      break;
    } else if (t > last + kDrainLimit) {
      break;
    }
    begin_tick(t);
    while (next < order.size() && trace[order[next]].ts == t) {
      const TraceRecord& r = trace[order[next++]];
      inject(r.port, Packet(r.bytes, Packet::kDefaultReserve, Packet::kDefaultReserve, r.port, r.ts));
    }
    // records with a timestamp before the current tick only occur when the
    // caller asked for fewer ticks; they stay uninjected
    end_tick();
  }
  RunResult res;
  res.outputs = take_outputs();
  res.events = take_events();
  res.faults = take_faults();
  res.stats = stats_;
  res.retained = retained();
  res.ticks = t;
  res.counters = counters_;
  return res;
}

}  // namespace sdm
