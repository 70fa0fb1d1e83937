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

#include "sdm/controller.hpp"

#include <algorithm>

#include "sdm/checksum.hpp"
#include "sdm/error.hpp"
#include "sdm/graph.hpp"
#include "sdm/pipeline.hpp"
#include "sdm/script.hpp"

namespace sdm {

using nlohmann::json;

namespace {

constexpr const char* kDefaultProgram =
    "@ FromDevice(0) in\n"
    "@ PacketCounter count\n"
    "@ ToDevice(0) out\n"
    "in 0 0 count\n"
    "count 0 0 out\n";

constexpr const char* kMetaSeq = "sim.seq";
constexpr const char* kMetaSdms = "sim.sdms";

FlowKey make_key(std::size_t flow, std::uint32_t version, std::size_t segment) {
  return (static_cast<FlowKey>(flow) << 32) | (static_cast<FlowKey>(version & 0xffffff) << 8) |
         static_cast<FlowKey>(segment & 0xff);
}
std::size_t key_flow(FlowKey k) { return static_cast<std::size_t>(k >> 32); }
std::uint32_t key_version(FlowKey k) { return static_cast<std::uint32_t>((k >> 8) & 0xffffff); }
std::size_t key_segment(FlowKey k) { return static_cast<std::size_t>(k & 0xff); }

// Ethernet / IPv4 / UDP frame tagged with the flow index and sequence.
Packet synth_packet(std::size_t flow, std::uint64_t seq, std::size_t size) {
  size = std::max<std::size_t>(size, 46);
  Bytes b(size, 0);
  const std::uint8_t dst[6] = {0x02, 0, 0, 0, 0, 0x02}, src[6] = {0x02, 0, 0, 0, 0, 0x01};
  std::copy(dst, dst + 6, b.begin());
  std::copy(src, src + 6, b.begin() + 6);
  store_be16(&b[12], 0x0800);
  b[14] = 0x45;
  store_be16(&b[16], static_cast<std::uint16_t>(size - 14));
  store_be16(&b[18], static_cast<std::uint16_t>(seq));
  b[22] = 64;
  b[23] = 17;
  store_be32(&b[26], 0x0a000001u | (static_cast<std::uint32_t>(flow & 0xffff) << 8));
  store_be32(&b[30], 0xc0a80001u);
  store_be16(&b[24], internet_checksum(ByteView(b).subspan(14, 20)));
  store_be16(&b[34], static_cast<std::uint16_t>(1024 + flow % 60000));
  store_be16(&b[36], 80);
  store_be16(&b[38], static_cast<std::uint16_t>(size - 34));
  store_be32(&b[42], static_cast<std::uint32_t>(seq));
  Packet p(b);
  p.write_meta(kMetaSeq, ValueType::U32, static_cast<std::uint32_t>(seq));
  p.write_meta(kMetaSdms, ValueType::U16, std::uint32_t{0});
  return p;
}

std::size_t index_of_box(const SchedulingProblem& p, const std::string& id) {
  for (std::size_t n = 0; n < p.N(); ++n)
    if (p.boxes[n].id == id) return n;
  throw Error(ErrorCode::InvalidProblem, "unknown box " + id);
}

std::vector<std::size_t> chain_of(const SchedulingProblem& p, const json& ids) {
  std::vector<std::size_t> out;
  for (const auto& c : ids) {
    const std::string id = c.is_string() ? c.get<std::string>() : c.dump();
    std::size_t k = 0;
    while (k < p.K() && p.sdms[k].id != id) ++k;
    if (k == p.K()) throw Error(ErrorCode::InvalidProblem, "unknown sdm " + id);
    out.push_back(k);
  }
  return out;
}

}  // namespace

Scenario scenario_from_json(const json& j) {
  try {
    Scenario s;
    json topo = j;
    topo["flows"] = json::array();
    s.topology = problem_from_json(topo);
    for (const auto& sd : j.at("sdms")) {
      std::vector<ImplProgram> progs;
      for (const auto& im : sd.at("impls")) {
        ImplProgram prog;
        prog.script = im.value("script", std::string());
        if (im.contains("bindings"))
          for (auto it = im["bindings"].begin(); it != im["bindings"].end(); ++it)
            prog.bindings[it.key()] = it.value().is_string() ? it.value().get<std::string>() : it.value().dump();
        progs.push_back(std::move(prog));
      }
      s.programs.push_back(std::move(progs));
    }
    if (j.contains("policy")) {
      const auto& pol = j["policy"];
      s.policy.full_reoptimize_on_failure = pol.value("reschedule", std::string("online")) == "full";
      s.policy.ticks_per_event = pol.value("ticks_per_event", s.policy.ticks_per_event);
      s.policy.drain_ticks = pol.value("drain_ticks", s.policy.drain_ticks);
      if (pol.contains("admission_cap")) s.policy.online.admission_cap = pol["admission_cap"].get<double>();
      if (pol.contains("epsilon")) s.policy.online.offline.epsilon = pol["epsilon"].get<double>();
    }
    std::uint64_t last = 0;
    for (const auto& e : j.value("events", json::array())) {
      ScenarioEvent ev;
      ev.time = e.at("time").get<std::uint64_t>();
      if (ev.time < last) throw Error(ErrorCode::InvalidProblem, "event times must be nondecreasing");
      last = ev.time;
      const std::string type = e.at("type").get<std::string>();
      if (type == "arrival") {
        ev.type = SimEventType::Arrival;
        const auto& f = e.at("flow");
        ev.flow.id = f.at("id").is_string() ? f.at("id").get<std::string>() : f.at("id").dump();
        ev.flow.amount = f.at("amount").get<double>();
        ev.flow.chain = chain_of(s.topology, f.at("chain"));
        if (!(ev.flow.amount >= 0)) throw Error(ErrorCode::InvalidProblem, "flow " + ev.flow.id + ": negative amount");
        if (e.contains("traffic")) {
          const auto& t = e["traffic"];
          ev.traffic.packets = t.value("packets", ev.traffic.packets);
          ev.traffic.rate = t.value("rate", ev.traffic.rate);
          ev.traffic.size = t.value("size", ev.traffic.size);
        }
      } else if (type == "departure") {
        ev.type = SimEventType::Departure;
        ev.flow_id = e.at("flow").get<std::string>();
      } else if (type == "failure") {
        ev.type = SimEventType::Failure;
        ev.box_id = e.at("box").get<std::string>();
        index_of_box(s.topology, ev.box_id);
      } else if (type == "mutation") {
        ev.type = SimEventType::Mutation;
        ev.flow_id = e.at("flow").get<std::string>();
        ev.chain = chain_of(s.topology, e.at("chain"));
      } else {
        throw Error(ErrorCode::InvalidProblem, "unknown event type " + type);
      }
      s.events.push_back(std::move(ev));
    }
    return s;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidProblem, std::string("scenario JSON: ") + e.what());
  }
}

const FlowMetrics* Metrics::flow(std::string_view id) const {
  for (const auto& f : flows)
    if (f.id == id) return &f;
  return nullptr;
}

json Metrics::to_json(const SchedulingProblem& topo) const {
  json series = json::array();
  for (const auto& s : utilization) {
    json boxes = json::object();
    for (std::size_t n = 0; n < topo.N(); ++n) {
      json r = json::object();
      for (std::size_t q = 0; q < topo.R(); ++q) r[topo.resources[q]] = s.values[n][q];
      boxes[topo.boxes[n].id] = r;
    }
    series.push_back({{"tick", s.tick}, {"boxes", boxes}});
  }
  json fl = json::array();
  for (const auto& f : flows) {
    json hops = json::object();
    for (const auto& [k, v] : f.delivered_by_sdm_count) hops[std::to_string(k)] = v;
    fl.push_back({{"id", f.id},
                  {"admitted", f.admitted},
                  {"injected", f.injected},
                  {"delivered", f.delivered},
                  {"dropped", f.dropped},
                  {"in_flight", f.in_flight},
                  {"reordered", f.reordered},
                  {"reassignments", f.reassignments},
                  {"delivered_by_sdm_count", hops}});
  }
  return {{"ticks", ticks},
          {"max_utilization", max_utilization},
          {"reconfigurations", reconfigurations},
          {"actions", actions},
          {"coherent", coherent},
          {"utilization", series},
          {"flows", fl},
          {"infeasible", infeasible},
          {"events", log}};
}

Controller::Controller(const Scenario& scenario)
    : scenario_(scenario), registry_(builtin_registry()), scheduler_(scenario.topology, scenario.policy.online) {
  const std::size_t N = scenario_.topology.N();
  for (std::size_t n = 0; n < N; ++n) {
    shims_.push_back(std::make_unique<BoxShim>());
    failed_.push_back(!scenario_.topology.boxes[n].available);
  }
  dp_of_.resize(N);
  retiring_.resize(N);
  if (scenario_.programs.size() != scenario_.topology.K()) scenario_.programs.resize(scenario_.topology.K());
  for (std::size_t k = 0; k < scenario_.topology.K(); ++k)
    scenario_.programs[k].resize(scenario_.topology.sdms[k].impls.size());
  sample();
}

Controller::FlowState* Controller::find_flow(const std::string& id) {
  auto it = flow_index_.find(id);
  return it == flow_index_.end() ? nullptr : flows_[it->second].get();
}

void Controller::log(json entry) {
  entry["tick"] = tick_;
  log_.push_back(std::move(entry));
}

void Controller::sample() { samples_.push_back({tick_, monitor()}); }

Utilization Controller::monitor() const { return scheduler_.committed(); }

void Controller::place(FlowState& f) {
  try {
    f.path = scheduler_.place(f.spec);
    f.admitted = true;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::Infeasible) throw;
    f.path.clear();
    f.admitted = false;
    infeasible_.push_back(f.spec.id);
    log({{"event", "infeasible"}, {"flow", f.spec.id}, {"reason", e.what()}});
  }
}

void Controller::unplace(FlowState& f) {
  if (f.admitted) scheduler_.release(f.spec, f.path);
  f.admitted = false;
}

std::unique_ptr<Pipeline> Controller::make_pipeline(std::size_t sdm, std::size_t impl) const {
  const ImplProgram& prog = scenario_.programs[sdm][impl];
  const std::string text = prog.script.empty() ? kDefaultProgram : prog.script;
  ActionGraph g = build_graph(parse_script(text), registry_, &prog.bindings);
  const auto& t = scenario_.topology;
  return std::make_unique<Pipeline>(std::move(g), t.sdms[sdm].id + "/" + t.sdms[sdm].impls[impl].id);
}

std::vector<SteeringHop> Controller::desired_hops(const FlowState& f) const {
  std::vector<SteeringHop> hops;
  for (std::size_t pos = 0; pos < f.path.size(); ++pos) {
    const std::size_t n = f.path[pos].box;
    auto it = dp_of_[n].find({f.spec.chain[pos], f.path[pos].impl});
    hops.push_back({n, it == dp_of_[n].end() ? static_cast<std::size_t>(-1) : it->second});
  }
  return hops;
}

std::vector<std::string> Controller::enforce() {
  std::vector<std::string> actions;
  const auto& t = scenario_.topology;
  for (auto& fp : flows_) {
    FlowState& f = *fp;
    if (!f.active || !f.admitted) continue;
    for (std::size_t pos = 0; pos < f.path.size(); ++pos) {
      const std::size_t n = f.path[pos].box;
      const DpRef ref{f.spec.chain[pos], f.path[pos].impl};
      if (failed_[n])
        throw Error(ErrorCode::BoxFailed, "box " + t.boxes[n].id + ": assignment for flow " + f.spec.id +
                                              " references a failed box");
      if (dp_of_[n].count(ref)) continue;
      try {
        dp_of_[n][ref] = shims_[n]->register_dp(make_pipeline(ref.sdm, ref.impl)).dp;
      } catch (const Error& e) {
        throw Error(e.code(), "box " + t.boxes[n].id + ": " + e.what());
      }
      actions.push_back("start " + t.sdms[ref.sdm].impls[ref.impl].id + "@" + t.boxes[n].id);
    }
  }
  for (auto& fp : flows_) {
    FlowState& f = *fp;
    if (!f.active || !f.admitted) {
      if (steering_.erase(f.spec.id)) actions.push_back("unsteer " + f.spec.id);
      continue;
    }
    const auto hops = desired_hops(f);
    auto it = steering_.find(f.spec.id);
    if (it != steering_.end() && it->second == hops) continue;
    ++f.version;
    std::vector<Segment> segs;
    for (const auto& h : hops) {
      if (segs.empty() || segs.back().box != h.box)
        segs.push_back({h.box, make_key(f.index, f.version, segs.size()), {}});
      segs.back().dps.push_back(h.dp);
    }
    for (const auto& s : segs) {
      try {
        shims_[s.box]->set_chain(s.key, s.dps);
      } catch (const Error& e) {
        throw Error(e.code(), "box " + t.boxes[s.box].id + ": " + e.what());
      }
    }
    f.segments[f.version] = std::move(segs);
    steering_[f.spec.id] = hops;
    actions.push_back("steer " + f.spec.id);
  }
  housekeeping(actions);
  actions_ += actions.size();
  return actions;
}

void Controller::housekeeping(std::vector<std::string>& actions) {
  const auto& t = scenario_.topology;
  for (auto& fp : flows_) {
    FlowState& f = *fp;
    for (auto it = f.segments.begin(); it != f.segments.end();) {
      const std::uint32_t v = it->first;
      const bool current = f.active && f.admitted && v == f.version;
      if (current || f.in_flight[v] > 0) {
        ++it;
        continue;
      }
      for (const auto& s : it->second)
        if (!failed_[s.box]) shims_[s.box]->clear_chain(s.key);
      actions.push_back("clear " + f.spec.id + " v" + std::to_string(v));
      it = f.segments.erase(it);
    }
  }
  for (std::size_t n = 0; n < shims_.size(); ++n) {
    if (failed_[n]) continue;
    std::set<std::size_t> referenced;
    for (const auto& fp : flows_)
      for (const auto& [v, segs] : fp->segments)
        for (const auto& s : segs)
          if (s.box == n) referenced.insert(s.dps.begin(), s.dps.end());
    for (auto it = dp_of_[n].begin(); it != dp_of_[n].end();) {
      if (referenced.count(it->second)) {
        ++it;
        continue;
      }
      if (shims_[n]->remove_dp(it->second) == RemoveStatus::Pending) retiring_[n][it->second] = it->first;
      actions.push_back("retire " + t.sdms[it->first.sdm].impls[it->first.impl].id + "@" + t.boxes[n].id);
      it = dp_of_[n].erase(it);
    }
    for (auto it = retiring_[n].begin(); it != retiring_[n].end();)
      it = shims_[n]->dp_state(it->first) == DpState::Removed ? retiring_[n].erase(it) : std::next(it);
  }
}

bool Controller::coherent() const {
  std::size_t expected = 0;
  for (const auto& fp : flows_) {
    const FlowState& f = *fp;
    if (!f.active || !f.admitted) continue;
    ++expected;
    auto it = steering_.find(f.spec.id);
    if (it == steering_.end()) return false;
    const auto hops = desired_hops(f);
    if (it->second != hops) return false;
    for (std::size_t pos = 0; pos < hops.size(); ++pos) {
      if (hops[pos].box != f.path[pos].box || failed_[hops[pos].box]) return false;
      if (hops[pos].dp == static_cast<std::size_t>(-1)) return false;
    }
  }
  return steering_.size() == expected;
}

std::pair<SchedulingProblem, Assignment> Controller::committed() const {
  SchedulingProblem p = scheduler_.base();
  Assignment a;
  for (const auto& fp : flows_) {
    if (!fp->active || !fp->admitted) continue;
    p.flows.push_back(fp->spec);
    a.paths.push_back(fp->path);
    a.admitted.push_back(true);
  }
  a.objective = objective(p, a);
  return {std::move(p), std::move(a)};
}

BoxShim* Controller::shim(std::size_t box) { return failed_.at(box) ? nullptr : shims_.at(box).get(); }

std::size_t Controller::live_dp_count(std::size_t box) const { return dp_of_.at(box).size(); }

void Controller::apply(const ScenarioEvent& ev) {
  const auto& t = scenario_.topology;
  switch (ev.type) {
    case SimEventType::Arrival: {
      if (flow_index_.count(ev.flow.id)) throw Error(ErrorCode::InvalidProblem, "duplicate flow " + ev.flow.id);
      auto f = std::make_unique<FlowState>();
      f->spec = ev.flow;
      f->traffic = ev.traffic;
      f->index = flows_.size();
      f->m.id = ev.flow.id;
      flow_index_[ev.flow.id] = flows_.size();
      flows_.push_back(std::move(f));
      FlowState& fs = *flows_.back();
      place(fs);
      log({{"event", "arrival"}, {"flow", fs.spec.id}, {"admitted", fs.admitted}});
      break;
    }
    case SimEventType::Departure: {
      FlowState* f = find_flow(ev.flow_id);
      if (!f) throw Error(ErrorCode::InvalidProblem, "unknown flow " + ev.flow_id);
      if (f->admitted) scheduler_.release(f->spec, f->path);
      f->active = false;
      log({{"event", "departure"}, {"flow", f->spec.id}});
      break;
    }
    case SimEventType::Failure: {
      const std::size_t b = index_of_box(t, ev.box_id);
      if (failed_[b]) break;
      for (const auto& [key, n] : shims_[b]->fail_all()) {
        FlowState& f = *flows_.at(key_flow(key));
        f.in_flight[key_version(key)] -= n;
        f.m.dropped += n;
      }
      failed_[b] = true;
      scheduler_.set_available(b, false);
      dp_of_[b].clear();
      retiring_[b].clear();
      std::vector<FlowState*> affected;
      for (auto& fp : flows_) {
        if (!fp->active || !fp->admitted) continue;
        if (std::any_of(fp->path.begin(), fp->path.end(), [&](const Slot& s) { return s.box == b; }))
          affected.push_back(fp.get());
      }
      if (scenario_.policy.full_reoptimize_on_failure) {
        std::vector<FlowState*> all;
        for (auto& fp : flows_)
          if (fp->active && fp->admitted) all.push_back(fp.get());
        for (auto* f : all) unplace(*f);
        SchedulingProblem p = scheduler_.base();
        for (std::size_t n = 0; n < p.N(); ++n) p.boxes[n].utilization = scheduler_.committed()[n];
        for (auto* f : all) p.flows.push_back(f->spec);
        OfflineResult r = offline_round(p, scenario_.policy.online.offline);
        for (std::size_t i = 0; i < all.size(); ++i) {
          const bool moved = r.assignment.paths[i] != all[i]->path;
          all[i]->path = r.assignment.paths[i];
          all[i]->admitted = true;
          scheduler_.commit(all[i]->spec, all[i]->path);
          if (moved) {
            ++all[i]->m.reassignments;
            ++reconfigurations_;
          }
        }
      } else {
        for (auto* f : affected) {
          unplace(*f);
          place(*f);
          ++f->m.reassignments;
          ++reconfigurations_;
        }
      }
      json ids = json::array();
      for (auto* f : affected) ids.push_back(f->spec.id);
      log({{"event", "failure"}, {"box", ev.box_id}, {"affected", ids}});
      break;
    }
    case SimEventType::Mutation: {
      FlowState* f = find_flow(ev.flow_id);
      if (!f) throw Error(ErrorCode::InvalidProblem, "unknown flow " + ev.flow_id);
      if (!f->active) break;
      unplace(*f);
      f->spec.chain = ev.chain;
      place(*f);
      ++f->m.reassignments;
      ++reconfigurations_;
      log({{"event", "mutation"}, {"flow", f->spec.id}, {"admitted", f->admitted}});
      break;
    }
  }
  enforce();
  coherent_ = coherent_ && coherent();
  sample();
}

void Controller::finish(FlowState& f, std::uint32_t version) {
  auto it = f.in_flight.find(version);
  if (it != f.in_flight.end() && it->second == 0) f.in_flight.erase(it);
}

void Controller::forward(FlowState& f, std::uint32_t version, std::size_t segment, Packet&& packet,
                         std::size_t sdms) {
  const auto& segs = f.segments.at(version);
  if (segment == segs.size()) {
    const std::uint64_t seq = packet.read_meta(kMetaSeq).as_uint();
    if (f.last_seq && seq < *f.last_seq) ++f.m.reordered;
    f.last_seq = std::max(seq, f.last_seq.value_or(0));
    ++f.m.delivered;
    ++f.m.delivered_by_sdm_count[sdms];
    --f.in_flight[version];
    finish(f, version);
    return;
  }
  const Segment& s = segs[segment];
  if (failed_[s.box]) {
    ++f.m.dropped;
    --f.in_flight[version];
    finish(f, version);
    return;
  }
  packet.write_meta(kMetaSdms, ValueType::U16, static_cast<std::uint32_t>(sdms));
  // A refused ingress is reported through take_drops().
  shims_[s.box]->ingress(s.key, std::move(packet));
}

void Controller::tick() {
  for (auto& fp : flows_) {
    FlowState& f = *fp;
    if (!f.active || !f.admitted) continue;
    for (std::uint64_t i = 0; i < f.traffic.rate && f.m.injected < f.traffic.packets; ++i) {
      Packet p = synth_packet(f.index, f.m.injected, f.traffic.size);
      ++f.m.injected;
      ++f.in_flight[f.version];
      forward(f, f.version, 0, std::move(p), 0);
    }
  }
  std::vector<EgressRecord> egress;
  for (std::size_t n = 0; n < shims_.size(); ++n) {
    if (failed_[n]) continue;
    for (auto& rec : shims_[n]->step()) egress.push_back(std::move(rec));
  }
  for (std::size_t n = 0; n < shims_.size(); ++n) {
    if (failed_[n]) continue;
    for (const auto& [key, count] : shims_[n]->take_drops()) {
      FlowState& f = *flows_.at(key_flow(key));
      f.in_flight[key_version(key)] -= count;
      f.m.dropped += count;
      finish(f, key_version(key));
    }
  }
  for (auto& rec : egress) {
    FlowState& f = *flows_.at(key_flow(rec.flow));
    const std::size_t sdms = rec.packet.read_meta(kMetaSdms).as_uint() + rec.hops;
    forward(f, key_version(rec.flow), key_segment(rec.flow) + 1, std::move(rec.packet), sdms);
  }
  std::vector<std::string> actions;
  housekeeping(actions);
  actions_ += actions.size();
  ++tick_;
}

bool Controller::quiescent() const {
  for (const auto& fp : flows_) {
    for (const auto& [v, n] : fp->in_flight)
      if (n > 0) return false;
    if (fp->active && fp->admitted && fp->m.injected < fp->traffic.packets) return false;
  }
  return true;
}

Metrics Controller::metrics() const {
  Metrics m;
  m.ticks = tick_;
  m.reconfigurations = reconfigurations_;
  m.actions = actions_;
  m.coherent = coherent_;
  m.utilization = samples_;
  m.infeasible = infeasible_;
  m.log = log_;
  for (const auto& s : samples_)
    for (std::size_t n = 0; n < s.values.size(); ++n)
      for (double v : s.values[n]) m.max_utilization = std::max(m.max_utilization, v);
  for (const auto& fp : flows_) {
    FlowMetrics fm = fp->m;
    fm.admitted = fp->admitted;
    fm.in_flight = 0;
    for (const auto& [v, n] : fp->in_flight) fm.in_flight += n;
    m.flows.push_back(std::move(fm));
  }
  return m;
}

Metrics run_scenario(const Scenario& scenario) {
  Controller c(scenario);
  const std::uint64_t tpe = std::max<std::uint64_t>(1, scenario.policy.ticks_per_event);
  std::size_t next = 0;
  const std::uint64_t last = scenario.events.empty() ? 0 : scenario.events.back().time * tpe;
  while (true) {
    while (next < scenario.events.size() && scenario.events[next].time * tpe <= c.now())
      c.apply(scenario.events[next++]);
    if (next == scenario.events.size() && c.quiescent()) break;
    if (c.now() > last + scenario.policy.drain_ticks) break;
    c.tick();
  }
  return c.metrics();
}

}  // namespace sdm
