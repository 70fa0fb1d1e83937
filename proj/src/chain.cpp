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

#include "sdm/chain.hpp"

#include <algorithm>
#include <string>
#include <utility>

#include "sdm/error.hpp"

namespace sdm {

void ChainStamp::write(Packet& p) const {
  Bytes ids(rings.size() * 2);
  for (std::size_t i = 0; i < rings.size(); ++i) store_be16(ids.data() + 2 * i, rings[i]);
  p.erase_meta(kRings);
  p.write_meta(kRings, ValueType::Data, ids);
  p.write_meta(kIndex, ValueType::U16, std::uint32_t{index});
  p.write_meta(kVersion, ValueType::U32, version);
  p.write_meta(kSeq, ValueType::U32, seq);
}

ChainStamp ChainStamp::read(const Packet& p) {
  ChainStamp s;
  const Bytes& ids = p.read_meta(kRings).bytes;
  for (std::size_t i = 0; i + 1 < ids.size(); i += 2) s.rings.push_back(load_be16(ids.data() + i));
  s.index = static_cast<std::uint16_t>(p.read_meta(kIndex).as_uint());
  s.version = p.read_meta(kVersion).as_uint();
  s.seq = p.read_meta(kSeq).as_uint();
  return s;
}

PipelineDataPlane::PipelineDataPlane(std::unique_ptr<Pipeline> pipeline) : pipeline_(std::move(pipeline)) {
  if (!pipeline_) throw Error(ErrorCode::InvalidArgument, "null pipeline");
  bool found = false;
  for (std::size_t idx : pipeline_->graph().topological_order()) {
    const auto& node = pipeline_->graph().nodes[idx];
    if (node.action->category() == Category::Starting && node.action->device()) {
      device_ = *node.action->device();
      found = true;
      break;
    }
  }
  if (!found) throw Error(ErrorCode::InvalidArgument, "pipeline has no FromDevice");
  pipeline_->start();
}

std::vector<Packet> PipelineDataPlane::process(std::vector<Packet>&& batch) {
  pipeline_->begin_tick(tick_++);
  for (auto& p : batch) pipeline_->inject(device_, std::move(p));
  pipeline_->end_tick();
  std::vector<Packet> out;
  for (auto& rec : pipeline_->take_outputs()) out.push_back(std::move(rec.packet));
  pipeline_->take_events();
  pipeline_->take_faults();
  return out;
}

BoxShim::BoxShim(std::size_t drain_budget) : budget_(drain_budget) {
  if (budget_ == 0) throw Error(ErrorCode::InvalidArgument, "drain budget must be positive");
}

DpHandle BoxShim::register_dp(std::unique_ptr<DataPlane> dp, std::size_t capacity) {
  if (capacity == 0) throw Error(ErrorCode::CapacityInvalid, "ring capacity must be positive");
  if (!dp) throw Error(ErrorCode::InvalidArgument, "null data plane");
  if (dps_.size() >= 0xffff) throw Error(ErrorCode::InvalidArgument, "too many data planes");
  Slot s;
  s.dp = std::move(dp);
  s.to_dp = std::make_unique<SpscRing<Packet>>(capacity);
  s.from_dp = std::make_unique<SpscRing<Packet>>(capacity);
  dps_.push_back(std::move(s));
  return {dps_.size() - 1, dps_.size() - 1};
}

DpHandle BoxShim::register_dp(std::unique_ptr<Pipeline> pipeline, std::size_t capacity) {
  if (capacity == 0) throw Error(ErrorCode::CapacityInvalid, "ring capacity must be positive");
  return register_dp(std::make_unique<PipelineDataPlane>(std::move(pipeline)), capacity);
}

std::uint32_t BoxShim::set_chain(FlowKey flow, const std::vector<std::size_t>& dps) {
  for (std::size_t d : dps)
    if (d >= dps_.size() || dps_[d].state != DpState::Live)
      throw Error(ErrorCode::UnknownDp, "unknown data plane " + std::to_string(d));
  auto& t = templates_[flow];
  t.dps = dps;
  t.version = ++version_;
  return t.version;
}

void BoxShim::clear_chain(FlowKey flow) { templates_.erase(flow); }

std::optional<std::vector<std::size_t>> BoxShim::chain(FlowKey flow) const {
  auto it = templates_.find(flow);
  if (it == templates_.end()) return std::nullopt;
  return it->second.dps;
}

bool BoxShim::ingress(FlowKey flow, Packet packet) {
  ++ingressed_;
  Live live;
  live.flow = flow;
  if (auto it = templates_.find(flow); it != templates_.end()) {
    live.version = it->second.version;
    for (std::size_t d : it->second.dps) live.rings.push_back(static_cast<std::uint16_t>(d));
  }
  const std::uint32_t seq = seq_++;
  ChainStamp{live.rings, 0, live.version, seq}.write(packet);
  for (auto r : live.rings) ++dps_[r].outstanding;
  ++flow_in_flight_[flow];
  ++version_in_flight_[live.version];
  reorder_[flow].emplace(seq, std::nullopt);
  const bool empty = live.rings.empty();
  live_.emplace(seq, std::move(live));
  if (empty) {
    complete(seq, std::move(packet));
    return true;
  }
  return enqueue_at(seq, std::move(packet));
}

bool BoxShim::enqueue_at(std::uint32_t seq, Packet&& packet) {
  const Live& live = live_.at(seq);
  Slot& slot = dps_[live.rings[live.index]];
  if (!slot.to_dp->push(std::move(packet))) {
    ++backpressure_drops_;
    drop(seq);
    return false;
  }
  return true;
}

void BoxShim::drop(std::uint32_t seq) {
  auto it = live_.find(seq);
  if (it == live_.end()) return;
  Live& live = it->second;
  for (std::size_t i = live.index; i < live.rings.size(); ++i) --dps_[live.rings[i]].outstanding;
  ++dropped_by_flow_[live.flow];
  reorder_[live.flow].erase(seq);
  if (--flow_in_flight_[live.flow] == 0) flow_in_flight_.erase(live.flow);
  if (--version_in_flight_[live.version] == 0) version_in_flight_.erase(live.version);
  const FlowKey flow = live.flow;
  live_.erase(it);
  // A drop can unblock later packets of the flow.
  flush(flow);
}

void BoxShim::complete(std::uint32_t seq, Packet&& packet) {
  auto it = live_.find(seq);
  if (it == live_.end()) return;
  const FlowKey flow = it->second.flow;
  reorder_[flow][seq] = std::move(packet);
  flush(flow);
}

// Releases the flow prefix whose packets have all finished.
void BoxShim::flush(FlowKey flow) {
  auto qit = reorder_.find(flow);
  if (qit == reorder_.end()) return;
  auto& q = qit->second;
  while (!q.empty() && q.begin()->second) {
    const std::uint32_t s = q.begin()->first;
    Packet p = std::move(*q.begin()->second);
    q.erase(q.begin());
    auto lit = live_.find(s);
    if (lit == live_.end()) continue;
    const Live& l = lit->second;
    ready_.push_back({l.flow, std::move(p), l.version, l.rings.size()});
    ++egressed_;
    if (--flow_in_flight_[l.flow] == 0) flow_in_flight_.erase(l.flow);
    if (--version_in_flight_[l.version] == 0) version_in_flight_.erase(l.version);
    live_.erase(lit);
  }
  if (q.empty()) reorder_.erase(qit);
}

std::vector<EgressRecord> BoxShim::step() {
  // DP half: one hop per packet per tick.
  for (std::size_t d = 0; d < dps_.size(); ++d) {
    Slot& slot = dps_[d];
    if (slot.state == DpState::Removed) continue;
    std::vector<Packet> batch;
    while (batch.size() < budget_) {
      auto p = slot.to_dp->pop();
      if (!p) break;
      slot.inside.push_back(ChainStamp::read(*p).seq);
      batch.push_back(std::move(*p));
    }
    if (batch.empty() && slot.dp->retained() == 0) continue;
    auto out = slot.dp->process(std::move(batch));
    for (auto& p : out) {
      const std::uint32_t seq = p.has_meta(ChainStamp::kSeq) ? ChainStamp::read(p).seq : 0;
      auto pos = std::find(slot.inside.begin(), slot.inside.end(), seq);
      if (pos == slot.inside.end()) continue;  // not ours: stamp was stripped
      slot.inside.erase(pos);
      ++slot.processed;
      if (!slot.from_dp->push(std::move(p))) {
        ++backpressure_drops_;
        drop(seq);
      }
    }
    if (slot.dp->retained() == 0 && !slot.inside.empty()) {
      // Nothing kept inside, so whatever did not come back was lost.
      for (auto seq : slot.inside) {
        ++dp_losses_;
        drop(seq);
      }
      slot.inside.clear();
    }
  }
  // IO half: collect this tick's returns and forward in ingress order so
  // packets meeting at a ring keep their relative order.
  std::vector<std::pair<std::uint32_t, Packet>> back;
  for (auto& slot : dps_) {
    while (auto p = slot.from_dp->pop()) back.emplace_back(ChainStamp::read(*p).seq, std::move(*p));
  }
  std::stable_sort(back.begin(), back.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  for (auto& [seq, p] : back) {
    auto it = live_.find(seq);
    if (it == live_.end()) continue;
    Live& live = it->second;
    --dps_[live.rings[live.index]].outstanding;
    ++live.index;
    p.write_meta(ChainStamp::kIndex, ValueType::U16, static_cast<std::uint32_t>(live.index));
    if (live.index == live.rings.size()) {
      complete(seq, std::move(p));
    } else {
      enqueue_at(seq, std::move(p));
    }
  }
  try_retire();
  return std::exchange(ready_, {});
}

void BoxShim::try_retire() {
  for (auto& slot : dps_) {
    if (slot.state != DpState::Retiring) continue;
    if (slot.outstanding == 0 && slot.to_dp->empty() && slot.from_dp->empty() && slot.inside.empty() &&
        slot.dp->retained() == 0) {
      slot.state = DpState::Removed;
      slot.dp.reset();
    }
  }
}

RemoveStatus BoxShim::remove_dp(std::size_t dp) {
  if (dp >= dps_.size()) throw Error(ErrorCode::UnknownDp, "unknown data plane " + std::to_string(dp));
  Slot& slot = dps_[dp];
  if (slot.state == DpState::Removed) return RemoveStatus::Removed;
  for (const auto& [flow, t] : templates_)
    if (std::find(t.dps.begin(), t.dps.end(), dp) != t.dps.end())
      throw Error(ErrorCode::StillReferenced,
                  "data plane " + std::to_string(dp) + " is in the template of flow " + std::to_string(flow));
  slot.state = DpState::Retiring;
  try_retire();
  return slot.state == DpState::Removed ? RemoveStatus::Removed : RemoveStatus::Pending;
}

DpState BoxShim::dp_state(std::size_t dp) const {
  if (dp >= dps_.size()) throw Error(ErrorCode::UnknownDp, "unknown data plane " + std::to_string(dp));
  return dps_[dp].state;
}

DataPlane& BoxShim::data_plane(std::size_t dp) {
  if (dp >= dps_.size() || !dps_[dp].dp)
    throw Error(ErrorCode::UnknownDp, "unknown data plane " + std::to_string(dp));
  return *dps_[dp].dp;
}

std::uint64_t BoxShim::in_flight(FlowKey flow) const {
  auto it = flow_in_flight_.find(flow);
  return it == flow_in_flight_.end() ? 0 : it->second;
}

std::uint64_t BoxShim::in_flight_version(std::uint32_t version) const {
  auto it = version_in_flight_.find(version);
  return it == version_in_flight_.end() ? 0 : it->second;
}

std::uint64_t BoxShim::outstanding(std::size_t ring) const {
  if (ring >= dps_.size()) throw Error(ErrorCode::UnknownDp, "unknown ring " + std::to_string(ring));
  return dps_[ring].outstanding;
}

std::map<FlowKey, std::uint64_t> BoxShim::fail_all() {
  std::map<FlowKey, std::uint64_t> lost;
  for (const auto& [seq, live] : live_) ++lost[live.flow];
  live_.clear();
  reorder_.clear();
  flow_in_flight_.clear();
  version_in_flight_.clear();
  ready_.clear();
  dropped_by_flow_.clear();
  for (auto& slot : dps_) {
    while (slot.to_dp && slot.to_dp->pop()) {}
    while (slot.from_dp && slot.from_dp->pop()) {}
    slot.inside.clear();
    slot.outstanding = 0;
  }
  return lost;
}

nlohmann::json BoxShim::stats() const {
  nlohmann::json rings = nlohmann::json::array();
  for (std::size_t d = 0; d < dps_.size(); ++d) {
    const Slot& s = dps_[d];
    const char* state = s.state == DpState::Live ? "live" : s.state == DpState::Retiring ? "retiring" : "removed";
    rings.push_back({{"id", d},
                     {"state", state},
                     {"capacity", s.to_dp->capacity()},
                     {"to_dp", s.to_dp->size()},
                     {"from_dp", s.from_dp->size()},
                     {"outstanding", s.outstanding},
                     {"processed", s.processed}});
  }
  nlohmann::json versions = nlohmann::json::object();
  for (const auto& [v, n] : version_in_flight_) versions[std::to_string(v)] = n;
  return {{"rings", rings},
          {"ingressed", ingressed_},
          {"egressed", egressed_},
          {"in_flight", live_.size()},
          {"backpressure_drops", backpressure_drops_},
          {"dp_losses", dp_losses_},
          {"in_flight_by_version", versions}};
}

}  // namespace sdm
