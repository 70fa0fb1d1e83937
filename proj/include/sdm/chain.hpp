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

#ifndef SDM_CHAIN_HPP
#define SDM_CHAIN_HPP

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "sdm/packet.hpp"
#include "sdm/pipeline.hpp"
#include "sdm/ring.hpp"

namespace sdm {

using FlowKey = std::uint64_t;

// Per-packet chain metadata, kept in the packet's metadata map.
struct ChainStamp {
  std::vector<std::uint16_t> rings;
  std::uint16_t index = 0;
  std::uint32_t version = 0;
  std::uint32_t seq = 0;

  static inline constexpr const char* kRings = "chain.rings";
  static inline constexpr const char* kIndex = "chain.index";
  static inline constexpr const char* kVersion = "chain.version";
  static inline constexpr const char* kSeq = "chain.seq";

  void write(Packet& p) const;
  static ChainStamp read(const Packet& p);
};

// A data-plane process as seen by the IO process: takes a batch drained
// from its to-DP ring and returns the packets to send back.
class DataPlane {
 public:
  virtual ~DataPlane() = default;
  virtual std::vector<Packet> process(std::vector<Packet>&& batch) = 0;
  // Packets kept inside the DP across steps.
  virtual std::size_t retained() const { return 0; }
};

// Runs a Pipeline one tick per batch, injecting at its first FromDevice.
class PipelineDataPlane final : public DataPlane {
 public:
  explicit PipelineDataPlane(std::unique_ptr<Pipeline> pipeline);
  std::vector<Packet> process(std::vector<Packet>&& batch) override;
  std::size_t retained() const override { return pipeline_->retained(); }
  Pipeline& pipeline() { return *pipeline_; }

 private:
  std::unique_ptr<Pipeline> pipeline_;
  std::uint64_t device_ = 0;
  std::uint64_t tick_ = 0;
};

struct DpHandle {
  std::size_t dp = 0;
  std::size_t ring = 0;
};

enum class DpState { Live, Retiring, Removed };
enum class RemoveStatus { Removed, Pending };

struct EgressRecord {
  FlowKey flow = 0;
  Packet packet;
  std::uint32_t version = 0;
  std::size_t hops = 0;
};

// In-box IO process plus its ring pairs. Each step() is one tick: every DP
// drains up to drain_budget packets and answers on its from-DP ring, then
// the IO process advances each returned packet to its next ring or to
// egress. Egress per flow is released in ingress order.
class BoxShim {
 public:
  static constexpr std::size_t kDefaultCapacity = 256;
  static constexpr std::size_t kDefaultDrainBudget = 32;

  explicit BoxShim(std::size_t drain_budget = kDefaultDrainBudget);

  DpHandle register_dp(std::unique_ptr<DataPlane> dp, std::size_t capacity = kDefaultCapacity);
  DpHandle register_dp(std::unique_ptr<Pipeline> pipeline, std::size_t capacity = kDefaultCapacity);

  // Replaces the flow's template; returns its version. Throws UnknownDp.
  std::uint32_t set_chain(FlowKey flow, const std::vector<std::size_t>& dps);
  void clear_chain(FlowKey flow);
  std::optional<std::vector<std::size_t>> chain(FlowKey flow) const;

  // Stamps and enqueues. Returns false on a back-pressure drop.
  bool ingress(FlowKey flow, Packet packet);
  std::vector<EgressRecord> step();

  // Throws StillReferenced while a template names the DP.
  RemoveStatus remove_dp(std::size_t dp);
  DpState dp_state(std::size_t dp) const;
  DataPlane& data_plane(std::size_t dp);

  std::uint64_t backpressure_drops() const { return backpressure_drops_; }
  std::uint64_t dp_losses() const { return dp_losses_; }
  std::uint64_t ingressed() const { return ingressed_; }
  std::uint64_t egressed() const { return egressed_; }
  std::uint64_t in_flight() const { return live_.size(); }
  std::uint64_t in_flight(FlowKey flow) const;
  std::uint64_t in_flight_version(std::uint32_t version) const;
  std::uint64_t outstanding(std::size_t ring) const;
  std::size_t dp_count() const { return dps_.size(); }

  // Per-flow drops (back-pressure and DP losses) since the last call.
  std::map<FlowKey, std::uint64_t> take_drops() { return std::exchange(dropped_by_flow_, {}); }

  // Drops every in-flight packet (box failure); returns per-flow losses.
  std::map<FlowKey, std::uint64_t> fail_all();

  nlohmann::json stats() const;

 private:
  struct Slot {
    std::unique_ptr<DataPlane> dp;
    std::unique_ptr<SpscRing<Packet>> to_dp;
    std::unique_ptr<SpscRing<Packet>> from_dp;
    std::uint64_t outstanding = 0;
    std::uint64_t processed = 0;
    DpState state = DpState::Live;
    std::vector<std::uint32_t> inside;  // seqs handed to the DP, not yet returned
  };
  struct Template {
    std::vector<std::size_t> dps;
    std::uint32_t version = 0;
  };
  struct Live {
    FlowKey flow = 0;
    std::vector<std::uint16_t> rings;
    std::size_t index = 0;
    std::uint32_t version = 0;
  };

  void drop(std::uint32_t seq);
  void complete(std::uint32_t seq, Packet&& packet);
  void flush(FlowKey flow);
  bool enqueue_at(std::uint32_t seq, Packet&& packet);
  void try_retire();

  std::size_t budget_;
  std::vector<Slot> dps_;
  std::map<FlowKey, Template> templates_;
  std::map<std::uint32_t, Live> live_;
  std::map<FlowKey, std::map<std::uint32_t, std::optional<Packet>>> reorder_;
  std::map<FlowKey, std::uint64_t> flow_in_flight_;
  std::map<std::uint32_t, std::uint64_t> version_in_flight_;
  std::vector<EgressRecord> ready_;
  std::map<FlowKey, std::uint64_t> dropped_by_flow_;
  std::uint32_t version_ = 0;
  std::uint32_t seq_ = 0;
  std::uint64_t backpressure_drops_ = 0;
  std::uint64_t dp_losses_ = 0;
  std::uint64_t ingressed_ = 0;
  std::uint64_t egressed_ = 0;
};

}  // namespace sdm

#endif  // SDM_CHAIN_HPP
