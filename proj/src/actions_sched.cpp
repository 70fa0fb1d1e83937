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

#include <deque>

#include "catalog.hpp"
#include "sdm/error.hpp"

namespace sdm::detail {

namespace {

// One FIFO per ingress port. Arrivals beyond CAPACITY are rejected.
class QueuedScheduler : public Action {
 public:
  QueuedScheduler(const ActionClass& cls, const ActionConfig& cfg, std::size_t inputs)
      : Action(cls, cfg.instance_name, inputs, 1), queues_(inputs) {
    store_attribute("CAPACITY", std::uint64_t{1024});
  }

  bool enqueue(std::size_t port, Packet&& p, ActionContext&) override {
    if (port >= queues_.size()) throw Error(ErrorCode::OutOfBounds, "no ingress port " + std::to_string(port));
    if (queues_[port].size() >= require_uint("CAPACITY")) return false;
    queues_[port].push_back(std::move(p));
    return true;
  }

  bool has_pending() const override { return retained() != 0; }
  std::size_t retained() const override {
    std::size_t n = 0;
    for (const auto& q : queues_) n += q.size();
    return n;
  }

 protected:
  Packet pop(std::size_t i) {
    Packet p = std::move(queues_[i].front());
    queues_[i].pop_front();
    return p;
  }
  std::vector<std::deque<Packet>> queues_;
};

class PrioSched final : public QueuedScheduler {
 public:
  PrioSched(const ActionClass& cls, const ActionConfig& cfg)
      : QueuedScheduler(cls, cfg, cfg.args.empty() ? 2 : arg_uint(cfg.args[0], "inputs")) {}

  std::optional<Packet> pull(ActionContext&) override {
    for (std::size_t i = 0; i < queues_.size(); ++i) {
      if (!queues_[i].empty()) return pop(i);
    }
    return std::nullopt;
  }
};

// Per round, queue i is served up to w_i packets in ascending port order;
// empty queues forfeit the remainder of their quota.
class WRRSched final : public QueuedScheduler {
 public:
  WRRSched(const ActionClass& cls, const ActionConfig& cfg)
      : QueuedScheduler(cls, cfg, cfg.args.size()) {
    for (const auto& a : cfg.args) {
      weights_.push_back(arg_uint(a, "weight"));
      if (weights_.back() == 0) throw Error(ErrorCode::InvalidArgument, "WRR weight must be positive");
    }
  }

  std::optional<Packet> pull(ActionContext&) override {
    for (std::size_t tried = 0; tried <= queues_.size(); ++tried) {
      if (!queues_[cur_].empty() && served_ < weights_[cur_]) {
        Packet p = pop(cur_);
        if (++served_ == weights_[cur_]) advance();
        return p;
      }
      advance();
    }
    return std::nullopt;
  }

 private:
  void advance() {
    cur_ = (cur_ + 1) % queues_.size();
    served_ = 0;
  }
  std::vector<std::uint64_t> weights_;
  std::size_t cur_ = 0;
  std::uint64_t served_ = 0;
};

}  // namespace

void add_sched_actions(Registry& reg) {
  ActionClass sp;
  sp.name = "PrioSched";
  sp.category = Category::ManyToOne;
  sp.params = {"INPUTS"};
  sp.min_args = 0;
  sp.max_args = 1;
  sp.attributes = {uint_attr("CAPACITY", 32)};
  sp.factory = factory_of<PrioSched>();
  reg.add(std::move(sp));

  ActionClass wrr;
  wrr.name = "WRRSched";
  wrr.category = Category::ManyToOne;
  wrr.params = {"WEIGHT..."};
  wrr.min_args = 1;
  wrr.max_args = ActionClass::npos;
  wrr.attributes = {uint_attr("CAPACITY", 32)};
  wrr.factory = factory_of<WRRSched>();
  reg.add(std::move(wrr));
}

}  // namespace sdm::detail
