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

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include "sdm/error.hpp"
#include "sdm/scheduler.hpp"

namespace sdm {

using nlohmann::json;

void SchedulingProblem::validate(bool bounded_utilization) const {
  const std::size_t R = resources.size();
  auto bad = [](const std::string& m) { return Error(ErrorCode::InvalidProblem, m); };
  for (const auto& b : boxes) {
    if (b.capacity.size() != R || b.utilization.size() != R) throw bad("box " + b.id + ": resource vector size");
    for (std::size_t r = 0; r < R; ++r) {
      if (!(b.capacity[r] > 0)) throw bad("box " + b.id + ": capacity must be positive");
      if (!(b.utilization[r] >= 0 && (!bounded_utilization || b.utilization[r] <= 1))) throw bad("box " + b.id + ": utilization outside [0,1]");
    }
  }
  for (const auto& s : sdms) {
    if (s.impls.empty()) throw bad("sdm " + s.id + " has no implementation");
    for (const auto& i : s.impls) {
      if (i.demand.size() != R) throw bad("impl " + i.id + ": resource vector size");
      for (double d : i.demand)
        if (!(d >= 0)) throw bad("impl " + i.id + ": negative demand");
    }
  }
  for (const auto& f : flows) {
    if (!(f.amount >= 0) || !std::isfinite(f.amount)) throw bad("flow " + f.id + ": negative amount");
    for (std::size_t k : f.chain)
      if (k >= sdms.size()) throw bad("flow " + f.id + ": unknown sdm in chain");
  }
}

namespace {

std::vector<double> resource_vector(const json& obj, const std::vector<std::string>& res, bool required,
                                    const std::string& what) {
  std::vector<double> out(res.size(), 0.0);
  if (obj.is_null()) {
    if (required) throw Error(ErrorCode::InvalidProblem, what + ": missing resource map");
    return out;
  }
  if (!obj.is_object()) throw Error(ErrorCode::InvalidProblem, what + ": resource map must be an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    auto pos = std::find(res.begin(), res.end(), it.key());
    if (pos == res.end()) throw Error(ErrorCode::InvalidProblem, what + ": unknown resource " + it.key());
    out[static_cast<std::size_t>(pos - res.begin())] = it.value().get<double>();
  }
  if (required)
    for (const auto& r : res)
      if (!obj.contains(r)) throw Error(ErrorCode::InvalidProblem, what + ": missing resource " + r);
  return out;
}

json resource_map(const std::vector<double>& v, const std::vector<std::string>& res) {
  json o = json::object();
  for (std::size_t r = 0; r < res.size(); ++r) o[res[r]] = v[r];
  return o;
}

}  // namespace

SchedulingProblem problem_from_json(const json& j) {
  try {
    SchedulingProblem p;
    if (j.contains("resources")) {
      p.resources = j.at("resources").get<std::vector<std::string>>();
    } else {
      std::set<std::string> names;
      for (const auto& b : j.at("boxes"))
        for (auto it = b.at("capacity").begin(); it != b.at("capacity").end(); ++it) names.insert(it.key());
      p.resources.assign(names.begin(), names.end());
    }
    for (const auto& b : j.at("boxes")) {
      BoxSpec box;
      box.id = b.at("id").is_string() ? b.at("id").get<std::string>() : b.at("id").dump();
      box.capacity = resource_vector(b.at("capacity"), p.resources, true, "box " + box.id);
      box.utilization = resource_vector(b.value("utilization", json()), p.resources, false, "box " + box.id);
      box.available = b.value("available", true);
      p.boxes.push_back(std::move(box));
    }
    std::map<std::string, std::size_t> sdm_index;
    for (const auto& s : j.at("sdms")) {
      SdmSpec sdm;
      sdm.id = s.at("id").is_string() ? s.at("id").get<std::string>() : s.at("id").dump();
      for (const auto& i : s.at("impls")) {
        Implementation impl;
        impl.id = i.at("id").is_string() ? i.at("id").get<std::string>() : i.at("id").dump();
        impl.demand = resource_vector(i.value("demand", json()), p.resources, false, "impl " + impl.id);
        sdm.impls.push_back(std::move(impl));
      }
      if (!sdm_index.emplace(sdm.id, p.sdms.size()).second)
        throw Error(ErrorCode::InvalidProblem, "duplicate sdm id " + sdm.id);
      p.sdms.push_back(std::move(sdm));
    }
    for (const auto& f : j.value("flows", json::array())) {
      FlowSpec flow;
      flow.id = f.at("id").is_string() ? f.at("id").get<std::string>() : f.at("id").dump();
      flow.amount = f.at("amount").get<double>();
      for (const auto& c : f.at("chain")) {
        const std::string id = c.is_string() ? c.get<std::string>() : c.dump();
        auto it = sdm_index.find(id);
        if (it == sdm_index.end()) throw Error(ErrorCode::InvalidProblem, "flow " + flow.id + ": unknown sdm " + id);
        flow.chain.push_back(it->second);
      }
      p.flows.push_back(std::move(flow));
    }
    p.validate();
    return p;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidProblem, std::string("problem JSON: ") + e.what());
  }
}

json problem_to_json(const SchedulingProblem& p) {
  json j;
  j["resources"] = p.resources;
  j["boxes"] = json::array();
  for (const auto& b : p.boxes) {
    json o{{"id", b.id}, {"capacity", resource_map(b.capacity, p.resources)},
           {"utilization", resource_map(b.utilization, p.resources)}};
    if (!b.available) o["available"] = false;
    j["boxes"].push_back(o);
  }
  j["sdms"] = json::array();
  for (const auto& s : p.sdms) {
    json impls = json::array();
    for (const auto& i : s.impls) impls.push_back({{"id", i.id}, {"demand", resource_map(i.demand, p.resources)}});
    j["sdms"].push_back({{"id", s.id}, {"impls", impls}});
  }
  j["flows"] = json::array();
  for (const auto& f : p.flows) {
    json chain = json::array();
    for (std::size_t k : f.chain) chain.push_back(p.sdms[k].id);
    j["flows"].push_back({{"id", f.id}, {"amount", f.amount}, {"chain", chain}});
  }
  return j;
}

std::vector<Slot> slots_of(const SchedulingProblem& p, std::size_t k) {
  std::vector<Slot> out;
  for (std::size_t i = 0; i < p.sdms[k].impls.size(); ++i)
    for (std::size_t n = 0; n < p.boxes.size(); ++n)
      if (p.boxes[n].available) out.push_back({i, n});
  return out;
}

json Assignment::to_json(const SchedulingProblem& p) const {
  json flows = json::array();
  for (std::size_t f = 0; f < paths.size(); ++f) {
    json path = json::array();
    for (std::size_t pos = 0; pos < paths[f].size(); ++pos) {
      const std::size_t k = p.flows[f].chain[pos];
      const Slot s = paths[f][pos];
      path.push_back({{"position", pos},
                      {"sdm", p.sdms[k].id},
                      {"impl", p.sdms[k].impls[s.impl].id},
                      {"box", p.boxes[s.box].id}});
    }
    flows.push_back({{"id", p.flows[f].id}, {"admitted", f < admitted.size() ? bool(admitted[f]) : true},
                     {"path", path}});
  }
  return {{"objective", objective}, {"flows", flows}};
}

void apply_path(const SchedulingProblem& p, const FlowSpec& flow, const std::vector<Slot>& path, Utilization& u,
                double sign) {
  for (std::size_t pos = 0; pos < path.size(); ++pos) {
    const auto& impl = p.sdms[flow.chain[pos]].impls[path[pos].impl];
    const auto& box = p.boxes[path[pos].box];
    for (std::size_t r = 0; r < p.R(); ++r) u[path[pos].box][r] += sign * flow.amount * impl.demand[r] / box.capacity[r];
  }
}

Utilization utilization(const SchedulingProblem& p, const Assignment& a) {
  Utilization u(p.N());
  for (std::size_t n = 0; n < p.N(); ++n) u[n] = p.boxes[n].utilization;
  for (std::size_t f = 0; f < a.paths.size() && f < p.flows.size(); ++f) {
    if (f < a.admitted.size() && !a.admitted[f]) continue;
    apply_path(p, p.flows[f], a.paths[f], u);
  }
  return u;
}

double max_utilization(const Utilization& u) {
  double m = 0.0;
  for (const auto& row : u)
    for (double v : row) m = std::max(m, v);
  return m;
}

double objective(const SchedulingProblem& p, const Assignment& a) {
  const Utilization u = utilization(p, a);
  double m = 0.0;
  for (std::size_t n = 0; n < p.N(); ++n)
    if (p.boxes[n].available)
      for (double v : u[n]) m = std::max(m, v);
  return m;
}

double next_threshold(double eps, const std::vector<double>& fractional) {
  if (fractional.empty()) return eps;
  for (double v : fractional)
    if (v < eps) return eps;
  const double lo = *std::min_element(fractional.begin(), fractional.end());
  return std::max(eps, lo + 1e-9);
}

namespace {

struct Rng {
  std::mt19937_64 gen;
  explicit Rng(std::uint64_t seed) : gen(seed) {}
  double uniform(double lo, double hi) {
    const double u = static_cast<double>(gen() >> 11) * 0x1.0p-53;
    return lo + (hi - lo) * u;
  }
  std::size_t integer(std::size_t lo, std::size_t hi) {
    return lo + static_cast<std::size_t>(gen() % (hi - lo + 1));
  }
};

}  // namespace

SchedulingProblem generate_problem(const GeneratorConfig& cfg, std::uint64_t seed) {
  if (cfg.sdms == 0 || cfg.boxes == 0 || cfg.resources == 0 || cfg.min_chain > cfg.max_chain ||
      cfg.min_impls == 0 || cfg.min_impls > cfg.max_impls)
    throw Error(ErrorCode::InvalidArgument, "bad generator configuration");
  Rng rng(seed);
  SchedulingProblem p;
  for (std::size_t r = 0; r < cfg.resources; ++r) p.resources.push_back("r" + std::to_string(r));
  for (std::size_t n = 0; n < cfg.boxes; ++n) {
    BoxSpec b;
    b.id = "box" + std::to_string(n);
    for (std::size_t r = 0; r < cfg.resources; ++r) {
      b.capacity.push_back(rng.uniform(cfg.min_capacity, cfg.max_capacity));
      b.utilization.push_back(rng.uniform(cfg.min_gamma, cfg.max_gamma));
    }
    p.boxes.push_back(std::move(b));
  }
  for (std::size_t k = 0; k < cfg.sdms; ++k) {
    SdmSpec s;
    s.id = "sdm" + std::to_string(k);
    const std::size_t v = rng.integer(cfg.min_impls, cfg.max_impls);
    for (std::size_t i = 0; i < v; ++i) {
      Implementation impl;
      impl.id = s.id + "." + std::to_string(i);
      for (std::size_t r = 0; r < cfg.resources; ++r) impl.demand.push_back(rng.uniform(cfg.min_demand, cfg.max_demand));
      s.impls.push_back(std::move(impl));
    }
    p.sdms.push_back(std::move(s));
  }
  const std::size_t max_chain = std::min(cfg.max_chain, cfg.sdms);
  const std::size_t min_chain = std::min(cfg.min_chain, max_chain);
  for (std::size_t f = 0; f < cfg.flows; ++f) {
    FlowSpec flow;
    flow.id = "f" + std::to_string(f);
    flow.amount = rng.uniform(cfg.min_amount, cfg.max_amount);
    const std::size_t len = rng.integer(min_chain, max_chain);
    std::vector<std::size_t> pool(cfg.sdms);
    std::iota(pool.begin(), pool.end(), 0);
    for (std::size_t i = 0; i < len; ++i) {
      std::swap(pool[i], pool[rng.integer(i, pool.size() - 1)]);
      flow.chain.push_back(pool[i]);
    }
    p.flows.push_back(std::move(flow));
  }
  return p;
}

}  // namespace sdm
