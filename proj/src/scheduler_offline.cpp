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
#include <string>

#include "sdm/error.hpp"
#include "sdm/scheduler.hpp"

namespace sdm {

namespace {

std::string slot_name(const RuopModel::Node& n) {
  return std::to_string(n.position) + "." + std::to_string(n.slot.impl) + "." + std::to_string(n.slot.box);
}

void check_slots(const SchedulingProblem& p, const FlowSpec& f) {
  for (std::size_t k : f.chain)
    if (slots_of(p, k).empty())
      throw Error(ErrorCode::Infeasible, "flow " + f.id + ": sdm " + p.sdms[k].id + " has no available slot");
}

}  // namespace

RuopModel build_ruop(const SchedulingProblem& p) {
  p.validate();
  RuopModel m;
  auto& lp = m.lp;
  // X coupling terms per (k, slot), filled while emitting edges.
  std::map<std::pair<std::size_t, Slot>, std::vector<std::pair<std::size_t, double>>> x_terms;

  for (std::size_t f = 0; f < p.flows.size(); ++f) {
    const FlowSpec& flow = p.flows[f];
    if (flow.chain.empty()) continue;
    check_slots(p, flow);
    const std::size_t L = flow.chain.size();
    std::vector<std::vector<Slot>> layer(L);
    for (std::size_t pos = 0; pos < L; ++pos) layer[pos] = slots_of(p, flow.chain[pos]);
    // in/out edge lists per node
    std::vector<std::vector<std::vector<std::size_t>>> in(L), out(L);
    for (std::size_t pos = 0; pos < L; ++pos) {
      in[pos].resize(layer[pos].size());
      out[pos].resize(layer[pos].size());
    }
    auto add_edge = [&](std::optional<RuopModel::Node> a, std::optional<RuopModel::Node> b) {
      std::string name = "Z[" + std::to_string(f) + "](" + (a ? slot_name(*a) : "src") + "->" +
                         (b ? slot_name(*b) : "sink") + ")";
      const std::size_t v = lp.add_variable(0.0, std::move(name));
      m.edges.push_back({f, a, b});
      return v;
    };
    std::vector<std::size_t> src, sink;
    for (std::size_t s = 0; s < layer[0].size(); ++s) {
      auto v = add_edge(std::nullopt, RuopModel::Node{0, layer[0][s]});
      src.push_back(v);
      in[0][s].push_back(v);
    }
    for (std::size_t pos = 0; pos + 1 < L; ++pos)
      for (std::size_t a = 0; a < layer[pos].size(); ++a)
        for (std::size_t b = 0; b < layer[pos + 1].size(); ++b) {
          auto v = add_edge(RuopModel::Node{pos, layer[pos][a]}, RuopModel::Node{pos + 1, layer[pos + 1][b]});
          out[pos][a].push_back(v);
          in[pos + 1][b].push_back(v);
        }
    for (std::size_t s = 0; s < layer[L - 1].size(); ++s) {
      auto v = add_edge(RuopModel::Node{L - 1, layer[L - 1][s]}, std::nullopt);
      sink.push_back(v);
      out[L - 1][s].push_back(v);
    }
    std::vector<std::pair<std::size_t, double>> t;
    for (auto v : src) t.emplace_back(v, 1.0);
    lp.add_row(t, Sense::Eq, 1.0);
    for (std::size_t pos = 0; pos < L; ++pos)
      for (std::size_t s = 0; s < layer[pos].size(); ++s) {
        t.clear();
        for (auto v : in[pos][s]) t.emplace_back(v, 1.0);
        for (auto v : out[pos][s]) t.emplace_back(v, -1.0);
        lp.add_row(t, Sense::Eq, 0.0);
        auto& xt = x_terms[{flow.chain[pos], layer[pos][s]}];
        for (auto v : in[pos][s]) xt.emplace_back(v, flow.amount);
      }
    t.clear();
    for (auto v : sink) t.emplace_back(v, 1.0);
    lp.add_row(t, Sense::Eq, 1.0);
  }

  m.x_begin = lp.variable_count();
  std::map<std::pair<std::size_t, Slot>, std::size_t> x_var;
  for (std::size_t k = 0; k < p.K(); ++k)
    for (const Slot& s : slots_of(p, k)) {
      const std::size_t v = lp.add_variable(
          0.0, "X[" + std::to_string(k) + "." + std::to_string(s.impl) + "." + std::to_string(s.box) + "]");
      x_var[{k, s}] = v;
      m.x_index.emplace_back(k, s);
      std::vector<std::pair<std::size_t, double>> t{{v, 1.0}};
      if (auto it = x_terms.find({k, s}); it != x_terms.end())
        for (auto [e, a] : it->second) t.emplace_back(e, -a);
      lp.add_row(t, Sense::Eq, 0.0);
    }
  m.z = lp.add_variable(1.0, "z");
  for (std::size_t n = 0; n < p.N(); ++n) {
    if (!p.boxes[n].available) continue;
    for (std::size_t r = 0; r < p.R(); ++r) {
      std::vector<std::pair<std::size_t, double>> t;
      for (const auto& [key, v] : x_var) {
        const auto& [k, s] = key;
        if (s.box != n) continue;
        const double c = p.sdms[k].impls[s.impl].demand[r] / p.boxes[n].capacity[r];
        if (c != 0.0) t.emplace_back(v, c);
      }
      t.emplace_back(m.z, -1.0);
      lp.add_row(t, Sense::Le, -p.boxes[n].utilization[r]);
    }
  }
  return m;
}

double ruop_lp_bound(const SchedulingProblem& p) {
  RuopModel m = build_ruop(p);
  LpSolution s = solve_lp(m.lp);
  if (s.status != LpStatus::Optimal)
    throw Error(s.status == LpStatus::Infeasible ? ErrorCode::Infeasible : ErrorCode::Unbounded,
                "relaxation " + to_string(s.status));
  return s.objective;
}

namespace {

struct Member {
  std::size_t flow = 0;
  std::size_t pos = 0;
  std::size_t k = 0;
  double amount = 0.0;
};

struct Relaxation {
  double z = 0.0;
  // y[m][s]: fraction of member m on allowed[m][s]
  std::vector<std::vector<double>> y;
};

// Position model with members sharing (sdm, allowed slot set) aggregated
// into one group; a single-slot member only contributes fixed load.
Relaxation solve_positions(const SchedulingProblem& p, const std::vector<Member>& members,
                           const std::vector<std::vector<Slot>>& allowed) {
  const std::size_t N = p.N(), R = p.R();
  Relaxation out;
  out.y.resize(members.size());
  Utilization base(N);
  for (std::size_t n = 0; n < N; ++n) base[n] = p.boxes[n].utilization;

  std::map<std::pair<std::size_t, std::vector<Slot>>, std::size_t> group_of;
  std::vector<std::vector<std::size_t>> groups;
  std::vector<std::size_t> group_k;
  std::vector<const std::vector<Slot>*> group_slots;
  for (std::size_t mi = 0; mi < members.size(); ++mi) {
    const Member& mb = members[mi];
    out.y[mi].assign(allowed[mi].size(), 0.0);
    if (allowed[mi].size() == 1 || mb.amount <= 0.0) {
      out.y[mi][0] = 1.0;
      const Slot s = allowed[mi][0];
      const auto& impl = p.sdms[mb.k].impls[s.impl];
      for (std::size_t r = 0; r < R; ++r) base[s.box][r] += mb.amount * impl.demand[r] / p.boxes[s.box].capacity[r];
      continue;
    }
    auto [it, fresh] = group_of.try_emplace({mb.k, allowed[mi]}, groups.size());
    if (fresh) {
      groups.emplace_back();
      group_k.push_back(mb.k);
      group_slots.push_back(&allowed[mi]);
    }
    groups[it->second].push_back(mi);
  }

  LinearProgram lp;
  std::vector<std::vector<std::size_t>> col(groups.size());
  std::vector<std::vector<std::vector<std::pair<std::size_t, double>>>> load(N, std::vector<std::vector<std::pair<std::size_t, double>>>(R));
  for (std::size_t g = 0; g < groups.size(); ++g) {
    double total = 0.0;
    for (auto mi : groups[g]) total += members[mi].amount;
    std::vector<std::pair<std::size_t, double>> row;
    for (const Slot& s : *group_slots[g]) {
      const std::size_t v = lp.add_variable(0.0);
      col[g].push_back(v);
      row.emplace_back(v, 1.0);
      const auto& impl = p.sdms[group_k[g]].impls[s.impl];
      for (std::size_t r = 0; r < R; ++r) {
        const double c = impl.demand[r] / p.boxes[s.box].capacity[r];
        if (c != 0.0) load[s.box][r].emplace_back(v, c);
      }
    }
    lp.add_row(row, Sense::Eq, total);
  }
  const std::size_t z = lp.add_variable(1.0);
  for (std::size_t n = 0; n < N; ++n) {
    if (!p.boxes[n].available) continue;
    for (std::size_t r = 0; r < R; ++r) {
      auto row = load[n][r];
      row.emplace_back(z, -1.0);
      lp.add_row(row, Sense::Le, -base[n][r]);
    }
  }
  LpSolution sol = solve_lp(lp);
  if (sol.status != LpStatus::Optimal)
    throw Error(sol.status == LpStatus::Infeasible ? ErrorCode::Infeasible : ErrorCode::Unbounded,
                "relaxation " + to_string(sol.status));
  out.z = sol.x[z];

  // Sequential fill: members in index order take slot amounts in slot order.
  for (std::size_t g = 0; g < groups.size(); ++g) {
    std::vector<double> rem;
    for (auto v : col[g]) rem.push_back(sol.x[v]);
    std::size_t si = 0;
    for (auto mi : groups[g]) {
      double need = members[mi].amount;
      const double a = members[mi].amount;
      while (need > 1e-12 * std::max(1.0, a)) {
        while (si < rem.size() && rem[si] <= 1e-12) ++si;
        if (si >= rem.size()) {
          // numerical leftover goes to the last used slot
          std::size_t last = rem.size() - 1;
          while (last > 0 && sol.x[col[g][last]] <= 1e-12) --last;
          out.y[mi][last] += need / a;
          break;
        }
        const double take = std::min(need, rem[si]);
        out.y[mi][si] += take / a;
        need -= take;
        rem[si] -= take;
      }
    }
  }
  return out;
}

std::vector<Member> members_of(const SchedulingProblem& p) {
  std::vector<Member> ms;
  for (std::size_t f = 0; f < p.flows.size(); ++f)
    for (std::size_t pos = 0; pos < p.flows[f].chain.size(); ++pos)
      ms.push_back({f, pos, p.flows[f].chain[pos], p.flows[f].amount});
  return ms;
}

}  // namespace

double lp_bound(const SchedulingProblem& p) {
  p.validate();
  auto ms = members_of(p);
  std::vector<std::vector<Slot>> allowed;
  for (const auto& f : p.flows) check_slots(p, f);
  for (const auto& m : ms) allowed.push_back(slots_of(p, m.k));
  return solve_positions(p, ms, allowed).z;
}

OfflineResult offline_round(const SchedulingProblem& p, const OfflineOptions& opt) {
  p.validate(false);
  if (!(opt.epsilon > 0.0 && opt.epsilon < 1.0)) throw Error(ErrorCode::InvalidArgument, "epsilon must lie in (0,1)");
  for (const auto& f : p.flows) check_slots(p, f);
  const auto ms = members_of(p);
  std::vector<std::vector<Slot>> allowed;
  OfflineResult res;
  for (const auto& m : ms) {
    allowed.push_back(slots_of(p, m.k));
    res.initial_variables += allowed.back().size();
  }
  const double tol = opt.integrality_tolerance;
  double eps = opt.epsilon;
  Relaxation rel;
  while (true) {
    if (res.iterations >= opt.max_iterations)
      throw Error(ErrorCode::NonConvergence, "rounding did not converge in " + std::to_string(opt.max_iterations) +
                                                 " iterations");
    rel = solve_positions(p, ms, allowed);
    if (res.iterations == 0) res.lp_objective = rel.z;
    ++res.iterations;
    std::vector<double> frac;
    for (const auto& ym : rel.y)
      for (double v : ym)
        if (v > tol && v < 1.0 - tol) frac.push_back(v);
    if (frac.empty()) break;
    eps = next_threshold(eps, frac);
    res.thresholds.push_back(eps);
    for (std::size_t mi = 0; mi < ms.size(); ++mi) {
      if (allowed[mi].size() == 1) continue;
      const auto& ym = rel.y[mi];
      std::vector<Slot> keep;
      // Zero-valued slots fall below epsilon too and are forbidden.
      for (std::size_t s = 0; s < ym.size(); ++s)
        if (ym[s] >= eps) keep.push_back(allowed[mi][s]);
      if (keep.empty()) {
        // Every slot would be forbidden: keep the largest fraction.
        std::size_t best = 0;
        for (std::size_t s = 1; s < ym.size(); ++s)
          if (ym[s] > ym[best]) best = s;
        keep.push_back(allowed[mi][best]);
        ++res.rollbacks;
      }
      allowed[mi] = std::move(keep);
    }
  }
  Assignment& a = res.assignment;
  a.paths.resize(p.flows.size());
  a.admitted.assign(p.flows.size(), true);
  for (std::size_t mi = 0; mi < ms.size(); ++mi) {
    const auto& ym = rel.y[mi];
    std::size_t best = 0;
    for (std::size_t s = 1; s < ym.size(); ++s)
      if (ym[s] > ym[best]) best = s;
    a.paths[ms[mi].flow].push_back(allowed[mi][best]);
  }
  a.objective = objective(p, a);
  return res;
}

}  // namespace sdm
