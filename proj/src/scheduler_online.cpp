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
#include <limits>

#include "sdm/error.hpp"
#include "sdm/scheduler.hpp"

namespace sdm {

namespace {

double max_available(const SchedulingProblem& p, const Utilization& u) {
  double m = 0.0;
  for (std::size_t n = 0; n < p.N(); ++n)
    if (p.boxes[n].available)
      for (double v : u[n]) m = std::max(m, v);
  return m;
}

std::vector<std::vector<Slot>> chain_slots(const SchedulingProblem& p, const FlowSpec& flow) {
  std::vector<std::vector<Slot>> opts;
  for (std::size_t k : flow.chain) {
    opts.push_back(slots_of(p, k));
    if (opts.back().empty())
      throw Error(ErrorCode::Infeasible, "flow " + flow.id + ": sdm " + p.sdms[k].id + " has no available slot");
  }
  return opts;
}

double path_count(const std::vector<std::vector<Slot>>& opts) {
  double c = 1.0;
  for (const auto& o : opts) c *= static_cast<double>(o.size());
  return c;
}

}  // namespace

OnlineScheduler::OnlineScheduler(SchedulingProblem base, OnlineOptions options)
    : base_(std::move(base)), options_(std::move(options)) {
  base_.flows.clear();
  base_.validate();
  committed_.resize(base_.N());
  for (std::size_t n = 0; n < base_.N(); ++n) committed_[n] = base_.boxes[n].utilization;
}

double OnlineScheduler::max_utilization() const { return max_available(base_, committed_); }

std::vector<Slot> OnlineScheduler::propose(const FlowSpec& flow) const {
  for (std::size_t k : flow.chain)
    if (k >= base_.K()) throw Error(ErrorCode::InvalidProblem, "flow " + flow.id + ": unknown sdm");
  if (flow.chain.empty()) return {};
  const auto opts = chain_slots(base_, flow);
  const std::size_t N = base_.N(), R = base_.R();
  std::vector<Slot> best_path;

  if (path_count(opts) <= static_cast<double>(options_.enumeration_limit)) {
    // Exact enumeration. Key: resulting max utilization, then the max over
    // the touched resources, then lexicographic path index.
    std::vector<double> box_max(N, 0.0);
    for (std::size_t n = 0; n < N; ++n)
      if (base_.boxes[n].available)
        for (double v : committed_[n]) box_max[n] = std::max(box_max[n], v);
    std::vector<std::size_t> idx(opts.size(), 0);
    double best_global = std::numeric_limits<double>::infinity(), best_touched = best_global;
    Utilization delta(N, std::vector<double>(R, 0.0));
    std::vector<char> touched(N, 0);
    while (true) {
      for (std::size_t pos = 0; pos < opts.size(); ++pos) {
        const Slot s = opts[pos][idx[pos]];
        const auto& impl = base_.sdms[flow.chain[pos]].impls[s.impl];
        touched[s.box] = 1;
        for (std::size_t r = 0; r < R; ++r)
          delta[s.box][r] += flow.amount * impl.demand[r] / base_.boxes[s.box].capacity[r];
      }
      double global = 0.0, local = 0.0;
      for (std::size_t n = 0; n < N; ++n) {
        if (!touched[n]) {
          global = std::max(global, box_max[n]);
          continue;
        }
        for (std::size_t r = 0; r < R; ++r) local = std::max(local, committed_[n][r] + delta[n][r]);
        touched[n] = 0;
        std::fill(delta[n].begin(), delta[n].end(), 0.0);
      }
      global = std::max(global, local);
      const bool admissible = !options_.admission_cap || local <= *options_.admission_cap + 1e-12;
      if (admissible && (global < best_global - 1e-12 ||
                         (global <= best_global + 1e-12 && local < best_touched - 1e-12))) {
        best_global = global;
        best_touched = local;
        best_path.clear();
        for (std::size_t pos = 0; pos < opts.size(); ++pos) best_path.push_back(opts[pos][idx[pos]]);
      }
      bool done = true;
      for (std::size_t pos = opts.size(); pos-- > 0;) {
        if (++idx[pos] < opts[pos].size()) {
          done = false;
          break;
        }
        idx[pos] = 0;
      }
      if (done) break;
    }
    if (best_path.empty())
      throw Error(ErrorCode::Infeasible, "flow " + flow.id + ": no path within the admission cap");
    return best_path;
  }

  // Too many paths: progressive rounding on the singleton problem.
  SchedulingProblem single = base_;
  for (std::size_t n = 0; n < N; ++n) single.boxes[n].utilization = committed_[n];
  single.flows = {flow};
  OfflineResult r = offline_round(single, options_.offline);
  best_path = r.assignment.paths[0];
  if (options_.admission_cap) {
    Utilization u = committed_;
    apply_path(base_, flow, best_path, u);
    for (const Slot& s : best_path)
      for (double v : u[s.box])
        if (v > *options_.admission_cap + 1e-12)
          throw Error(ErrorCode::Infeasible, "flow " + flow.id + ": path exceeds the admission cap");
  }
  return best_path;
}

void OnlineScheduler::commit(const FlowSpec& flow, const std::vector<Slot>& path) {
  apply_path(base_, flow, path, committed_, 1.0);
}

void OnlineScheduler::release(const FlowSpec& flow, const std::vector<Slot>& path) {
  apply_path(base_, flow, path, committed_, -1.0);
}

std::vector<Slot> OnlineScheduler::place(const FlowSpec& flow) {
  auto path = propose(flow);
  commit(flow, path);
  return path;
}

void OnlineScheduler::set_available(std::size_t box, bool up) {
  if (box >= base_.N()) throw Error(ErrorCode::InvalidArgument, "unknown box");
  base_.boxes[box].available = up;
}

Assignment online_schedule(const SchedulingProblem& p, const OnlineOptions& options) {
  p.validate();
  OnlineScheduler s(p, options);
  Assignment a;
  a.paths.resize(p.flows.size());
  a.admitted.assign(p.flows.size(), true);
  for (std::size_t f = 0; f < p.flows.size(); ++f) {
    try {
      a.paths[f] = s.place(p.flows[f]);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::Infeasible) throw;
      a.admitted[f] = false;
    }
  }
  a.objective = objective(p, a);
  return a;
}

Assignment online_schedule_batch(const SchedulingProblem& p, std::size_t batch_size, const OnlineOptions& options) {
  p.validate();
  if (batch_size == 0) throw Error(ErrorCode::InvalidArgument, "batch size must be positive");
  Assignment a;
  a.paths.resize(p.flows.size());
  a.admitted.assign(p.flows.size(), true);
  Utilization committed(p.N());
  for (std::size_t n = 0; n < p.N(); ++n) committed[n] = p.boxes[n].utilization;
  for (std::size_t begin = 0; begin < p.flows.size(); begin += batch_size) {
    SchedulingProblem batch = p;
    batch.flows.clear();
    std::vector<std::size_t> ids;
    for (std::size_t f = begin; f < std::min(p.flows.size(), begin + batch_size); ++f) {
      bool ok = true;
      for (std::size_t k : p.flows[f].chain) ok = ok && !slots_of(p, k).empty();
      if (!ok) {
        a.admitted[f] = false;
        continue;
      }
      batch.flows.push_back(p.flows[f]);
      ids.push_back(f);
    }
    for (std::size_t n = 0; n < p.N(); ++n) batch.boxes[n].utilization = committed[n];
    OfflineResult r = offline_round(batch, options.offline);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      a.paths[ids[i]] = r.assignment.paths[i];
      apply_path(p, p.flows[ids[i]], a.paths[ids[i]], committed);
    }
  }
  a.objective = objective(p, a);
  return a;
}

namespace {

struct Search {
  const SchedulingProblem& p;
  std::vector<std::pair<std::size_t, std::size_t>> members;  // (flow, position)
  std::vector<std::vector<Slot>> opts;                        // per member
  Utilization u;
  std::vector<Slot> current;
  std::vector<Slot> best;
  double best_value = std::numeric_limits<double>::infinity();

  void run(std::size_t m, double cur_max) {
    if (cur_max >= best_value) return;  // loads only grow
    if (m == members.size()) {
      best_value = cur_max;
      best = current;
      return;
    }
    const auto& flow = p.flows[members[m].first];
    const std::size_t k = flow.chain[members[m].second];
    for (const Slot& s : opts[m]) {
      const auto& impl = p.sdms[k].impls[s.impl];
      auto& row = u[s.box];
      double mx = cur_max;
      for (std::size_t r = 0; r < p.R(); ++r) {
        row[r] += flow.amount * impl.demand[r] / p.boxes[s.box].capacity[r];
        mx = std::max(mx, row[r]);
      }
      current[m] = s;
      run(m + 1, mx);
      for (std::size_t r = 0; r < p.R(); ++r) row[r] -= flow.amount * impl.demand[r] / p.boxes[s.box].capacity[r];
    }
  }
};

}  // namespace

Assignment brute_force_optimal(const SchedulingProblem& p, double limit) {
  p.validate();
  double joint = 1.0;
  Search s{p, {}, {}, {}, {}, {}};
  for (std::size_t f = 0; f < p.flows.size(); ++f) {
    auto opts = chain_slots(p, p.flows[f]);
    joint *= path_count(opts);
    if (joint > limit)
      throw Error(ErrorCode::TooLarge, "joint path count exceeds " + std::to_string(static_cast<long long>(limit)));
    for (std::size_t pos = 0; pos < opts.size(); ++pos) {
      s.members.emplace_back(f, pos);
      s.opts.push_back(std::move(opts[pos]));
    }
  }
  s.u.resize(p.N());
  for (std::size_t n = 0; n < p.N(); ++n) s.u[n] = p.boxes[n].utilization;
  s.current.resize(s.members.size());
  s.run(0, max_available(p, s.u));
  Assignment a;
  a.paths.resize(p.flows.size());
  a.admitted.assign(p.flows.size(), true);
  for (std::size_t m = 0; m < s.members.size(); ++m) a.paths[s.members[m].first].push_back(s.best[m]);
  a.objective = objective(p, a);
  return a;
}

}  // namespace sdm
