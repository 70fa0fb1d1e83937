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

#include "sdm/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sdm/error.hpp"

namespace sdm {

std::string to_string(LpStatus status) {
  switch (status) {
    case LpStatus::Optimal: return "optimal";
    case LpStatus::Infeasible: return "infeasible";
    case LpStatus::Unbounded: return "unbounded";
  }
  return "unknown";
}

std::size_t LinearProgram::add_variable(double c, std::string name) {
  cost.push_back(c);
  names.push_back(std::move(name));
  return cost.size() - 1;
}

std::size_t LinearProgram::add_row(std::vector<std::pair<std::size_t, double>> terms, Sense sense, double rhs) {
  for (const auto& [j, v] : terms)
    if (j >= cost.size()) throw Error(ErrorCode::InvalidProblem, "row references unknown variable");
  rows.push_back({std::move(terms), sense, rhs});
  return rows.size() - 1;
}

namespace {

class Tableau {
 public:
  Tableau(std::size_t m, std::size_t cols) : m_(m), w_(cols + 1), t_(m * (cols + 1), 0.0), basis_(m, 0) {}

  double& at(std::size_t i, std::size_t j) { return t_[i * w_ + j]; }
  double at(std::size_t i, std::size_t j) const { return t_[i * w_ + j]; }
  double& rhs(std::size_t i) { return t_[i * w_ + w_ - 1]; }
  std::size_t cols() const { return w_ - 1; }
  std::size_t rows() const { return m_; }
  std::vector<std::size_t>& basis() { return basis_; }

  void pivot(std::size_t r, std::size_t e, std::vector<double>& d, double& obj) {
    double* pr = &t_[r * w_];
    const double inv = 1.0 / pr[e];
    for (std::size_t j = 0; j < w_; ++j) pr[j] *= inv;
    pr[e] = 1.0;
    nz_.clear();
    for (std::size_t j = 0; j < w_; ++j)
      if (pr[j] != 0.0) nz_.push_back(j);
    for (std::size_t i = 0; i < m_; ++i) {
      if (i == r) continue;
      double* pi = &t_[i * w_];
      const double f = pi[e];
      if (f == 0.0) continue;
      for (std::size_t j : nz_) {
        double v = pi[j] - f * pr[j];
        pi[j] = std::fabs(v) < 1e-13 ? 0.0 : v;
      }
      pi[e] = 0.0;
    }
    const double fd = d[e];
    if (fd != 0.0) {
      for (std::size_t j : nz_) {
        if (j == w_ - 1) continue;
        d[j] -= fd * pr[j];
      }
      obj -= fd * pr[w_ - 1];
      d[e] = 0.0;
    }
    basis_[r] = e;
  }

 private:
  std::size_t m_;
  std::size_t w_;
  std::vector<double> t_;
  std::vector<std::size_t> basis_;
  std::vector<std::size_t> nz_;
};

enum class PhaseResult { Optimal, Unbounded, PivotLimit };

struct Runner {
  Tableau& tab;
  const LpOptions& opt;
  std::size_t pivots = 0;
  bool bland_used = false;

  // d: reduced costs; obj: current objective (of the phase cost, negated
  // convention: obj tracks -c_B B^-1 b so value = -obj).
  PhaseResult run(std::vector<double>& d, double& obj, const std::vector<char>& allowed) {
    bool bland = false;
    std::size_t degenerate = 0;
    const double tol = opt.tolerance;
    while (true) {
      std::size_t e = std::numeric_limits<std::size_t>::max();
      double best = -tol;
      for (std::size_t j = 0; j < tab.cols(); ++j) {
        if (!allowed[j]) continue;
        if (d[j] < best) {
          e = j;
          if (bland) break;
          best = d[j];
        }
      }
      if (e == std::numeric_limits<std::size_t>::max()) return PhaseResult::Optimal;
      std::size_t r = std::numeric_limits<std::size_t>::max();
      double ratio = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < tab.rows(); ++i) {
        const double a = tab.at(i, e);
        if (a <= tol) continue;
        const double q = std::max(0.0, tab.rhs(i)) / a;
        if (q < ratio - 1e-12) {
          ratio = q;
          r = i;
        } else if (q <= ratio + 1e-12 && tab.basis()[i] < tab.basis()[r]) {
          ratio = std::min(ratio, q);
          r = i;
        }
      }
      if (r == std::numeric_limits<std::size_t>::max()) return PhaseResult::Unbounded;
      if (ratio <= tol) {
        if (++degenerate >= opt.bland_after && !bland) {
          bland = true;
          bland_used = true;
        }
      } else {
        degenerate = 0;
      }
      tab.pivot(r, e, d, obj);
      if (++pivots > opt.max_pivots) return PhaseResult::PivotLimit;
    }
  }
};

}  // namespace

LpSolution solve_lp(const LinearProgram& lp, const LpOptions& opt) {
  const std::size_t n = lp.variable_count();
  const std::size_t m = lp.rows.size();
  LpSolution sol;

  // Column layout: originals, slacks/surpluses, artificials.
  std::vector<double> sign(m, 1.0);
  std::vector<Sense> sense(m);
  std::size_t extra = 0, artificial = 0;
  for (std::size_t i = 0; i < m; ++i) {
    sense[i] = lp.rows[i].sense;
    if (lp.rows[i].rhs < 0) {
      sign[i] = -1.0;
      if (sense[i] == Sense::Le) sense[i] = Sense::Ge;
      else if (sense[i] == Sense::Ge) sense[i] = Sense::Le;
    }
    if (sense[i] != Sense::Eq) ++extra;
    if (sense[i] != Sense::Le) ++artificial;
  }
  const std::size_t first_art = n + extra;
  const std::size_t cols = first_art + artificial;
  Tableau tab(m, cols);
  std::size_t next_extra = n, next_art = first_art;
  for (std::size_t i = 0; i < m; ++i) {
    for (const auto& [j, v] : lp.rows[i].terms) tab.at(i, j) += sign[i] * v;
    tab.rhs(i) = sign[i] * lp.rows[i].rhs;
    if (sense[i] == Sense::Le) {
      tab.at(i, next_extra) = 1.0;
      tab.basis()[i] = next_extra++;
    } else {
      if (sense[i] == Sense::Ge) tab.at(i, next_extra++) = -1.0;
      tab.at(i, next_art) = 1.0;
      tab.basis()[i] = next_art++;
    }
  }

  Runner runner{tab, opt};
  std::vector<char> allowed(cols, 1);

  // Phase 1: minimize the sum of artificials.
  if (artificial > 0) {
    std::vector<double> d(cols, 0.0);
    double obj = 0.0;
    for (std::size_t j = first_art; j < cols; ++j) d[j] = 1.0;
    for (std::size_t i = 0; i < m; ++i) {
      if (tab.basis()[i] < first_art) continue;
      for (std::size_t j = 0; j < cols; ++j) d[j] -= tab.at(i, j);
      obj -= tab.rhs(i);
    }
    auto res = runner.run(d, obj, allowed);
    if (res == PhaseResult::PivotLimit) throw Error(ErrorCode::NonConvergence, "simplex pivot limit");
    double scale = 1.0;
    for (std::size_t i = 0; i < m; ++i) scale = std::max(scale, std::fabs(lp.rows[i].rhs));
    if (-obj > 1e-8 * scale) {
      sol.status = LpStatus::Infeasible;
      sol.pivots = runner.pivots;
      return sol;
    }
    // Drive remaining artificials out of the basis.
    for (std::size_t i = 0; i < m; ++i) {
      if (tab.basis()[i] < first_art) continue;
      std::size_t e = cols;
      double best = 1e-9;
      for (std::size_t j = 0; j < first_art; ++j) {
        if (std::fabs(tab.at(i, j)) > best) {
          best = std::fabs(tab.at(i, j));
          e = j;
        }
      }
      if (e < cols) tab.pivot(i, e, d, obj);
      // else: redundant row, its artificial stays basic at zero.
    }
    for (std::size_t j = first_art; j < cols; ++j) allowed[j] = 0;
  }

  // Phase 2.
  std::vector<double> d(cols, 0.0);
  double obj = 0.0;
  for (std::size_t j = 0; j < n; ++j) d[j] = lp.cost[j];
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t b = tab.basis()[i];
    const double cb = b < n ? lp.cost[b] : 0.0;
    if (cb == 0.0) continue;
    for (std::size_t j = 0; j < cols; ++j) d[j] -= cb * tab.at(i, j);
    obj -= cb * tab.rhs(i);
  }
  auto res = runner.run(d, obj, allowed);
  if (res == PhaseResult::PivotLimit) throw Error(ErrorCode::NonConvergence, "simplex pivot limit");
  sol.pivots = runner.pivots;
  sol.bland_engaged = runner.bland_used;
  if (res == PhaseResult::Unbounded) {
    sol.status = LpStatus::Unbounded;
    return sol;
  }
  sol.status = LpStatus::Optimal;
  sol.x.assign(n, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    if (tab.basis()[i] < n) sol.x[tab.basis()[i]] = std::max(0.0, tab.rhs(i));
  sol.objective = 0.0;
  for (std::size_t j = 0; j < n; ++j) sol.objective += lp.cost[j] * sol.x[j];
  return sol;
}

double max_residual(const LinearProgram& lp, const std::vector<double>& x) {
  double worst = 0.0;
  for (double v : x) worst = std::max(worst, -v);
  for (const auto& row : lp.rows) {
    double lhs = 0.0;
    for (const auto& [j, v] : row.terms) lhs += v * x.at(j);
    const double diff = lhs - row.rhs;
    switch (row.sense) {
      case Sense::Le: worst = std::max(worst, diff); break;
      case Sense::Ge: worst = std::max(worst, -diff); break;
      case Sense::Eq: worst = std::max(worst, std::fabs(diff)); break;
    }
  }
  return worst;
}

}  // namespace sdm
