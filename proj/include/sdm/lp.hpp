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

#ifndef SDM_LP_HPP
#define SDM_LP_HPP

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

namespace sdm {

enum class Sense { Le, Ge, Eq };
enum class LpStatus { Optimal, Infeasible, Unbounded };

std::string to_string(LpStatus status);

// minimize c^T x subject to the rows, x >= 0.
struct LinearProgram {
  struct Row {
    std::vector<std::pair<std::size_t, double>> terms;
    Sense sense = Sense::Le;
    double rhs = 0.0;
  };

  std::vector<double> cost;
  std::vector<std::string> names;
  std::vector<Row> rows;

  std::size_t add_variable(double c = 0.0, std::string name = {});
  std::size_t add_row(std::vector<std::pair<std::size_t, double>> terms, Sense sense, double rhs);
  std::size_t variable_count() const { return cost.size(); }
};

struct LpOptions {
  double tolerance = 1e-9;
  std::size_t bland_after = 500;  // consecutive degenerate pivots
  std::size_t max_pivots = 5000000;
};

struct LpSolution {
  LpStatus status = LpStatus::Infeasible;
  std::vector<double> x;
  double objective = 0.0;
  std::size_t pivots = 0;
  bool bland_engaged = false;
};

// Dense two-phase primal simplex. Entering column: most negative reduced
// cost (lowest index on ties) until bland_after consecutive degenerate
// pivots, then Bland's rule for the rest of the phase.
LpSolution solve_lp(const LinearProgram& lp, const LpOptions& options = {});

// Largest absolute constraint violation of x (including x >= 0).
double max_residual(const LinearProgram& lp, const std::vector<double>& x);

}  // namespace sdm

#endif  // SDM_LP_HPP
