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

#ifndef SDM_GRAPH_HPP
#define SDM_GRAPH_HPP

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "sdm/action.hpp"
#include "sdm/registry.hpp"
#include "sdm/script.hpp"

namespace sdm {

inline constexpr std::string_view kDiscardInstance = "discard";

struct GraphNode {
  std::string name;
  std::shared_ptr<const ActionClass> cls;
  std::unique_ptr<Action> action;
  bool implicit = false;
};

struct GraphEdge {
  std::size_t src = 0;
  std::size_t src_port = 0;
  std::size_t dst_port = 0;
  std::size_t dst = 0;
};

class ActionGraph {
 public:
  std::vector<GraphNode> nodes;
  std::vector<GraphEdge> edges;

  std::optional<std::size_t> find(std::string_view name) const;
  Action& action(std::string_view name) const;
  // Kahn order with lowest node index first; missing nodes lie on cycles.
  std::vector<std::size_t> topological_order() const;
};

// Instantiates every declaration. "discard" resolves to an implicit sink
// when referenced but not declared.
ActionGraph build_graph(const ScriptAst& ast, const Registry& registry,
                        const Bindings* bindings = nullptr);

struct GraphIssue {
  std::string kind;  // cycle, dangling_port, arity, unreachable, no_source, ...
  std::string node;
  std::string message;
};

struct ValidationReport {
  bool ok = true;
  std::size_t node_count = 0;
  std::size_t edge_count = 0;
  std::vector<GraphIssue> errors;
  std::vector<GraphIssue> warnings;

  nlohmann::json to_json() const;
};

ValidationReport validate_graph(const ActionGraph& graph);

}  // namespace sdm

#endif  // SDM_GRAPH_HPP
