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

#include "sdm/graph.hpp"

#include <algorithm>
#include <map>
#include <queue>

#include "sdm/error.hpp"

namespace sdm {

std::optional<std::size_t> ActionGraph::find(std::string_view name) const {
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].name == name) return i;
  }
  return std::nullopt;
}

Action& ActionGraph::action(std::string_view name) const {
  auto i = find(name);
  if (!i) throw Error(ErrorCode::UnknownInstance, "no instance '" + std::string(name) + "'");
  return *nodes[*i].action;
}

std::vector<std::size_t> ActionGraph::topological_order() const {
  std::vector<std::size_t> indeg(nodes.size(), 0);
  std::vector<std::vector<std::size_t>> succ(nodes.size());
  for (const auto& e : edges) {
    ++indeg[e.dst];
    succ[e.src].push_back(e.dst);
  }
  std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (indeg[i] == 0) ready.push(i);
  }
  std::vector<std::size_t> order;
  while (!ready.empty()) {
    const std::size_t u = ready.top();
    ready.pop();
    order.push_back(u);
    for (std::size_t v : succ[u]) {
      if (--indeg[v] == 0) ready.push(v);
    }
  }
  return order;
}

ActionGraph build_graph(const ScriptAst& ast, const Registry& registry, const Bindings* bindings) {
  ActionGraph g;
  for (const auto& d : ast.declarations) {
    auto cls = registry.find_shared(d.class_name);
    if (!cls) {
      throw Error(ErrorCode::UnknownClass, "unknown action class '" + d.class_name + "'", d.line, d.column);
    }
    if (g.find(d.instance)) {
      throw Error(ErrorCode::DuplicateInstance, "instance '" + d.instance + "' declared twice", d.line,
                  d.column);
    }
    GraphNode n;
    n.name = d.instance;
    n.cls = cls;
    try {
      n.action = cls->instantiate({d.instance, d.args, bindings});
    } catch (const Error& e) {
      if (e.line() > 0) throw;
      throw Error(e.code(), e.detail(), d.line, d.column);
    }
    g.nodes.push_back(std::move(n));
  }
  auto resolve = [&](const std::string& name, const Connection& c) {
    if (auto i = g.find(name)) return *i;
    if (name == kDiscardInstance) {
      auto cls = registry.find_shared("Discard");
      GraphNode n;
      n.name = name;
      n.cls = cls;
      n.action = cls->instantiate({name, {}, nullptr});
      n.implicit = true;
      g.nodes.push_back(std::move(n));
      return g.nodes.size() - 1;
    }
    throw Error(ErrorCode::UnknownInstance, "connection references undeclared '" + name + "'", c.line,
                c.column);
  };
  for (const auto& c : ast.connections) {
    const std::size_t s = resolve(c.src, c);
    const std::size_t d = resolve(c.dst, c);
    g.edges.push_back({s, c.src_port, c.dst_port, d});
  }
  return g;
}

nlohmann::json ValidationReport::to_json() const {
  auto issues = [](const std::vector<GraphIssue>& v) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& i : v) a.push_back({{"kind", i.kind}, {"node", i.node}, {"message", i.message}});
    return a;
  };
  return {{"ok", ok}, {"nodes", node_count}, {"edges", edge_count},
          {"errors", issues(errors)}, {"warnings", issues(warnings)}};
}

ValidationReport validate_graph(const ActionGraph& g) {
  ValidationReport r;
  r.node_count = g.nodes.size();
  r.edge_count = g.edges.size();
  auto error = [&](std::string kind, const std::string& node, std::string msg) {
    r.errors.push_back({std::move(kind), node, std::move(msg)});
  };

  const auto order = g.topological_order();
  if (order.size() != g.nodes.size()) {
    std::vector<bool> seen(g.nodes.size(), false);
    for (auto i : order) seen[i] = true;
    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
      if (!seen[i]) error("cycle", g.nodes[i].name, "node lies on or behind a cycle");
    }
  }

  std::map<std::pair<std::size_t, std::size_t>, int> out_use, in_use;
  for (const auto& e : g.edges) {
    const auto& s = g.nodes[e.src];
    const auto& d = g.nodes[e.dst];
    if (e.src_port >= s.action->outputs()) {
      error("arity", s.name, "egress port " + std::to_string(e.src_port) + " does not exist");
    }
    if (e.dst_port >= d.action->inputs()) {
      error("arity", d.name, "ingress port " + std::to_string(e.dst_port) + " does not exist");
    }
    ++out_use[{e.src, e.src_port}];
    ++in_use[{e.dst, e.dst_port}];
  }
  std::size_t sources = 0;
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    const auto& n = g.nodes[i];
    const bool shared_sink = n.name == kDiscardInstance && n.cls->name == "Discard";
    if (n.cls->category == Category::Starting) ++sources;
    for (std::size_t p = 0; p < n.action->outputs(); ++p) {
      const int u = out_use.count({i, p}) ? out_use[{i, p}] : 0;
      if (u == 0) error("dangling_port", n.name, "egress port " + std::to_string(p) + " is unconnected");
      if (u > 1) error("arity", n.name, "egress port " + std::to_string(p) + " connected " + std::to_string(u) + " times");
    }
    for (std::size_t p = 0; p < n.action->inputs(); ++p) {
      const int u = in_use.count({i, p}) ? in_use[{i, p}] : 0;
      if (u == 0) error("dangling_port", n.name, "ingress port " + std::to_string(p) + " is unconnected");
      if (u > 1 && !shared_sink) {
        error("arity", n.name, "ingress port " + std::to_string(p) + " connected " + std::to_string(u) + " times");
      }
    }
    for (const auto& a : n.action->missing_config_attributes()) {
      r.warnings.push_back({"unset_attribute", n.name, a + " must be set before the run starts"});
    }
  }
  if (sources == 0) error("no_source", "", "graph has no starting action");

  // reachability from starting actions
  std::vector<bool> reach(g.nodes.size(), false);
  std::queue<std::size_t> q;
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    if (g.nodes[i].cls->category == Category::Starting) {
      reach[i] = true;
      q.push(i);
    }
  }
  while (!q.empty()) {
    const std::size_t u = q.front();
    q.pop();
    for (const auto& e : g.edges) {
      if (e.src == u && !reach[e.dst]) {
        reach[e.dst] = true;
        q.push(e.dst);
      }
    }
  }
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    if (!reach[i]) error("unreachable", g.nodes[i].name, "not reachable from any starting action");
  }
  r.ok = r.errors.empty();
  return r;
}

}  // namespace sdm
