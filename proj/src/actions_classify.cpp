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
#include <array>
#include <cctype>
#include <queue>
#include <sstream>
#include <unordered_map>

#include "catalog.hpp"
#include "sdm/error.hpp"
#include "sdm/headers.hpp"

namespace sdm::detail {

namespace {

std::string resolve_symbol(const std::string& arg, const Bindings* bindings) {
  if (bindings) {
    auto it = bindings->find(arg);
    if (it != bindings->end()) return it->second;
  }
  return arg;
}

// Rule "offset/hexvalue" or "-" (wildcard). PROTO_IP stands for 12/0800.
class ExactMatch final : public Action {
 public:
  ExactMatch(const ActionClass& cls, const ActionConfig& cfg)
      : Action(cls, cfg.instance_name, 1, cfg.args.size()) {
    for (const auto& raw : cfg.args) {
      std::string arg = raw == "PROTO_IP" ? "12/0800" : resolve_symbol(raw, cfg.bindings);
      Rule r;
      if (arg == "-") {
        r.wildcard = true;
      } else {
        auto slash = arg.find('/');
        if (slash == std::string::npos) {
          throw Error(ErrorCode::InvalidArgument, "ExactMatch rule '" + raw + "' is not offset/value");
        }
        r.offset = arg_uint(arg.substr(0, slash), "offset");
        r.value = from_hex(arg.substr(slash + 1));
        if (r.value.empty()) throw Error(ErrorCode::InvalidArgument, "empty ExactMatch value");
      }
      rules_.push_back(std::move(r));
    }
  }

  std::optional<std::size_t> process(Packet& p, ActionContext&) override {
    const ByteView d = p.data();
    for (std::size_t i = 0; i < rules_.size(); ++i) {
      const Rule& r = rules_[i];
      if (r.wildcard) return i;
      // out-of-range rules never match, so runts fall through to "-"
      if (r.offset + r.value.size() > d.size()) continue;
      if (std::equal(r.value.begin(), r.value.end(), d.begin() + static_cast<std::ptrdiff_t>(r.offset))) {
        return i;
      }
    }
    return std::nullopt;
  }

 private:
  struct Rule {
    bool wildcard = false;
    std::size_t offset = 0;
    Bytes value;
  };
  std::vector<Rule> rules_;
};

std::pair<std::uint32_t, unsigned> parse_prefix(const std::string& text) {
  auto slash = text.find('/');
  const std::uint32_t addr = parse_ipv4(text.substr(0, slash));
  unsigned len = 32;
  if (slash != std::string::npos) {
    len = static_cast<unsigned>(arg_uint(text.substr(slash + 1), "prefix length"));
    if (len > 32) throw Error(ErrorCode::InvalidArgument, "prefix length above 32 in '" + text + "'");
  }
  const std::uint32_t mask = len == 0 ? 0 : ~std::uint32_t{0} << (32 - len);
  return {addr & mask, len};
}

// Rules "a.b.c.d/len port" on the IPv4 destination.
class LPM final : public Action {
 public:
  LPM(const ActionClass& cls, const ActionConfig& cfg) : Action(cls, cfg.instance_name, 1, ports(cfg)) {
    for (const auto& raw : cfg.args) {
      std::istringstream in(resolve_symbol(raw, cfg.bindings));
      std::string prefix, port;
      in >> prefix >> port;
      auto [addr, len] = parse_prefix(prefix);
      by_len_[len].emplace(addr, arg_uint(port, "port"));
    }
  }

  static std::size_t ports(const ActionConfig& cfg) {
    std::size_t n = 0;
    for (const auto& raw : cfg.args) {
      std::istringstream in(resolve_symbol(raw, cfg.bindings));
      std::string prefix, port;
      if (!(in >> prefix >> port)) {
        throw Error(ErrorCode::InvalidArgument, "LPM route '" + raw + "' needs 'prefix port'");
      }
      n = std::max<std::size_t>(n, arg_uint(port, "port") + 1);
    }
    return n;
  }

  std::optional<std::size_t> process(Packet& p, ActionContext&) override {
    const std::uint32_t dst = p.read_uint(Region::Network, 16, ValueType::U32);
    for (int len = 32; len >= 0; --len) {
      const auto& table = by_len_[static_cast<std::size_t>(len)];
      if (table.empty()) continue;
      const std::uint32_t mask = len == 0 ? 0 : ~std::uint32_t{0} << (32 - len);
      auto it = table.find(dst & mask);
      if (it != table.end()) return it->second;
    }
    throw Error(ErrorCode::DefaultRouteMissing, "no route for " + format_ipv4(dst));
  }

 private:
  std::array<std::unordered_map<std::uint32_t, std::size_t>, 33> by_len_;
};

// Rule: "any" or "proto src dst" where src/dst are "*", "addr[/len]" with an
// optional ":port" (port "*" allowed). Rule i routes to port i.
class FirstMatch final : public Action {
 public:
  FirstMatch(const ActionClass& cls, const ActionConfig& cfg)
      : Action(cls, cfg.instance_name, 1, cfg.args.size()) {
    for (const auto& raw : cfg.args) rules_.push_back(parse_rule(resolve_symbol(raw, cfg.bindings)));
  }

  std::optional<std::size_t> process(Packet& p, ActionContext&) override {
    const auto t = extract_five_tuple(p);
    for (std::size_t i = 0; i < rules_.size(); ++i) {
      if (matches(rules_[i], t)) return i;
    }
    return std::nullopt;
  }

 private:
  struct End {
    std::uint32_t addr = 0;
    unsigned len = 0;
    std::optional<std::uint16_t> port;
  };
  struct Rule {
    bool any = false;
    std::optional<std::uint8_t> proto;
    End src, dst;
  };

  static End parse_end(const std::string& text) {
    End e;
    std::string addr = text;
    auto colon = text.find(':');
    if (colon != std::string::npos) {
      addr = text.substr(0, colon);
      const std::string port = text.substr(colon + 1);
      if (port != "*") e.port = static_cast<std::uint16_t>(arg_uint(port, "port"));
    }
    if (addr != "*" && !addr.empty()) std::tie(e.addr, e.len) = parse_prefix(addr);
    return e;
  }

  static Rule parse_rule(const std::string& text) {
    std::istringstream in(text);
    std::vector<std::string> tok;
    for (std::string s; in >> s;) tok.push_back(s);
    Rule r;
    if (tok.size() == 1 && tok[0] == "any") {
      r.any = true;
      return r;
    }
    if (tok.size() != 3) throw Error(ErrorCode::InvalidArgument, "ACL rule '" + text + "' needs proto src dst");
    if (tok[0] == "tcp") r.proto = kProtoTcp;
    else if (tok[0] == "udp") r.proto = kProtoUdp;
    else if (tok[0] == "icmp") r.proto = 1;
    else if (tok[0] != "any" && tok[0] != "*") r.proto = static_cast<std::uint8_t>(arg_uint(tok[0], "proto"));
    r.src = parse_end(tok[1]);
    r.dst = parse_end(tok[2]);
    return r;
  }

  static bool end_matches(const End& e, std::uint32_t addr, std::uint16_t port) {
    const std::uint32_t mask = e.len == 0 ? 0 : ~std::uint32_t{0} << (32 - e.len);
    if ((addr & mask) != e.addr) return false;
    return !e.port || *e.port == port;
  }

  static bool matches(const Rule& r, const std::optional<FiveTuple>& t) {
    if (r.any) return true;
    if (!t) return false;
    if (r.proto && *r.proto != t->proto) return false;
    return end_matches(r.src, t->src, t->sport) && end_matches(r.dst, t->dst, t->dport);
  }

  std::vector<Rule> rules_;
};

Bytes parse_signature(std::string text) {
  if (text.size() >= 2 && text.front() == '"' && text.back() == '"') text = text.substr(1, text.size() - 2);
  Bytes out;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '\\' && i + 1 < text.size()) {
      const char c = text[++i];
      if (c == 'r') out.push_back('\r');
      else if (c == 'n') out.push_back('\n');
      else if (c == 't') out.push_back('\t');
      else if (c == 'x' && i + 2 < text.size()) {
        out.push_back(from_hex(text.substr(i + 1, 2))[0]);
        i += 2;
      } else {
        out.push_back(static_cast<std::uint8_t>(c));
      }
    } else {
      out.push_back(static_cast<std::uint8_t>(text[i]));
    }
  }
  if (out.empty()) throw Error(ErrorCode::InvalidArgument, "empty signature");
  return out;
}

// Aho-Corasick automaton over literal byte signatures.
class PatternMatch final : public Action {
 public:
  PatternMatch(const ActionClass& cls, const ActionConfig& cfg) : Action(cls, cfg.instance_name, 1, 2) {
    nodes_.emplace_back();
    for (std::size_t s = 0; s < cfg.args.size(); ++s) {
      sigs_.push_back(parse_signature(resolve_symbol(cfg.args[s], cfg.bindings)));
      int cur = 0;
      for (std::uint8_t b : sigs_.back()) {
        if (nodes_[cur].next[b] < 0) {
          nodes_[cur].next[b] = static_cast<int>(nodes_.size());
          nodes_.emplace_back();
        }
        cur = nodes_[cur].next[b];
      }
      nodes_[cur].out.push_back(s);
    }
    std::queue<int> q;
    for (int b = 0; b < 256; ++b) {
      int& nx = nodes_[0].next[b];
      if (nx < 0) {
        nx = 0;
      } else {
        nodes_[nx].fail = 0;
        q.push(nx);
      }
    }
    while (!q.empty()) {
      const int u = q.front();
      q.pop();
      const auto& fo = nodes_[nodes_[u].fail].out;
      nodes_[u].out.insert(nodes_[u].out.end(), fo.begin(), fo.end());
      for (int b = 0; b < 256; ++b) {
        const int v = nodes_[u].next[b];
        if (v < 0) {
          nodes_[u].next[b] = nodes_[nodes_[u].fail].next[b];
        } else {
          nodes_[v].fail = nodes_[nodes_[u].fail].next[b];
          q.push(v);
        }
      }
    }
  }

  std::optional<std::size_t> process(Packet& p, ActionContext& ctx) override {
    ByteView d = p.data();
    if (auto app = p.layer(Layer::App)) d = d.subspan(*app);
    std::size_t best_start = SIZE_MAX;
    std::size_t best_sig = 0;
    int cur = 0;
    for (std::size_t i = 0; i < d.size(); ++i) {
      cur = nodes_[cur].next[d[i]];
      for (std::size_t s : nodes_[cur].out) {
        const std::size_t start = i + 1 - sigs_[s].size();
        if (start < best_start || (start == best_start && s < best_sig)) {
          best_start = start;
          best_sig = s;
        }
      }
    }
    if (best_start == SIZE_MAX) return 1;
    Bytes payload(4);
    store_be32(payload.data(), static_cast<std::uint32_t>(best_sig));
    ctx.emit("pattern_hit", std::move(payload));
    return 0;
  }

 private:
  struct Node {
    std::array<int, 256> next;
    int fail = 0;
    std::vector<std::size_t> out;
    Node() { next.fill(-1); }
  };
  std::vector<Node> nodes_;
  std::vector<Bytes> sigs_;
};

ActionClass classifier(std::string name, std::string param, ActionFactory f, std::vector<std::string> events = {}) {
  ActionClass c;
  c.name = std::move(name);
  c.category = Category::OneToMany;
  c.params = {std::move(param)};
  c.min_args = 1;
  c.max_args = ActionClass::npos;
  c.events = std::move(events);
  c.factory = std::move(f);
  return c;
}

}  // namespace

void add_classify_actions(Registry& reg) {
  reg.add(classifier("ExactMatch", "RULE...", factory_of<ExactMatch>()));
  reg.add(classifier("LPM", "ROUTE...", factory_of<LPM>()));
  reg.add(classifier("FirstMatch", "RULE...", factory_of<FirstMatch>()));
  reg.add(classifier("PatternMatch", "SIGNATURE...", factory_of<PatternMatch>(), {"pattern_hit"}));
}

}  // namespace sdm::detail
