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
#include <cctype>
#include <deque>
#include <set>
#include <sstream>
#include <tuple>
#include <unordered_map>
#include <unordered_set>

#include "catalog.hpp"
#include "sdm/checksum.hpp"
#include "sdm/error.hpp"
#include "sdm/flow_table.hpp"
#include "sdm/headers.hpp"

namespace sdm::detail {

namespace {

std::pair<std::uint32_t, std::uint16_t> parse_endpoint(const std::string& text) {
  auto colon = text.find(':');
  if (colon == std::string::npos) {
    throw Error(ErrorCode::InvalidArgument, "endpoint '" + text + "' needs addr:port");
  }
  return {parse_ipv4(text.substr(0, colon)),
          static_cast<std::uint16_t>(arg_uint(text.substr(colon + 1), "port"))};
}

std::uint8_t parse_proto(const std::string& text) {
  if (text == "tcp") return kProtoTcp;
  if (text == "udp") return kProtoUdp;
  return static_cast<std::uint8_t>(arg_uint(text, "proto"));
}

bool has_ports(const FiveTuple& t) { return t.proto == kProtoTcp || t.proto == kProtoUdp; }

// Rewrites one endpoint (source or destination) of an IPv4 TCP/UDP packet,
// patching both checksums incrementally.
void rewrite_endpoint(Packet& p, bool source, std::uint32_t addr, std::uint16_t port) {
  const std::size_t addr_off = source ? 12 : 16;
  const std::size_t port_off = source ? 0 : 2;
  const std::uint8_t proto = static_cast<std::uint8_t>(p.read_uint(Region::Network, 9, ValueType::U8));
  const std::uint32_t old_addr = p.read_uint(Region::Network, addr_off, ValueType::U32);
  const auto old_port = static_cast<std::uint16_t>(p.read_uint(Region::Transport, port_off, ValueType::U16));

  auto ip_csum = static_cast<std::uint16_t>(p.read_uint(Region::Network, 10, ValueType::U16));
  p.write_uint(Region::Network, 10, ValueType::U16, checksum_adjust32(ip_csum, old_addr, addr));
  p.write_uint(Region::Network, addr_off, ValueType::U32, addr);

  const std::size_t csum_off = proto == kProtoTcp ? 16 : 6;
  auto l4 = static_cast<std::uint16_t>(p.read_uint(Region::Transport, csum_off, ValueType::U16));
  if (proto == kProtoTcp || l4 != 0) {
    l4 = checksum_adjust32(l4, old_addr, addr);
    l4 = checksum_adjust(l4, old_port, port);
    if (proto == kProtoUdp && l4 == 0) l4 = 0xffff;
    p.write_uint(Region::Transport, csum_off, ValueType::U16, l4);
  }
  p.write_uint(Region::Transport, port_off, ValueType::U16, port);
}

// Mapping items arrive from the CP through the "install" attribute:
//   "tcp 10.0.0.2:1234 198.51.100.7:80 -> 203.0.113.1:40000"
// translates the source of that flow and the destination of its reverse.
class NAT final : public Action {
 public:
  NAT(const ActionClass& cls, const ActionConfig& cfg) : Action(cls, cfg.instance_name, 1, 1) {
    store_attribute("HOLD", std::uint64_t{64});
    store_attribute("CAPACITY", std::uint64_t{65536});
  }

  std::optional<std::size_t> process(Packet& p, ActionContext& ctx) override {
    const auto t = extract_five_tuple(p);
    if (!t || !has_ports(*t) || !p.layer(Layer::Transport)) return 0;
    if (auto it = map_.find(*t); it != map_.end()) {
      apply(p, it->second);
      return 0;
    }
    if (!pending_.count(*t)) {
      if (map_.size() / 2 + pending_.size() >= require_uint("CAPACITY")) {
        ctx.emit("table_full", t->to_bytes());
        return std::nullopt;
      }
      pending_.insert(*t);
      ctx.emit("new_flow", t->to_bytes());
    }
    if (held_.size() >= require_uint("HOLD")) return std::nullopt;
    held_.emplace_back(*t, std::move(p));
    ctx.hold();
    return std::nullopt;
  }

  std::size_t retained() const override { return held_.size() + released_.size(); }

  std::vector<Packet> take_released() override {
    std::vector<Packet> out;
    out.swap(released_);
    return out;
  }

 protected:
  void on_attribute_set(std::string_view name, const AttrValue& value) override {
    if (name != "install") return;
    std::istringstream in(std::get<std::string>(value));
    std::vector<std::string> tok;
    for (std::string s; in >> s;) {
      if (s != "->") tok.push_back(s);
    }
    if (tok.size() != 4) {
      throw Error(ErrorCode::InvalidArgument, "install needs 'proto src:port dst:port -> new:port'");
    }
    FiveTuple fwd;
    fwd.proto = parse_proto(tok[0]);
    std::tie(fwd.src, fwd.sport) = parse_endpoint(tok[1]);
    std::tie(fwd.dst, fwd.dport) = parse_endpoint(tok[2]);
    const auto [naddr, nport] = parse_endpoint(tok[3]);
    map_[fwd] = {true, naddr, nport};
    const FiveTuple rev{fwd.dst, naddr, fwd.dport, nport, fwd.proto};
    map_[rev] = {false, fwd.src, fwd.sport};
    pending_.erase(fwd);
    pending_.erase(rev);
    for (auto it = held_.begin(); it != held_.end();) {
      auto m = map_.find(it->first);
      if (m == map_.end()) {
        ++it;
        continue;
      }
      apply(it->second, m->second);
      released_.push_back(std::move(it->second));
      it = held_.erase(it);
    }
  }

 private:
  struct Rewrite {
    bool source;
    std::uint32_t addr;
    std::uint16_t port;
  };
  static void apply(Packet& p, const Rewrite& r) { rewrite_endpoint(p, r.source, r.addr, r.port); }

  std::unordered_map<FiveTuple, Rewrite, FiveTupleHash> map_;
  std::unordered_set<FiveTuple, FiveTupleHash> pending_;
  std::deque<std::pair<FiveTuple, Packet>> held_;
  std::vector<Packet> released_;
};

// Stateful TCP filter: a SYN opens both directions, a RST closes both.
// Port 0 permits, port 1 denies.
class FirewallTCP final : public Action {
 public:
  FirewallTCP(const ActionClass& cls, const ActionConfig& cfg)
      : Action(cls, cfg.instance_name, 1, 2),
        allow_(cfg.args.empty() ? 65536 : arg_uint(cfg.args[0], "capacity")) {
    store_attribute("CAPACITY", std::uint64_t{allow_.capacity()});
  }

  std::optional<std::size_t> process(Packet& p, ActionContext&) override {
    const auto t = extract_five_tuple(p);
    if (!t || t->proto != kProtoTcp || !p.layer(Layer::Transport)) return 1;
    const auto flags = p.read_uint(Region::Transport, 13, ValueType::U8);
    if ((flags & kTcpSyn) && !(flags & kTcpAck)) {
      allow_.insert(*t, 1);
      allow_.insert(t->reversed(), 1);
      return 0;
    }
    if (!allow_.find(*t)) return 1;
    if (flags & kTcpRst) {
      allow_.erase(*t);
      allow_.erase(t->reversed());
    }
    return 0;
  }

  std::size_t entries() const { return allow_.size(); }

 private:
  LruTable<FiveTuple, char, FiveTupleHash> allow_;
};

// FTP control-channel monitor. Port 0 passes, port 1 blocks.
class FtpIPS final : public Action {
 public:
  FtpIPS(const ActionClass& cls, const ActionConfig& cfg)
      : Action(cls, cfg.instance_name, 1, 2),
        sessions_(cfg.args.size() > 1 ? arg_uint(cfg.args[1], "capacity") : 65536) {
    port_ = cfg.args.empty() ? 21 : static_cast<std::uint16_t>(arg_uint(cfg.args[0], "port"));
    store_attribute("PORT", std::uint64_t{port_});
    store_attribute("CAPACITY", std::uint64_t{sessions_.capacity()});
    store_attribute("RESTRICTED", std::string("RETR,STOR,DELE,LIST"));
  }

  std::optional<std::size_t> process(Packet& p, ActionContext& ctx) override {
    const auto t = extract_five_tuple(p);
    if (!t || t->proto != kProtoTcp || !p.layer(Layer::Transport)) return 0;
    const std::string line = first_word(p);
    if (t->sport == port_) {
      if (line.rfind("530", 0) == 0) {
        if (Session* s = sessions_.find(t->reversed())) *s = {};
      }
      return 0;
    }
    if (t->dport != port_ || line.empty()) return 0;
    Session* s = sessions_.find(*t);
    if (!s) {
      sessions_.insert(*t, {});
      s = sessions_.find(*t);
    }
    if (line == "USER") {
      *s = {true, false};
    } else if (line == "PASS") {
      if (s->user_seen) s->authenticated = true;
    } else if (!s->authenticated && restricted(line)) {
      Bytes payload = t->to_bytes();
      payload.insert(payload.end(), line.begin(), line.end());
      ctx.emit("alert", std::move(payload));
      return 1;
    }
    return 0;
  }

 private:
  struct Session {
    bool user_seen = false;
    bool authenticated = false;
  };

  static std::string first_word(const Packet& p) {
    const auto app = p.layer(Layer::App);
    if (!app) return {};
    const ByteView d = p.data().subspan(*app);
    std::string w;
    for (std::uint8_t c : d) {
      if (c == ' ' || c == '\r' || c == '\n' || w.size() >= 16) break;
      w.push_back(static_cast<char>(std::toupper(c)));
    }
    return w;
  }

  bool restricted(const std::string& cmd) const {
    std::istringstream in(require_text("RESTRICTED"));
    for (std::string item; std::getline(in, item, ',');) {
      if (item == cmd) return true;
    }
    return false;
  }

  std::uint16_t port_;
  LruTable<FiveTuple, Session, FiveTupleHash> sessions_;
};

}  // namespace

void add_middlebox_actions(Registry& reg) {
  ActionClass nat;
  nat.name = "NAT";
  nat.category = Category::OneToOne;
  nat.attributes = {attr("install", AttrKind::Text, true), uint_attr("HOLD", 32), uint_attr("CAPACITY", 32)};
  nat.events = {"new_flow", "table_full"};
  nat.factory = factory_of<NAT>();
  reg.add(std::move(nat));

  ActionClass fw;
  fw.name = "FirewallTCP";
  fw.category = Category::OneToMany;
  fw.params = {"CAPACITY"};
  fw.max_args = 1;
  fw.attributes = {uint_attr("CAPACITY", 32)};
  fw.factory = factory_of<FirewallTCP>();
  reg.add(std::move(fw));

  ActionClass ips;
  ips.name = "FtpIPS";
  ips.category = Category::OneToMany;
  ips.params = {"PORT", "CAPACITY"};
  ips.max_args = 2;
  ips.attributes = {uint_attr("PORT", 16), uint_attr("CAPACITY", 32),
                    attr("RESTRICTED", AttrKind::Text, true)};
  ips.events = {"alert"};
  ips.factory = factory_of<FtpIPS>();
  reg.add(std::move(ips));
}

}  // namespace sdm::detail
