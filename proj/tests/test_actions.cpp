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

#include <gtest/gtest.h>

#include <random>

#include "sdm/action.hpp"
#include "sdm/bytes.hpp"
#include "sdm/cipher.hpp"
#include "sdm/registry.hpp"
#include "util.hpp"

using namespace sdm;
using testutil::marked;

namespace {

const Registry& reg() {
  static const Registry r = builtin_registry();
  return r;
}

std::unique_ptr<Action> make(const std::string& cls, std::vector<std::string> args = {},
                             const Bindings* b = nullptr) {
  const ActionClass* c = reg().find(cls);
  if (!c) throw std::runtime_error("no class " + cls);
  return c->instantiate({cls + "_0", std::move(args), b});
}

std::optional<std::size_t> run(Action& a, Packet& p, std::vector<Event>* events = nullptr) {
  ActionContext ctx(a.name());
  auto port = a.process(p, ctx);
  if (events) *events = ctx.events();
  return port;
}

}  // namespace

TEST(Catalog, ArityInvariantOnEveryClass) {
  // Minimal valid arguments per variadic class.
  const std::map<std::string, std::vector<std::string>> args = {
      {"ExactMatch", {"12/0800", "-"}}, {"LPM", {"0.0.0.0/0 0", "10.0.0.0/8 1"}},
      {"FirstMatch", {"tcp * *", "any"}}, {"PatternMatch", {"USER"}},
      {"PrioSched", {"3"}},              {"WRRSched", {"2", "1"}},
      {"FromDevice", {"0"}},             {"ToDevice", {"0"}},
      {"DecapHeader", {"14"}},           {"Pad", {"4"}},
      {"Unpad", {"4"}},                  {"SetECN", {"1"}},
      {"ChangeSrcIP", {"IP_SRC"}},       {"ChangeDstIP", {"IP_DST"}},
      {"EncapHeader", {"MAC_DEST", "MAC_SRC", "ETHERTYPE"}}};
  for (const auto& name : reg().names()) {
    const ActionClass& c = *reg().find(name);
    auto it = args.find(name);
    auto a = c.instantiate({"x", it == args.end() ? std::vector<std::string>{} : it->second, nullptr});
    switch (c.category) {
      case Category::Starting: EXPECT_TRUE(a->inputs() == 0 && a->outputs() == 1) << name; break;
      case Category::Ending: EXPECT_TRUE(a->inputs() == 1 && a->outputs() == 0) << name; break;
      case Category::OneToOne: EXPECT_TRUE(a->inputs() == 1 && a->outputs() == 1) << name; break;
      case Category::OneToMany: EXPECT_TRUE(a->inputs() == 1 && a->outputs() >= 2) << name; break;
      case Category::ManyToOne: EXPECT_TRUE(a->inputs() >= 1 && a->outputs() == 1) << name; break;
    }
  }
  EXPECT_SDM_ERROR(make("DecapHeader", {"1", "2"}), ErrorCode::ArityMismatch);
}

TEST(ExactMatch, EtherTypeRules) {
  auto m = make("ExactMatch", {"12/0800", "-"});
  Packet ip = marked(oracle::build_frame({}));
  EXPECT_EQ(run(*m, ip), 0u);
  Packet arp = marked(oracle::build_frame({.ethertype = 0x0806}));
  EXPECT_EQ(run(*m, arp), 1u);
  Packet runt(Bytes(10, 0));
  EXPECT_EQ(run(*m, runt), 1u);
  auto sym = make("ExactMatch", {"PROTO_IP", "-"});
  EXPECT_EQ(run(*sym, ip), 0u);
}

TEST(Lpm, AgainstBruteForce) {
  auto a = make("LPM", {"10.0.0.0/8 0", "10.1.0.0/16 1", "0.0.0.0/0 2"});
  auto probe = [&](std::uint32_t dst) {
    Packet p = marked(oracle::build_frame({.dst = dst}));
    return run(*a, p);
  };
  EXPECT_EQ(probe(parse_ipv4("10.1.2.3")), 1u);
  EXPECT_EQ(probe(parse_ipv4("11.0.0.1")), 2u);

  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<oracle::Route> routes;
    std::vector<std::string> args;
    const int n = 1 + static_cast<int>(rng() % 8);
    for (int i = 0; i < n; ++i) {
      const unsigned len = static_cast<unsigned>(rng() % 25);
      const std::uint32_t mask = len == 0 ? 0 : 0xffffffffu << (32 - len);
      const std::uint32_t pre = (0x0a000000u | static_cast<std::uint32_t>(rng() & 0x00ffffff)) & mask;
      bool dup = false;
      for (const auto& r : routes) dup = dup || (r.len == len && r.prefix == pre);
      if (dup) continue;
      routes.push_back({pre, len, routes.size()});
      args.push_back(format_ipv4(pre) + "/" + std::to_string(len) + " " + std::to_string(routes.size() - 1));
    }
    if (routes.size() < 2) continue;
    auto lpm = make("LPM", args);
    for (int k = 0; k < 50; ++k) {
      const std::uint32_t dst = routes[rng() % routes.size()].prefix | static_cast<std::uint32_t>(rng() % 256);
      Packet p = marked(oracle::build_frame({.dst = dst}));
      auto want = oracle::lpm(routes, dst);
      if (want) {
        ASSERT_EQ(run(*lpm, p), *want);
      } else {
        EXPECT_SDM_ERROR(run(*lpm, p), ErrorCode::DefaultRouteMissing);
      }
    }
  }
}

TEST(FirstMatch, AgainstLinearScan) {
  auto acl = make("FirstMatch", {"tcp * *:23", "any"});
  Packet telnet = marked(oracle::build_frame({.dport = 23, .flags = 0x02}));
  EXPECT_EQ(run(*acl, telnet), 0u);
  Packet web = marked(oracle::build_frame({}));
  EXPECT_EQ(run(*acl, web), 1u);

  std::mt19937_64 rng(4);
  const char* protos[] = {"tcp", "udp", "*"};
  for (int trial = 0; trial < 40; ++trial) {
    std::vector<oracle::AclRule> rules;
    std::vector<std::string> args;
    for (int i = 0; i < 5; ++i) {
      oracle::AclRule r;
      const int pi = static_cast<int>(rng() % 3);
      if (pi == 0) r.proto = 6;
      if (pi == 1) r.proto = 17;
      r.src_len = static_cast<unsigned>(rng() % 3) * 8;
      r.src = r.src_len ? 0x0a000000u : 0;
      r.dst_len = static_cast<unsigned>(rng() % 2) * 24;
      r.dst = r.dst_len ? 0x0a000100u : 0;
      if (rng() % 2) r.dport = static_cast<std::uint16_t>(20 + rng() % 5);
      auto end = [](std::uint32_t a, unsigned l, std::optional<std::uint16_t> port) {
        std::string s = l ? format_ipv4(a) + "/" + std::to_string(l) : "*";
        return port ? s + ":" + std::to_string(*port) : s;
      };
      args.push_back(std::string(protos[pi]) + " " + end(r.src, r.src_len, std::nullopt) + " " +
                     end(r.dst, r.dst_len, r.dport));
      rules.push_back(r);
    }
    args.push_back("any");
    rules.push_back({});
    auto a = make("FirstMatch", args);
    for (int k = 0; k < 40; ++k) {
      oracle::FrameSpec s;
      s.proto = rng() % 2 ? 6 : 17;
      s.src = (rng() % 2 ? 0x0a000000u : 0x0b000000u) | static_cast<std::uint32_t>(rng() % 0xffff);
      s.dst = (rng() % 2 ? 0x0a000100u : 0x0a000200u) | static_cast<std::uint32_t>(rng() % 256);
      s.dport = static_cast<std::uint16_t>(20 + rng() % 6);
      Packet p = marked(oracle::build_frame(s));
      ASSERT_EQ(run(*a, p), oracle::acl(rules, s.proto, s.src, s.dst, s.sport, s.dport));
    }
  }
}

TEST(PatternMatch, SignaturesAgainstNaiveScan) {
  auto m = make("PatternMatch", {"USER"});
  Packet ftp = marked(oracle::build_frame({.dport = 21, .payload = oracle::bytes_of("USER alice\r\n")}));
  std::vector<Event> ev;
  EXPECT_EQ(run(*m, ftp, &ev), 0u);
  ASSERT_EQ(ev.size(), 1u);
  EXPECT_EQ(ev[0].name, "pattern_hit");
  EXPECT_EQ(oracle::be32(ev[0].payload, 0), 0u);
  Packet other = marked(oracle::build_frame({.payload = oracle::bytes_of("hello")}));
  EXPECT_EQ(run(*m, other, &ev), 1u);
  EXPECT_TRUE(ev.empty());

  std::mt19937_64 rng(9);
  const std::vector<std::string> sigs = {"abc", "bcd", "ca", "dd", "abcab"};
  std::vector<oracle::Buf> sigb;
  for (const auto& s : sigs) sigb.push_back(oracle::bytes_of(s));
  auto multi = make("PatternMatch", sigs);
  for (int i = 0; i < 500; ++i) {
    std::string text;
    for (int k = 0; k < 12; ++k) text.push_back("abcd"[rng() % 4]);
    Packet p = marked(oracle::build_frame({.payload = oracle::bytes_of(text)}));
    const auto want = oracle::first_signature(oracle::bytes_of(text), sigb);
    ASSERT_EQ(run(*multi, p, &ev), want ? 0u : 1u) << text;
    if (want) ASSERT_EQ(oracle::be32(ev.at(0).payload, 0), *want) << text;
  }
}

namespace {
Packet tagged(std::uint8_t tag) { return Packet(Bytes{tag}); }
std::vector<int> drain(Action& s) {
  ActionContext ctx("s");
  std::vector<int> out;
  while (auto p = s.pull(ctx)) out.push_back(p->data()[0]);
  return out;
}
}  // namespace

TEST(Schedulers, StrictPriority) {
  auto sp = make("PrioSched", {"2"});
  ActionContext ctx("sp");
  sp->enqueue(1, tagged('B'), ctx);
  sp->enqueue(0, tagged('A'), ctx);
  sp->enqueue(1, tagged('C'), ctx);
  EXPECT_EQ(drain(*sp), (std::vector<int>{'A', 'B', 'C'}));
}

TEST(Schedulers, WeightedRoundRobin) {
  auto w = make("WRRSched", {"2", "1"});
  ActionContext ctx("w");
  for (int i = 0; i < 6; ++i) w->enqueue(0, tagged(0), ctx);
  for (int i = 0; i < 3; ++i) w->enqueue(1, tagged(1), ctx);
  EXPECT_EQ(drain(*w), (std::vector<int>{0, 0, 1, 0, 0, 1, 0, 0, 1}));
  for (int i = 0; i < 3; ++i) w->enqueue(1, tagged(1), ctx);
  EXPECT_EQ(drain(*w), (std::vector<int>{1, 1, 1}));
}

TEST(Schedulers, ConservePackets) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    auto s = trial % 2 ? make("WRRSched", {"3", "1", "2"}) : make("PrioSched", {"3"});
    ActionContext ctx("s");
    std::multiset<int> in;
    std::vector<int> out;
    for (int i = 0; i < 200; ++i) {
      if (rng() % 3) {
        const int tag = static_cast<int>(rng() % 250);
        if (s->enqueue(rng() % 3, tagged(static_cast<std::uint8_t>(tag)), ctx)) in.insert(tag);
      } else if (auto p = s->pull(ctx)) {
        out.push_back(p->data()[0]);
      }
    }
    for (int x : drain(*s)) out.push_back(x);
    EXPECT_EQ(std::multiset<int>(out.begin(), out.end()), in);
    EXPECT_EQ(s->retained(), 0u);
  }
}

TEST(Straight, DecTtlFixesChecksum) {
  auto d = make("DecTTL");
  Packet p = marked(oracle::build_frame({.ttl = 64}));
  EXPECT_EQ(run(*d, p), 0u);
  oracle::Buf out = testutil::bytes(p);
  EXPECT_EQ(out[22], 63);
  EXPECT_TRUE(oracle::ipv4_checksum_ok(out));
  for (std::uint8_t ttl : {std::uint8_t{0}, std::uint8_t{1}}) {
    Packet q = marked(oracle::build_frame({.ttl = ttl}));
    std::vector<Event> ev;
    EXPECT_FALSE(run(*d, q, &ev));
    ASSERT_EQ(ev.size(), 1u);
    EXPECT_EQ(ev[0].name, "ttl_expired");
  }
  std::mt19937_64 rng(8);
  for (int i = 0; i < 500; ++i) {
    oracle::FrameSpec s;
    s.ttl = static_cast<std::uint8_t>(2 + rng() % 250);
    s.ihl = static_cast<std::uint8_t>(5 + rng() % 11);
    s.src = static_cast<std::uint32_t>(rng());
    Packet q = marked(oracle::build_frame(s));
    ASSERT_EQ(run(*d, q), 0u);
    ASSERT_TRUE(oracle::ipv4_checksum_ok(testutil::bytes(q)));
  }
}

TEST(Straight, EspRequiresNegotiatedAttributes) {
  auto e = make("ESPEncap");
  Packet p = marked(oracle::build_frame({}));
  EXPECT_SDM_ERROR(run(*e, p), ErrorCode::AttributeUnset);
  e->set_attribute("SPI", std::uint64_t{0x1001});
  e->set_attribute("RPL", std::uint64_t{1});
  const std::size_t before = p.size();
  run(*e, p);
  run(*e, p);
  EXPECT_EQ(oracle::be32(testutil::bytes(p), 0), 0x1001u);
  EXPECT_EQ(oracle::be32(testutil::bytes(p), 4), 2u);
  EXPECT_GT(p.size(), before);
}

TEST(Straight, XorCipherIsInvolution) {
  auto c = make("Cipher", {"xor", "0a0b0c0d"});
  c->set_attribute("OFFSET", std::uint64_t{0});
  oracle::Buf f = oracle::build_frame({.payload = oracle::Buf(30, 5)});
  Packet p(f);
  run(*c, p);
  EXPECT_NE(testutil::bytes(p), f);
  run(*c, p);
  EXPECT_EQ(testutil::bytes(p), f);
}

TEST(Straight, AesMatchesKnownVector) {
  // FIPS-197 appendix C.1.
  auto aes = make_cipher("aes");
  Bytes key = from_hex("000102030405060708090a0b0c0d0e0f");
  Bytes block = from_hex("00112233445566778899aabbccddeeff");
  aes->encrypt(block, key);
  EXPECT_EQ(to_hex(block), "69c4e0d86a7b0430d8cdb78070b4c55a");
  aes->decrypt(block, key);
  EXPECT_EQ(to_hex(block), "00112233445566778899aabbccddeeff");
}

TEST(Straight, DecapUnderflow) {
  auto d = make("DecapHeader", {"100"});
  Packet p = marked(oracle::build_frame({}));
  EXPECT_SDM_ERROR(run(*d, p), ErrorCode::Underflow);
}

TEST(Attributes, ControlInterface) {
  auto c = make("ChangeSrcIP", {"IP_SRC"});
  EXPECT_SDM_ERROR(c->set_attribute_text("NOPE", "1"), ErrorCode::UnknownAttribute);
  c->set_attribute_text("IP_SRC", "10.0.0.9");
  c->start();
  Packet p = marked(oracle::build_frame({}));
  run(*c, p);
  EXPECT_EQ(oracle::be32(testutil::bytes(p), 26), parse_ipv4("10.0.0.9"));
  EXPECT_SDM_ERROR(c->set_attribute_text("IP_SRC", "10.0.0.1"), ErrorCode::NotRuntimeSettable);

  Bindings b{{"IP_SRC", "192.0.2.1"}};
  auto bound = make("ChangeSrcIP", {"IP_SRC"}, &b);
  EXPECT_EQ(std::get<std::uint64_t>(*bound->get_attribute("IP_SRC")), parse_ipv4("192.0.2.1"));

  auto counter = make("PacketCounter");
  counter->start();
  for (int i = 0; i < 5; ++i) {
    Packet q = marked(oracle::build_frame({}));
    run(*counter, q);
  }
  EXPECT_EQ(std::get<std::uint64_t>(*counter->get_attribute("count")), 5u);
}

TEST(Nat, InstallAndTranslate) {
  auto nat = make("NAT");
  nat->start();
  oracle::FrameSpec out{.src = parse_ipv4("10.0.0.2"), .dst = parse_ipv4("198.51.100.7"), .sport = 1234, .dport = 80};
  Packet first = marked(oracle::build_frame(out));
  std::vector<Event> ev;
  EXPECT_FALSE(run(*nat, first, &ev));
  ASSERT_EQ(ev.size(), 1u);
  EXPECT_EQ(ev[0].name, "new_flow");
  EXPECT_EQ(nat->retained(), 1u);

  nat->set_attribute_text("install", "tcp 10.0.0.2:1234 198.51.100.7:80 -> 203.0.113.1:40000");
  auto released = nat->take_released();
  ASSERT_EQ(released.size(), 1u);
  oracle::Buf r = testutil::bytes(released[0]);
  EXPECT_EQ(oracle::be32(r, 26), parse_ipv4("203.0.113.1"));
  EXPECT_EQ(oracle::be16(r, 34), 40000);
  EXPECT_TRUE(oracle::ipv4_checksum_ok(r));
  EXPECT_EQ(oracle::be16(r, 50), oracle::l4_checksum(r));

  Packet again = marked(oracle::build_frame(out));
  EXPECT_EQ(run(*nat, again), 0u);
  EXPECT_EQ(testutil::bytes(again), r);

  oracle::FrameSpec back{.src = parse_ipv4("198.51.100.7"), .dst = parse_ipv4("203.0.113.1"), .sport = 80, .dport = 40000};
  Packet reply = marked(oracle::build_frame(back));
  EXPECT_EQ(run(*nat, reply), 0u);
  oracle::Buf rb = testutil::bytes(reply);
  EXPECT_EQ(oracle::be32(rb, 30), parse_ipv4("10.0.0.2"));
  EXPECT_EQ(oracle::be16(rb, 36), 1234);
  EXPECT_TRUE(oracle::ipv4_checksum_ok(rb));
  EXPECT_EQ(oracle::be16(rb, 50), oracle::l4_checksum(rb));
}

TEST(Nat, HoldLimitThenDrop) {
  auto nat = make("NAT");
  nat->set_attribute("HOLD", std::uint64_t{2});
  nat->start();
  for (int i = 0; i < 4; ++i) {
    Packet p = marked(oracle::build_frame({}));
    run(*nat, p);
  }
  EXPECT_EQ(nat->retained(), 2u);
}

TEST(Firewall, ResetClosesBothDirections) {
  auto fw = make("FirewallTCP");
  oracle::FrameSpec a{.sport = 5000, .dport = 80};
  oracle::FrameSpec other{.sport = 6000, .dport = 80};
  auto send = [&](oracle::FrameSpec s, std::uint8_t flags) {
    s.flags = flags;
    Packet p = marked(oracle::build_frame(s));
    return run(*fw, p);
  };
  EXPECT_EQ(send(a, 0x10), 1u);
  EXPECT_EQ(send(a, 0x02), 0u);
  EXPECT_EQ(send(other, 0x02), 0u);
  EXPECT_EQ(send(a, 0x10), 0u);
  oracle::FrameSpec rev{.src = a.dst, .dst = a.src, .sport = 80, .dport = 5000};
  EXPECT_EQ(send(rev, 0x10), 0u);
  EXPECT_EQ(send(rev, 0x14), 0u);
  EXPECT_EQ(send(a, 0x10), 1u);
  EXPECT_EQ(send(rev, 0x10), 1u);
  EXPECT_EQ(send(other, 0x10), 0u);
}

TEST(FtpIps, AuthenticationStateMachine) {
  auto ips = make("FtpIPS");
  auto cmd = [&](std::uint16_t sport, const std::string& line, std::vector<Event>* ev = nullptr) {
    Packet p = marked(oracle::build_frame({.sport = sport, .dport = 21, .payload = oracle::bytes_of(line + "\r\n")}));
    return run(*ips, p, ev);
  };
  std::vector<Event> ev;
  EXPECT_EQ(cmd(4000, "USER alice"), 0u);
  EXPECT_EQ(cmd(4000, "PASS secret"), 0u);
  EXPECT_EQ(cmd(4000, "RETR file", &ev), 0u);
  EXPECT_TRUE(ev.empty());
  EXPECT_EQ(cmd(4001, "RETR file", &ev), 1u);
  ASSERT_EQ(ev.size(), 1u);
  EXPECT_EQ(ev[0].name, "alert");
  Packet web = marked(oracle::build_frame({.dport = 80, .payload = oracle::bytes_of("RETR x")}));
  const oracle::Buf before = testutil::bytes(web);
  EXPECT_EQ(run(*ips, web, &ev), 0u);
  EXPECT_TRUE(ev.empty());
  EXPECT_EQ(testutil::bytes(web), before);
}

TEST(Actions, ClassificationIsPureUnderReplay) {
  std::mt19937_64 rng(12);
  auto a = make("FirstMatch", {"tcp 10.0.0.0/8 *", "udp * *:53", "any"});
  auto b = make("FirstMatch", {"tcp 10.0.0.0/8 *", "udp * *:53", "any"});
  for (int i = 0; i < 300; ++i) {
    oracle::FrameSpec s{.src = static_cast<std::uint32_t>(rng()), .dport = static_cast<std::uint16_t>(rng() % 100),
                        .proto = static_cast<std::uint8_t>(rng() % 2 ? 6 : 17)};
    Packet p = marked(oracle::build_frame(s)), q = marked(oracle::build_frame(s));
    ASSERT_EQ(run(*a, p), run(*b, q));
    ASSERT_EQ(run(*a, p), run(*b, q));
  }
}
