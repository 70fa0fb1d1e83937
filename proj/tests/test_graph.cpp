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

#include <fstream>
#include <random>
#include <sstream>
#include <thread>

#include "sdm/bytes.hpp"
#include "sdm/cipher.hpp"
#include "sdm/graph.hpp"
#include "sdm/pipeline.hpp"
#include "sdm/registry.hpp"
#include "sdm/script.hpp"
#include "util.hpp"

using namespace sdm;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const Registry& reg() {
  static const Registry r = builtin_registry();
  return r;
}

const Bindings kIpsecBindings = {{"IP_SRC", "192.0.2.1"},
                                 {"IP_DST", "198.51.100.1"},
                                 {"MAC_DEST", "02:00:00:00:00:bb"},
                                 {"MAC_SRC", "02:00:00:00:00:aa"}};
const char* kAesKey = "2b7e151628aed2a6abf7158809cf4f3c";

std::unique_ptr<Pipeline> ipsec_pipeline() {
  auto p = std::make_unique<Pipeline>(build_graph(parse_script(slurp(testutil::data_path("ipsec.ofs"))), reg(),
                                                  &kIpsecBindings),
                                      "ipsec");
  p->action("espencap").set_attribute("SPI", std::uint64_t{0x100});
  p->action("espencap").set_attribute("RPL", std::uint64_t{1});
  p->action("aes").set_attribute("KEY", from_hex(kAesKey));
  p->start();
  return p;
}

TraceRecord rec(std::uint64_t ts, std::uint64_t port, const oracle::Buf& b) { return {ts, port, b}; }

}  // namespace

TEST(Script, ParsesGoldenScript) {
  ScriptAst ast = parse_script(slurp(testutil::data_path("ipsec.ofs")));
  EXPECT_EQ(ast.declarations.size(), 11u);
  EXPECT_EQ(ast.connections.size(), 11u);
  EXPECT_EQ(ast.declarations[1].class_name, "ExactMatch");
  EXPECT_EQ(ast.declarations[1].args, (std::vector<std::string>{"PROTO_IP", "-"}));
  EXPECT_EQ(ast.connections.back().dst, "discard");
  EXPECT_EQ(parse_script(print_script(ast)), ast);
}

TEST(Script, SmallCases) {
  EXPECT_EQ(parse_script(""), ScriptAst{});
  ScriptAst one = parse_script("@ ExactMatch(PROTO_IP,-) m");
  EXPECT_EQ(one.declarations.size(), 1u);
  EXPECT_TRUE(one.connections.empty());
  try {
    parse_script("@ A a\n@ B a\n");
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DuplicateInstance);
    EXPECT_EQ(e.line(), 2);
  }
  try {
    parse_script("@ A a\na 0 x b\n");
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SyntaxError);
    EXPECT_EQ(e.line(), 2);
    EXPECT_GT(e.column(), 0);
  }
}

TEST(Script, RandomRoundTrip) {
  std::mt19937_64 rng(21);
  for (int t = 0; t < 200; ++t) {
    ScriptAst a;
    const int n = 1 + static_cast<int>(rng() % 6);
    for (int i = 0; i < n; ++i) {
      Declaration d;
      d.class_name = "Cls" + std::to_string(rng() % 5);
      d.instance = "n" + std::to_string(i);
      for (std::size_t k = rng() % 3; k > 0; --k) d.args.push_back(std::to_string(rng() % 100) + "/0800");
      a.declarations.push_back(d);
    }
    for (int i = 0; i < n; ++i) {
      Connection c;
      c.src = "n" + std::to_string(rng() % n);
      c.dst = "n" + std::to_string(rng() % n);
      c.src_port = rng() % 4;
      c.dst_port = rng() % 4;
      a.connections.push_back(c);
    }
    ASSERT_EQ(parse_script(print_script(a)), a);
  }
}

TEST(Graph, GoldenGraphValidates) {
  ActionGraph g = build_graph(parse_script(slurp(testutil::data_path("ipsec.ofs"))), reg(), &kIpsecBindings);
  ValidationReport r = validate_graph(g);
  EXPECT_TRUE(r.ok);
  EXPECT_EQ(r.node_count, 12u);
  EXPECT_EQ(r.edge_count, 11u);
  ASSERT_TRUE(g.find("discard"));
  EXPECT_TRUE(g.nodes[*g.find("discard")].implicit);
}

TEST(Graph, BuildErrors) {
  EXPECT_SDM_ERROR(build_graph(parse_script("@ FromDevice(0) a\na 0 0 foo"), reg()), ErrorCode::UnknownInstance);
  EXPECT_SDM_ERROR(build_graph(parse_script("@ BogusAction x"), reg()), ErrorCode::UnknownClass);
  EXPECT_SDM_ERROR(build_graph(parse_script("@ DecapHeader(1,2) x"), reg()), ErrorCode::ArityMismatch);
}

namespace {
bool has_issue(const ValidationReport& r, const std::string& kind) {
  for (const auto& e : r.errors)
    if (e.kind == kind) return true;
  return false;
}
}  // namespace

TEST(Graph, ValidationFailures) {
  auto cyc = validate_graph(build_graph(parse_script("@ FromDevice(0) s\n@ ExactMatch(-,-) m\n@ PacketCounter a\n"
                                                     "@ PacketCounter b\n@ ToDevice(1) t\n"
                                                     "s 0 0 m; m 0 0 a; a 0 0 b; b 0 0 a; m 1 0 t"),
                                        reg()));
  EXPECT_FALSE(cyc.ok);
  EXPECT_TRUE(has_issue(cyc, "cycle"));
  auto dangling = validate_graph(
      build_graph(parse_script("@ FromDevice(0) s\n@ ExactMatch(12/0800,-) m\n@ ToDevice(1) t\ns 0 0 m; m 0 0 t"), reg()));
  EXPECT_FALSE(dangling.ok);
  EXPECT_TRUE(has_issue(dangling, "dangling_port"));
  auto unset = validate_graph(build_graph(parse_script(slurp(testutil::data_path("ipsec.ofs"))), reg()));
  EXPECT_TRUE(unset.ok);
  EXPECT_FALSE(unset.warnings.empty());
}

TEST(Pipeline, IpsecFrameIsEncapsulated) {
  auto p = ipsec_pipeline();
  const oracle::Buf frame = oracle::build_frame({.payload = oracle::bytes_of("secret payload")});
  RunResult r = p->run({rec(0, 1, frame)});
  ASSERT_EQ(r.outputs.size(), 1u);
  EXPECT_EQ(r.outputs[0].device, 2u);
  const oracle::Buf out = testutil::bytes(r.outputs[0].packet);
  EXPECT_EQ(oracle::be16(out, 12), 0x0800);
  EXPECT_EQ(to_hex(ByteView(out.data(), 6)), "0200000000bb");
  EXPECT_EQ(out[14], 0x45);
  EXPECT_EQ(out[14 + 9], 50);
  EXPECT_EQ(oracle::be32(out, 26), parse_ipv4("192.0.2.1"));
  EXPECT_EQ(oracle::be32(out, 30), parse_ipv4("198.51.100.1"));
  EXPECT_EQ(oracle::be16(out, 16), out.size() - 14);
  EXPECT_TRUE(oracle::ipv4_checksum_ok(out));
  EXPECT_EQ(oracle::be32(out, 34), 0x100u);
  EXPECT_EQ(oracle::be32(out, 38), 1u);

  // Decrypt the ESP body independently and recover the inner packet.
  oracle::Buf body(out.begin() + 42, out.end());
  ASSERT_EQ(body.size() % 16, 0u);
  make_cipher("aes")->decrypt(body, from_hex(kAesKey));
  const oracle::Buf inner(frame.begin() + 14, frame.end());
  ASSERT_GE(body.size(), inner.size() + 2);
  EXPECT_TRUE(std::equal(inner.begin(), inner.end(), body.begin()));
  EXPECT_EQ(body.back(), 4);
  EXPECT_EQ(body[body.size() - 2], body.size() - 2 - inner.size());
}

TEST(Pipeline, ArpIsDiscarded) {
  auto p = ipsec_pipeline();
  RunResult r = p->run({rec(0, 1, oracle::build_frame({.ethertype = 0x0806}))});
  EXPECT_TRUE(r.outputs.empty());
  EXPECT_EQ(r.stats.discarded, 1u);
}

TEST(Pipeline, StrictPriorityDrainOrder) {
  const char* script =
      "@ FromDevice(0) hi\n@ FromDevice(1) lo\n@ PrioSched(2) sp\n@ ToDevice(9) out\n"
      "hi 0 0 sp; lo 0 1 sp; sp 0 0 out";
  Pipeline p(build_graph(parse_script(script), reg()));
  p.start();
  std::vector<TraceRecord> trace;
  for (int i = 0; i < 3; ++i) {
    trace.push_back(rec(0, 1, oracle::Buf{static_cast<std::uint8_t>(10 + i)}));
    trace.push_back(rec(0, 0, oracle::Buf{static_cast<std::uint8_t>(i)}));
  }
  RunResult r = p.run(trace);
  std::vector<int> order;
  std::vector<std::uint64_t> ticks;
  for (const auto& o : r.outputs) {
    order.push_back(o.packet.data()[0]);
    ticks.push_back(o.tick);
  }
  EXPECT_EQ(order, (std::vector<int>{0, 1, 2, 10, 11, 12}));
  EXPECT_EQ(ticks, (std::vector<std::uint64_t>{0, 1, 2, 3, 4, 5}));
}

TEST(Pipeline, FaultIsCountedAndRunContinues) {
  const char* script = "@ FromDevice(0) s\n@ DecapHeader(30) d\n@ ToDevice(1) t\ns 0 0 d; d 0 0 t";
  Pipeline p(build_graph(parse_script(script), reg()));
  p.start();
  RunResult r = p.run({rec(0, 0, oracle::Buf(10, 0)), rec(1, 0, oracle::Buf(40, 0))});
  ASSERT_EQ(r.faults.size(), 1u);
  EXPECT_EQ(r.faults[0].instance, "d");
  EXPECT_EQ(r.faults[0].code, ErrorCode::Underflow);
  EXPECT_EQ(r.faults[0].packet_ordinal, 0u);
  EXPECT_EQ(r.outputs.size(), 1u);
}

namespace {
std::vector<TraceRecord> random_trace(std::uint64_t seed, int n) {
  std::mt19937_64 rng(seed);
  std::vector<TraceRecord> t;
  for (int i = 0; i < n; ++i) {
    oracle::FrameSpec s;
    s.proto = rng() % 3 ? 6 : 17;
    s.flags = rng() % 4 ? 0x10 : 0x02;
    s.dport = static_cast<std::uint16_t>(rng() % 2 ? 80 : 21);
    s.ethertype = rng() % 10 ? 0x0800 : 0x0806;
    s.ttl = static_cast<std::uint8_t>(rng() % 4);
    s.payload = oracle::Buf(rng() % 40, static_cast<std::uint8_t>(rng()));
    t.push_back(rec(static_cast<std::uint64_t>(i / 3), rng() % 2, oracle::build_frame(s)));
  }
  return t;
}

const char* kMixed =
    "@ FromDevice(0) a\n@ FromDevice(1) b\n@ TCPSyncNotifier syn\n@ DecTTL ttl\n@ ExactMatch(PROTO_IP,-) m\n"
    "@ WRRSched(2,1) w\n@ ToDevice(5, 1) out\n"
    "a 0 0 syn; syn 0 0 m; m 0 0 ttl; m 1 0 discard; ttl 0 0 w; b 0 1 w; w 0 0 out";
}  // namespace

TEST(Pipeline, ConservationAndDeterminism) {
  const auto trace = random_trace(33, 600);
  RunResult first, second;
  for (RunResult* out : {&first, &second}) {
    Pipeline p(build_graph(parse_script(kMixed), reg()));
    p.start();
    *out = p.run(trace, 200);
  }
  const auto& s = first.stats;
  EXPECT_EQ(s.injected, 600u);
  EXPECT_EQ(s.injected, s.emitted + s.discarded + s.dropped + s.faulted + first.retained);
  EXPECT_GT(first.retained, 0u);
  EXPECT_EQ(first.output_trace(), second.output_trace());
  EXPECT_EQ(first.events, second.events);
  EXPECT_EQ(first.counters_json(), second.counters_json());
}

TEST(Pipeline, EventsFollowTopologicalOrder) {
  // A SYN with TTL 1 raises tcp_syn upstream of ttl_expired in the same tick.
  Pipeline p(build_graph(parse_script(kMixed), reg()));
  p.start();
  RunResult r = p.run({rec(0, 0, oracle::build_frame({.flags = 0x02, .ttl = 1}))});
  ASSERT_EQ(r.events.size(), 2u);
  EXPECT_EQ(r.events[0].event.name, "tcp_syn");
  EXPECT_EQ(r.events[1].event.name, "ttl_expired");
  EXPECT_LT(r.events[0].topo_index, r.events[1].topo_index);
}

TEST(Pipeline, SharedEventSinkKeepsPerPipelineOrder) {
  EventSink sink;
  std::vector<std::thread> workers;
  for (int k = 0; k < 4; ++k) {
    workers.emplace_back([&sink, k] {
      Pipeline p(build_graph(parse_script(kMixed), reg()), "p" + std::to_string(k));
      p.set_event_sink(&sink);
      p.start();
      p.run(random_trace(100 + k, 300), 120);
    });
  }
  for (auto& w : workers) w.join();
  std::map<std::string, std::vector<LoggedEvent>> per;
  for (const auto& [name, ev] : sink.snapshot()) per[name].push_back(ev);
  ASSERT_EQ(per.size(), 4u);
  for (int k = 0; k < 4; ++k) {
    Pipeline p(build_graph(parse_script(kMixed), reg()));
    p.start();
    EXPECT_EQ(per["p" + std::to_string(k)], p.run(random_trace(100 + k, 300), 120).events);
  }
}
