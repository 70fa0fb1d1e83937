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
#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "oracles.hpp"
#include "util.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Result {
  int exit = -1;
  std::string out;
  json doc() const { return json::parse(out); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = fs::temp_directory_path() / ("ofc_cli_" + std::to_string(::getpid()));
    fs::create_directories(dir_);
  }
  static void TearDownTestSuite() { fs::remove_all(dir_); }

  static fs::path file(const std::string& name, const std::string& body) {
    fs::path p = dir_ / name;
    std::ofstream(p, std::ios::binary) << body;
    return p;
  }
  static fs::path tmp(const std::string& name) { return dir_ / name; }

  static Result ofc(const std::string& args) {
    const std::string cmd = std::string(OFC_BINARY) + " " + args + " 2>/dev/null";
    Result r;
    FILE* p = ::popen(cmd.c_str(), "r");
    if (!p) return r;
    char buf[4096];
    std::size_t n;
    while ((n = std::fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
    const int status = ::pclose(p);
    r.exit = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
  }

  static std::string data(const std::string& name) { return testutil::data_path(name); }

  static std::string bindings() {
    return "--bind IP_SRC=192.168.1.1 --bind IP_DST=10.9.9.9 --bind MAC_DEST=02:00:00:00:00:99 "
           "--bind MAC_SRC=02:00:00:00:00:01";
  }

  static fs::path tcp_trace(std::size_t packets) {
    std::mt19937_64 rng(17);
    std::ostringstream t;
    for (std::size_t i = 0; i < packets; ++i) {
      oracle::FrameSpec s{.src = static_cast<std::uint32_t>(0x0a000000 + rng() % 256),
                          .dst = 0x0a000002,
                          .sport = static_cast<std::uint16_t>(1000 + rng() % 100),
                          .dport = 80,
                          .payload = oracle::bytes_of("x" + std::to_string(i))};
      t << json{{"ts", i / 4}, {"port", 0}, {"hex", sdm::to_hex(oracle::build_frame(s))}}.dump() << "\n";
    }
    return file("trace.jsonl", t.str());
  }

  static inline fs::path dir_;
};

}  // namespace

TEST_F(Cli, Version) {
  Result r = ofc("--version");
  EXPECT_EQ(r.exit, 0);
  EXPECT_NE(r.out.find("ofc 0.1.0"), std::string::npos);
}

TEST_F(Cli, CheckGoldenScript) {
  for (const std::string& extra : {std::string(), bindings()}) {
    Result r = ofc("check " + data("ipsec.ofs") + " " + extra);
    ASSERT_EQ(r.exit, 0) << r.out;
    json d = r.doc();
    EXPECT_EQ(d["nodes"], 12);
    EXPECT_EQ(d["edges"], 11);
    EXPECT_TRUE(d["ok"].get<bool>());
  }
}

TEST_F(Cli, CheckDiagnostics) {
  Result syntax = ofc("check " + file("s.ofs", "@ FromDevice(0) in\n@ ToDevice(1 out\n").string());
  EXPECT_EQ(syntax.exit, 1);
  EXPECT_EQ(syntax.doc()["error"]["code"], "SyntaxError");
  EXPECT_EQ(syntax.doc()["error"]["line"], 2);
  Result unknown = ofc("check " + file("u.ofs", "@ Nope x\n").string());
  EXPECT_EQ(unknown.exit, 1);
  EXPECT_EQ(unknown.doc()["error"]["code"], "UnknownClass");
  Result program = ofc("check " + data("setipchecksum.ofp"));
  EXPECT_EQ(program.exit, 0);
  EXPECT_EQ(program.doc()["kind"], "program");
  Result illegal = ofc("check " + file("bad.ofp", "ACTION Bad\nBEGIN\n  PACKET p\nEND\n").string());
  EXPECT_EQ(illegal.exit, 1) << illegal.out;
}

TEST_F(Cli, IoAndUsageErrors) {
  EXPECT_EQ(ofc("check " + tmp("missing.ofs").string()).exit, 3);
  EXPECT_EQ(ofc("schedule offline --problem " + tmp("missing.json").string()).exit, 3);
  EXPECT_EQ(ofc("check " + data("ipsec.ofs") + " --no-such-flag").exit, 1);
  EXPECT_EQ(ofc("frobnicate").exit, 1);
  EXPECT_EQ(ofc("schedule sideways --problem x.json").exit, 1);
  EXPECT_EQ(ofc("schedule offline --problem x.json --epsilon 1.5").exit, 1);
  EXPECT_EQ(ofc("schedule offline --problem " + file("junk.json", "{not json").string()).exit, 1);
}

TEST_F(Cli, ScheduleRecordsEpsilon) {
  fs::path p = tmp("p.json");
  ASSERT_EQ(ofc("generate --flows 6 --seed 4 > " + p.string()).exit, 0);
  Result off = ofc("schedule offline --problem " + p.string());
  ASSERT_EQ(off.exit, 0) << off.out;
  EXPECT_DOUBLE_EQ(off.doc()["epsilon"].get<double>(), 0.2);
  Result off5 = ofc("schedule offline --epsilon 0.5 --problem " + p.string());
  EXPECT_DOUBLE_EQ(off5.doc()["epsilon"].get<double>(), 0.5);
  Result on = ofc("schedule online --problem " + p.string());
  EXPECT_EQ(on.exit, 0);
  EXPECT_GE(on.doc()["assignment"]["objective"].get<double>() + 1e-9,
            off.doc()["lp_objective"].get<double>());
}

TEST_F(Cli, ScheduleSemanticFailures) {
  fs::path big = tmp("big.json");
  ASSERT_EQ(ofc("generate --flows 14 --seed 2 > " + big.string()).exit, 0);
  EXPECT_EQ(ofc("schedule oracle --problem " + big.string()).exit, 2);
  EXPECT_EQ(ofc("schedule online --cap 0.01 --problem " + big.string()).exit, 2);
}

TEST_F(Cli, RunActionTruncatedHeader) {
  // IHL claims 60 bytes; only 20 are present.
  fs::path bad = file("bad.hex", "ffffffffffff0200000000010800" "4f000028000040004006" "0000" "0a000001" "0a000002\n");
  Result r = ofc("run-action " + data("setipchecksum.ofp") + " --packet " + bad.string());
  EXPECT_EQ(r.exit, 2);
  EXPECT_EQ(r.doc()["error"]["code"], "OutOfBounds");
}

TEST_F(Cli, RunActionMatchesOracle) {
  oracle::FrameSpec s{.src = 0x0a000001, .dst = 0x0a000002, .sport = 1, .dport = 2};
  sdm::Bytes frame = oracle::build_frame(s);
  frame[24] = frame[25] = 0;  // clear IP checksum
  fs::path in = file("in.hex", sdm::to_hex(frame) + "\n");
  for (const std::string& action : {data("setipchecksum.ofp"), std::string("SetIPChecksum")}) {
    fs::path out = tmp("out.hex");
    Result r = ofc("run-action " + action + " --packet " + in.string() + " --out " + out.string());
    ASSERT_EQ(r.exit, 0) << r.out;
    std::string hex = slurp(out);
    while (!hex.empty() && std::isspace(static_cast<unsigned char>(hex.back()))) hex.pop_back();
    EXPECT_TRUE(oracle::ipv4_checksum_ok(sdm::from_hex(hex))) << action;
  }
}

TEST_F(Cli, ByteIdenticalReplay) {
  fs::path trace = tcp_trace(200);
  fs::path problem = tmp("rp.json");
  ASSERT_EQ(ofc("generate --flows 10 --seed 9 > " + problem.string()).exit, 0);
  fs::path scenario = file("sc.json", R"({"resources":["cpu"],
    "boxes":[{"id":"b1","capacity":{"cpu":10}},{"id":"b2","capacity":{"cpu":10}}],
    "sdms":[{"id":"fw","impls":[{"id":"fw.a","demand":{"cpu":1}}]}],
    "events":[{"time":0,"type":"arrival","flow":{"id":"f1","amount":1,"chain":["fw"]},"traffic":{"packets":50}},
              {"time":1,"type":"arrival","flow":{"id":"f2","amount":1,"chain":["fw"]},"traffic":{"packets":50}},
              {"time":2,"type":"failure","box":"b1"}]})");
  oracle::FrameSpec s{.src = 0x0a000001, .dst = 0x0a000002, .sport = 1, .dport = 2};
  fs::path pkt = file("pkt.hex", sdm::to_hex(oracle::build_frame(s)) + "\n");
  fs::path fwd = file("fwd.ofs", "@ FromDevice(0) in\n@ SetIPChecksum c\n@ ToDevice(1) out\nin 0 0 c\nc 0 0 out\n");

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"catalog", ""},
      {"check " + data("ipsec.ofs") + " " + bindings(), ""},
      {"check " + data("settcpchecksum.ofp"), ""},
      {"generate --flows 20 --seed 11", ""},
      {"schedule offline --problem " + problem.string(), "--out"},
      {"schedule online --problem " + problem.string(), "--out"},
      {"schedule online --batch 4 --problem " + problem.string(), "--out"},
      {"schedule oracle --problem " + file("small.json", "").string(), ""},
      {"simulate --scenario " + scenario.string(), "--out"},
      {"run-action " + data("setipchecksum.ofp") + " --packet " + pkt.string(), "--out"},
      {"run-pipeline " + fwd.string() + " --trace " + trace.string(), "--out"},
      {"run-pipeline " + data("ipsec.ofs") + " " + bindings() + " --trace " + trace.string(), "--out"},
  };
  ASSERT_EQ(ofc("generate --flows 2 --boxes 2 --sdms 2 --seed 1 > " + tmp("small.json").string()).exit, 0);
  for (const auto& [cmd, out_flag] : commands) {
    std::string first_file, second_file;
    Result a, b;
    if (out_flag.empty()) {
      a = ofc(cmd);
      b = ofc(cmd);
    } else {
      a = ofc(cmd + " " + out_flag + " " + tmp("r1").string());
      first_file = slurp(tmp("r1"));
      fs::remove(tmp("r1"));
      b = ofc(cmd + " " + out_flag + " " + tmp("r1").string());
      second_file = slurp(tmp("r1"));
    }
    EXPECT_EQ(a.exit, b.exit) << cmd;
    EXPECT_EQ(a.out, b.out) << cmd;
    EXPECT_EQ(first_file, second_file) << cmd;
    EXPECT_NO_THROW((void)json::parse(a.out)) << cmd;
  }
}

TEST_F(Cli, SeedFromEnvironment) {
  Result flag = ofc("generate --flows 5 --seed 77");
  const std::string cmd = "OFC_SEED=77 " + std::string(OFC_BINARY) + " generate --flows 5 2>/dev/null";
  FILE* p = ::popen(cmd.c_str(), "r");
  std::string out;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, p)) > 0) out.append(buf, n);
  ::pclose(p);
  EXPECT_EQ(flag.out, out);
  EXPECT_EQ(ofc("--seed 77 generate --flows 5").out, flag.out);
}
