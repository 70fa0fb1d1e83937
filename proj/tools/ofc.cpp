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

// ofc: command-line front end. Every command prints one JSON document on
// stdout. Exit codes: 0 ok, 1 parse/validation failure, 2 infeasible or
// runtime failure, 3 I/O failure.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "sdm/controller.hpp"
#include "sdm/error.hpp"
#include "sdm/graph.hpp"
#include "sdm/pipeline.hpp"
#include "sdm/pseudo.hpp"
#include "sdm/registry.hpp"
#include "sdm/scheduler.hpp"
#include "sdm/script.hpp"
#include "sdm/trace.hpp"

#ifndef OFC_VERSION
#define OFC_VERSION "0.0.0"
#endif

namespace {

using nlohmann::json;
using namespace sdm;

enum Exit : int { kOk = 0, kInvalid = 1, kSemantic = 2, kIo = 3 };

// Failure carrying its exit code and the stage it happened in.
struct Failure {
  int exit;
  Error error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Failure{kIo, Error(ErrorCode::IoError, "cannot read " + path)};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << text)) throw Failure{kIo, Error(ErrorCode::IoError, "cannot write " + path)};
}

json read_json(const std::string& path) {
  const std::string text = read_file(path);
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw Failure{kInvalid, Error(ErrorCode::SyntaxError, path + ": " + e.what())};
  }
}

// Runs f, mapping library errors to the given exit code (I/O errors to 3).
template <typename F>
auto stage(int exit, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    throw Failure{e.code() == ErrorCode::IoError ? kIo : exit, e};
  }
}

json error_json(const Error& e) {
  json j{{"code", std::string(to_string(e.code()))}, {"message", e.detail()}};
  if (e.line() > 0) {
    j["line"] = e.line();
    j["column"] = e.column();
  }
  return j;
}

void print(const json& j) { std::cout << j.dump(2) << "\n"; }

Bindings parse_bindings(const std::vector<std::string>& binds, const std::string& file) {
  Bindings b;
  if (!file.empty()) {
    json j = read_json(file);
    if (!j.is_object()) throw Failure{kInvalid, Error(ErrorCode::InvalidArgument, "bindings file must be an object")};
    for (auto it = j.begin(); it != j.end(); ++it)
      b[it.key()] = it.value().is_string() ? it.value().get<std::string>() : it.value().dump();
  }
  for (const auto& s : binds) {
    auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0)
      throw Failure{kInvalid, Error(ErrorCode::InvalidArgument, "binding must be NAME=VALUE: " + s)};
    b[s.substr(0, eq)] = s.substr(eq + 1);
  }
  return b;
}

CheckedProgram load_program(const std::string& path, std::string name = "") {
  const std::string text = read_file(path);
  if (name.empty()) name = std::filesystem::path(path).stem().string();
  return stage(kInvalid, [&] { return typecheck(parse_program(text, name)); });
}

// "--program path" or "--program Name=path": user classes for scripts.
void register_programs(Registry& reg, const std::vector<std::string>& specs) {
  for (const auto& s : specs) {
    auto eq = s.find('=');
    std::string name, path = s;
    if (eq != std::string::npos) {
      name = s.substr(0, eq);
      path = s.substr(eq + 1);
    }
    CheckedProgram cp = load_program(path, name);
    stage(kInvalid, [&] { return &register_user_action(cp, reg); });
  }
}

Bytes read_hex_file(const std::string& path) {
  std::string text = read_file(path), hex;
  for (char c : text)
    if (!std::isspace(static_cast<unsigned char>(c))) hex.push_back(c);
  return stage(kInvalid, [&] { return from_hex(hex); });
}

json events_json(const std::vector<Event>& events) {
  json a = json::array();
  for (const auto& e : events) a.push_back({{"source", e.source}, {"name", e.name}, {"payload", to_hex(e.payload)}});
  return a;
}

// ---- commands ----

struct CheckArgs {
  std::string file;
  std::vector<std::string> binds, programs;
  std::string bindings_file;
};

int cmd_check(const CheckArgs& a) {
  const std::string ext = std::filesystem::path(a.file).extension().string();
  if (ext == ".ofp") {
    try {
      CheckedProgram cp = load_program(a.file);
      json attrs = json::array();
      for (const auto& s : cp.attributes) attrs.push_back(s.name);
      print({{"ok", true},
             {"kind", "program"},
             {"name", cp.program.name},
             {"declarations", cp.program.decls.size()},
             {"locals", cp.program.locals.size()},
             {"attributes", attrs},
             {"events", cp.events},
             {"warnings", cp.warnings}});
      return kOk;
    } catch (const Failure& f) {
      if (f.exit == kIo) throw;
      print({{"ok", false}, {"kind", "program"}, {"error", error_json(f.error)}});
      return f.exit;
    }
  }
  Registry reg = builtin_registry();
  const Bindings bindings = parse_bindings(a.binds, a.bindings_file);
  register_programs(reg, a.programs);
  const std::string text = read_file(a.file);
  try {
    ScriptAst ast = stage(kInvalid, [&] { return parse_script(text); });
    ActionGraph g = stage(kInvalid, [&] { return build_graph(ast, reg, &bindings); });
    ValidationReport rep = validate_graph(g);
    json j = rep.to_json();
    j["kind"] = "script";
    j["declarations"] = ast.declarations.size();
    j["connections"] = ast.connections.size();
    print(j);
    return rep.ok ? kOk : kInvalid;
  } catch (const Failure& f) {
    if (f.exit == kIo) throw;
    print({{"ok", false}, {"kind", "script"}, {"error", error_json(f.error)}});
    return f.exit;
  }
}

struct RunPipelineArgs {
  CheckArgs base;
  std::string trace, out, events;
  std::optional<std::uint64_t> ticks;
};

int cmd_run_pipeline(const RunPipelineArgs& a) {
  Registry reg = builtin_registry();
  const Bindings bindings = parse_bindings(a.base.binds, a.base.bindings_file);
  register_programs(reg, a.base.programs);
  const std::string text = read_file(a.base.file);
  std::vector<TraceRecord> trace;
  {
    std::istringstream in(read_file(a.trace));
    trace = stage(kInvalid, [&] { return read_trace(in); });
  }
  auto pipeline = stage(kInvalid, [&] {
    return std::make_unique<Pipeline>(build_graph(parse_script(text), reg, &bindings),
                                      std::filesystem::path(a.base.file).stem().string());
  });
  pipeline->start();
  RunResult r = stage(kSemantic, [&] { return pipeline->run(trace, a.ticks); });
  json outputs = json::array();
  for (const auto& o : r.outputs) outputs.push_back({{"tick", o.tick}, {"port", o.device}, {"hex", to_hex(o.packet.data())}});
  json events = json::array();
  for (const auto& e : r.events)
    events.push_back({{"tick", e.tick}, {"source", e.event.source}, {"name", e.event.name},
                      {"payload", to_hex(e.event.payload)}});
  json faults = json::array();
  for (const auto& f : r.faults) {
    json fj{{"tick", f.tick}, {"instance", f.instance}, {"code", std::string(to_string(f.code))}, {"message", f.message}};
    if (f.packet_ordinal) fj["packet"] = *f.packet_ordinal;
    faults.push_back(fj);
  }
  if (!a.out.empty()) {
    std::ostringstream os;
    write_trace(os, r.output_trace());
    write_file(a.out, os.str());
  }
  if (!a.events.empty()) {
    std::string lines;
    for (const auto& e : events) lines += e.dump() + "\n";
    write_file(a.events, lines);
  }
  print({{"ok", true},
         {"ticks", r.ticks},
         {"stats", r.stats.to_json()},
         {"retained", r.retained},
         {"counters", r.counters_json()},
         {"outputs", outputs},
         {"events", events},
         {"faults", faults}});
  return kOk;
}

struct RunActionArgs {
  std::string action, packet, out, attrs_file;
  std::vector<std::string> attrs, args, binds;
  std::string bindings_file;
  bool no_mark = false;
};

int cmd_run_action(RunActionArgs a) {
  if (!a.attrs_file.empty()) {
    json j = read_json(a.attrs_file);
    if (!j.is_object()) throw Failure{kInvalid, Error(ErrorCode::InvalidArgument, "attributes file must be an object")};
    std::vector<std::string> merged;
    for (auto it = j.begin(); it != j.end(); ++it)
      merged.push_back(it.key() + "=" + (it.value().is_string() ? it.value().get<std::string>() : it.value().dump()));
    merged.insert(merged.end(), a.attrs.begin(), a.attrs.end());
    a.attrs = std::move(merged);
  }
  Packet packet(read_hex_file(a.packet));
  if (!a.no_mark) mark_layers(packet);
  const bool program = std::filesystem::path(a.action).extension() == ".ofp";
  if (program) {
    CheckedProgram cp = load_program(a.action);
    AttrMap attrs;
    for (const auto& s : a.attrs) {
      auto eq = s.find('=');
      if (eq == std::string::npos) throw Failure{kInvalid, Error(ErrorCode::InvalidArgument, "attribute must be NAME=VALUE")};
      const std::string name = s.substr(0, eq);
      auto spec = std::find_if(cp.attributes.begin(), cp.attributes.end(), [&](const AttrSpec& x) { return x.name == name; });
      if (spec == cp.attributes.end()) throw Failure{kInvalid, Error(ErrorCode::UnknownAttribute, name)};
      attrs[name] = stage(kInvalid, [&] { return parse_attr_value(*spec, s.substr(eq + 1)); });
    }
    ExecResult r = stage(kSemantic, [&] { return interpret(cp, packet, attrs, cp.program.name); });
    json upd = json::object();
    for (const auto& [name, v] : r.attr_updates) {
      auto spec = std::find_if(cp.attributes.begin(), cp.attributes.end(), [&](const AttrSpec& x) { return x.name == name; });
      upd[name] = spec == cp.attributes.end() ? std::string() : format_attr_value(*spec, v);
    }
    if (!a.out.empty()) write_file(a.out, to_hex(packet.data()) + "\n");
    print({{"ok", true},
           {"packet", to_hex(packet.data())},
           {"attributes", upd},
           {"events", events_json(r.events)},
           {"loop_iterations", r.loop_iterations}});
    return kOk;
  }
  Registry reg = builtin_registry();
  const Bindings bindings = parse_bindings(a.binds, a.bindings_file);
  const ActionClass* cls = reg.find(a.action);
  if (!cls) throw Failure{kInvalid, Error(ErrorCode::UnknownClass, a.action)};
  auto action = stage(kInvalid, [&] { return cls->instantiate({a.action, a.args, &bindings}); });
  for (const auto& s : a.attrs) {
    auto eq = s.find('=');
    if (eq == std::string::npos) throw Failure{kInvalid, Error(ErrorCode::InvalidArgument, "attribute must be NAME=VALUE")};
    stage(kInvalid, [&] {
      action->set_attribute_text(s.substr(0, eq), s.substr(eq + 1));
      return 0;
    });
  }
  action->start();
  ActionContext ctx(a.action);
  std::optional<std::size_t> port = stage(kSemantic, [&] { return action->process(packet, ctx); });
  json j{{"ok", true}, {"events", events_json(ctx.events())}};
  if (port) {
    j["port"] = *port;
    j["packet"] = to_hex(packet.data());
    if (!a.out.empty()) write_file(a.out, to_hex(packet.data()) + "\n");
  } else {
    j["port"] = nullptr;
    j["held"] = ctx.held();
  }
  print(j);
  return kOk;
}

struct ScheduleArgs {
  std::string mode, problem, out, order = "arrival";
  double epsilon = 0.2;
  std::size_t batch = 0;
  std::optional<double> cap;
};

int cmd_schedule(const ScheduleArgs& a) {
  SchedulingProblem p = stage(kInvalid, [&] { return problem_from_json(read_json(a.problem)); });
  json report{{"mode", a.mode}};
  Assignment asg;
  try {
    if (a.mode == "offline") {
      OfflineOptions o;
      o.epsilon = a.epsilon;
      OfflineResult r = stage(kSemantic, [&] { return offline_round(p, o); });
      asg = r.assignment;
      report["epsilon"] = a.epsilon;
      report["lp_objective"] = r.lp_objective;
      report["iterations"] = r.iterations;
      report["rollbacks"] = r.rollbacks;
      report["thresholds"] = r.thresholds;
    } else if (a.mode == "online") {
      if (a.order != "arrival") throw Failure{kInvalid, Error(ErrorCode::InvalidArgument, "unsupported order " + a.order)};
      OnlineOptions o;
      o.offline.epsilon = a.epsilon;
      o.admission_cap = a.cap;
      asg = stage(kSemantic, [&] { return a.batch ? online_schedule_batch(p, a.batch, o) : online_schedule(p, o); });
      report["epsilon"] = a.epsilon;
      report["order"] = a.order;
      report["batch"] = a.batch;
    } else {
      asg = stage(kSemantic, [&] { return brute_force_optimal(p); });
    }
  } catch (const Failure& f) {
    if (f.exit == kIo) throw;
    report["ok"] = false;
    report["error"] = error_json(f.error);
    print(report);
    return f.exit;
  }
  const json aj = asg.to_json(p);
  if (!a.out.empty()) write_file(a.out, aj.dump(2) + "\n");
  bool all = true;
  for (bool b : asg.admitted) all = all && b;
  report["ok"] = all;
  report["objective"] = asg.objective;
  report["assignment"] = aj;
  print(report);
  return all ? kOk : kSemantic;
}

struct SimulateArgs {
  std::string scenario, out;
  std::optional<std::uint64_t> ticks_per_event;
};

int cmd_simulate(const SimulateArgs& a) {
  Scenario s = stage(kInvalid, [&] { return scenario_from_json(read_json(a.scenario)); });
  if (a.ticks_per_event) s.policy.ticks_per_event = *a.ticks_per_event;
  Metrics m = stage(kSemantic, [&] { return run_scenario(s); });
  const json mj = m.to_json(s.topology);
  if (!a.out.empty()) {
    write_file(a.out, mj.dump(2) + "\n");
    print({{"ok", true},
           {"out", a.out},
           {"ticks", m.ticks},
           {"max_utilization", m.max_utilization},
           {"reconfigurations", m.reconfigurations},
           {"coherent", m.coherent},
           {"infeasible", m.infeasible}});
  } else {
    print(mj);
  }
  return kOk;
}

struct GenerateArgs {
  GeneratorConfig cfg;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ofc: software-defined middlebox toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  std::uint64_t seed = 0;
  app.add_option("--seed", seed, "seed for randomized defaults")->envname("OFC_SEED");
  app.set_version_flag("--version", std::string("ofc " OFC_VERSION " (C++") + std::to_string(__cplusplus / 100 % 100) +
                                        ", nlohmann_json " + std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                        std::to_string(NLOHMANN_JSON_VERSION_MINOR) + ")");

  CheckArgs check;
  auto* c_check = app.add_subcommand("check", "parse and validate a script (.ofs) or program (.ofp)");
  c_check->add_option("file", check.file)->required();
  c_check->add_option("--bind", check.binds, "NAME=VALUE script binding");
  c_check->add_option("--bindings", check.bindings_file, "JSON object of bindings");
  c_check->add_option("--program", check.programs, "user action program ([Name=]path.ofp)");

  RunPipelineArgs rp;
  auto* c_rp = app.add_subcommand("run-pipeline", "run a script over a packet trace");
  c_rp->add_option("script", rp.base.file)->required();
  c_rp->add_option("--trace", rp.trace)->required();
  c_rp->add_option("--ticks", rp.ticks);
  c_rp->add_option("--out", rp.out, "write emitted packets as a trace");
  c_rp->add_option("--events", rp.events, "write the event log as JSON lines");
  c_rp->add_option("--bind", rp.base.binds);
  c_rp->add_option("--bindings", rp.base.bindings_file);
  c_rp->add_option("--program", rp.base.programs);

  RunActionArgs ra;
  auto* c_ra = app.add_subcommand("run-action", "run one action (built-in class or .ofp program) on a packet");
  c_ra->add_option("action", ra.action)->required();
  c_ra->add_option("--packet", ra.packet, "file with the packet as hex")->required();
  c_ra->add_option("--attr", ra.attrs, "NAME=VALUE attribute");
  c_ra->add_option("--attrs", ra.attrs_file, "JSON object of attributes");
  c_ra->add_option("--out", ra.out, "write the resulting packet as hex");
  c_ra->add_option("--arg", ra.args, "script argument for a built-in class");
  c_ra->add_option("--bind", ra.binds);
  c_ra->add_option("--bindings", ra.bindings_file);
  c_ra->add_flag("--no-mark", ra.no_mark, "do not mark layers before running");

  ScheduleArgs sa;
  auto* c_s = app.add_subcommand("schedule", "service-chain scheduling");
  c_s->add_option("mode", sa.mode)->required()->check(CLI::IsMember({"offline", "online", "oracle"}));
  c_s->add_option("--problem", sa.problem)->required();
  c_s->add_option("--epsilon", sa.epsilon, "forbidden threshold")->check(CLI::Range(0.0, 1.0));
  c_s->add_option("--out", sa.out);
  c_s->add_option("--order", sa.order);
  c_s->add_option("--batch", sa.batch, "online batch size (0: per flow)");
  c_s->add_option("--cap", sa.cap, "online admission cap");

  SimulateArgs si;
  auto* c_si = app.add_subcommand("simulate", "run a controller scenario");
  c_si->add_option("--scenario", si.scenario)->required();
  c_si->add_option("--out", si.out);
  c_si->add_option("--ticks-per-event", si.ticks_per_event);

  auto* c_cat = app.add_subcommand("catalog", "dump the action registry");

  GenerateArgs ga;
  auto* c_gen = app.add_subcommand("generate", "random scheduling problem");
  c_gen->add_option("--flows", ga.cfg.flows);
  c_gen->add_option("--boxes", ga.cfg.boxes);
  c_gen->add_option("--sdms", ga.cfg.sdms);
  c_gen->add_option("--resources", ga.cfg.resources);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    std::cout << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::CallForVersion&) {
    std::cout << app.version() << "\n";
    return kOk;
  } catch (const CLI::ParseError& e) {
    std::cerr << "ofc: " << e.what() << "\n" << app.help();
    return kInvalid;
  }

  try {
    if (c_check->parsed()) return cmd_check(check);
    if (c_rp->parsed()) return cmd_run_pipeline(rp);
    if (c_ra->parsed()) return cmd_run_action(ra);
    if (c_s->parsed()) return cmd_schedule(sa);
    if (c_si->parsed()) return cmd_simulate(si);
    if (c_cat->parsed()) {
      print(builtin_registry().to_json());
      return kOk;
    }
    if (c_gen->parsed()) {
      print(problem_to_json(stage(kInvalid, [&] { return generate_problem(ga.cfg, seed); })));
      return kOk;
    }
  } catch (const Failure& f) {
    print({{"ok", false}, {"error", error_json(f.error)}});
    std::cerr << "ofc: " << f.error.what() << "\n";
    return f.exit;
  } catch (const Error& e) {
    print({{"ok", false}, {"error", error_json(e)}});
    std::cerr << "ofc: " << e.what() << "\n";
    return e.code() == ErrorCode::IoError ? kIo : kSemantic;
  }
  return kInvalid;
}
