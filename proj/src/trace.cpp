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

#include "sdm/trace.hpp"

#include <istream>
#include <ostream>

#include <nlohmann/json.hpp>

#include "sdm/error.hpp"

namespace sdm {

using nlohmann::json;

TraceRecord parse_trace_line(const std::string& line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::SyntaxError, e.what());
  }
  if (!j.is_object() || !j.contains("ts") || !j.contains("port") || !j.contains("hex") ||
      !j["ts"].is_number_integer() || !j["port"].is_number_integer() || !j["hex"].is_string()) {
    throw Error(ErrorCode::SyntaxError, "trace record needs integer ts/port and string hex");
  }
  if (j["ts"].get<std::int64_t>() < 0 || j["port"].get<std::int64_t>() < 0) {
    throw Error(ErrorCode::SyntaxError, "trace ts/port must be nonnegative");
  }
  TraceRecord rec;
  rec.ts = j["ts"].get<std::uint64_t>();
  rec.port = j["port"].get<std::uint64_t>();
  try {
    rec.bytes = from_hex(j["hex"].get<std::string>());
  } catch (const Error& e) {
    throw Error(ErrorCode::SyntaxError, e.detail());
  }
  return rec;
}

std::string format_trace_line(const TraceRecord& record) {
  json j = {{"ts", record.ts}, {"port", record.port}, {"hex", to_hex(record.bytes)}};
  return j.dump();
}

std::vector<TraceRecord> read_trace(std::istream& in) {
  std::vector<TraceRecord> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(parse_trace_line(line));
    } catch (const Error& e) {
      throw Error(e.code(), e.detail(), lineno, 1);
    }
  }
  return out;
}

void write_trace(std::ostream& out, const std::vector<TraceRecord>& records) {
  for (const auto& r : records) out << format_trace_line(r) << '\n';
}

}  // namespace sdm
