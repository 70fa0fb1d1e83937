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

#ifndef SDM_TRACE_HPP
#define SDM_TRACE_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "sdm/bytes.hpp"

namespace sdm {

// One line of a packet trace: {"ts": int, "port": int, "hex": "..."}.
struct TraceRecord {
  std::uint64_t ts = 0;
  std::uint64_t port = 0;
  Bytes bytes;
  bool operator==(const TraceRecord&) const = default;
};

TraceRecord parse_trace_line(const std::string& line);
std::string format_trace_line(const TraceRecord& record);

// Blank lines are skipped. Parse errors carry the 1-based line number.
std::vector<TraceRecord> read_trace(std::istream& in);
void write_trace(std::ostream& out, const std::vector<TraceRecord>& records);

}  // namespace sdm

#endif  // SDM_TRACE_HPP
