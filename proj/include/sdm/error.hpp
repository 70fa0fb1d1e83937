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

#ifndef SDM_ERROR_HPP
#define SDM_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace sdm {

enum class ErrorCode {
  // packet model
  UnmarkedRegion,
  OutOfBounds,
  InsufficientHeadroom,
  InsufficientTailroom,
  Underflow,
  TypeMismatch,
  PropertyWriteForbidden,
  UnknownName,
  // actions
  DefaultRouteMissing,
  AttributeUnset,
  UnknownAttribute,
  NotRuntimeSettable,
  InvalidArgument,
  // scripts and programs
  SyntaxError,
  DuplicateInstance,
  UnknownClass,
  ArityMismatch,
  UnknownInstance,
  IllegalPacketObjectUse,
  UndeclaredName,
  WidthMismatch,
  LoopBudgetExceeded,
  CategoryUnsupported,
  RuntimeFault,
  // chain runtime
  CapacityInvalid,
  UnknownDp,
  RingFull,
  StillReferenced,
  // scheduling
  InvalidProblem,
  Infeasible,
  Unbounded,
  NonConvergence,
  TooLarge,
  // controller / io
  InfeasibleFlow,
  BoxFailed,
  IoError,
};

std::string_view to_string(ErrorCode code) noexcept;

// All library failures are reported as sdm::Error. Parsers attach a
// 1-based line/column; zero means "not applicable".
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, int line = 0, int column = 0)
      : std::runtime_error(format(code, message, line, column)),
        code_(code),
        detail_(message),
        line_(line),
        column_(column) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }
  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

 private:
  static std::string format(ErrorCode code, const std::string& message, int line,
                            int column) {
    std::string out(to_string(code));
    if (line > 0) {
      out += " at " + std::to_string(line) + ":" + std::to_string(column);
    }
    if (!message.empty()) out += ": " + message;
    return out;
  }

  ErrorCode code_;
  std::string detail_;
  int line_;
  int column_;
};

}  // namespace sdm

#endif  // SDM_ERROR_HPP
