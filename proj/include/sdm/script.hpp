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

#ifndef SDM_SCRIPT_HPP
#define SDM_SCRIPT_HPP

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace sdm {

// "@ Class(arg, ...) name"
struct Declaration {
  std::string class_name;
  std::vector<std::string> args;
  std::string instance;
  int line = 0;
  int column = 0;

  bool operator==(const Declaration& o) const {
    return class_name == o.class_name && args == o.args && instance == o.instance;
  }
};

// "src src_port dst_port dst"
struct Connection {
  std::string src;
  std::size_t src_port = 0;
  std::size_t dst_port = 0;
  std::string dst;
  int line = 0;
  int column = 0;

  bool operator==(const Connection& o) const {
    return src == o.src && src_port == o.src_port && dst_port == o.dst_port && dst == o.dst;
  }
};

struct ScriptAst {
  std::vector<Declaration> declarations;
  std::vector<Connection> connections;
  bool operator==(const ScriptAst&) const = default;
};

// Statements end at ';' or end of line; '#' starts a comment. Throws
// SyntaxError / DuplicateInstance with line and column.
ScriptAst parse_script(std::string_view text);

// Canonical text form; parse_script(print_script(a)) == a.
std::string print_script(const ScriptAst& ast);

}  // namespace sdm

#endif  // SDM_SCRIPT_HPP
