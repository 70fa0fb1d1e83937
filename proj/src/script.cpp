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

#include "sdm/script.hpp"

#include <cctype>
#include <charconv>
#include <set>

#include "sdm/error.hpp"

namespace sdm {

namespace {

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

class StatementParser {
 public:
  StatementParser(std::string_view text, int line, int column)
      : s_(text), line_(line), col0_(column) {}

  [[noreturn]] void fail(const std::string& msg) const {
    throw Error(ErrorCode::SyntaxError, msg, line_, col0_ + static_cast<int>(pos_));
  }

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool at_end() {
    skip_ws();
    return pos_ >= s_.size();
  }
  int column() const { return col0_ + static_cast<int>(pos_); }

  std::string ident(const char* what) {
    skip_ws();
    if (pos_ >= s_.size() || !ident_start(s_[pos_])) fail(std::string("expected ") + what);
    const std::size_t b = pos_;
    while (pos_ < s_.size() && ident_char(s_[pos_])) ++pos_;
    return std::string(s_.substr(b, pos_ - b));
  }

  std::size_t number(const char* what) {
    skip_ws();
    const std::size_t b = pos_;
    while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    if (b == pos_) fail(std::string("expected ") + what);
    std::size_t v = 0;
    auto [p, ec] = std::from_chars(s_.data() + b, s_.data() + pos_, v);
    if (ec != std::errc()) fail("port number out of range");
    if (pos_ < s_.size() && !std::isspace(static_cast<unsigned char>(s_[pos_]))) {
      fail(std::string("expected ") + what);
    }
    return v;
  }

  std::vector<std::string> args() {
    // at '('
    ++pos_;
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    int depth = 0;
    auto finish = [&](bool last) {
      std::size_t b = cur.find_first_not_of(" \t");
      std::size_t e = cur.find_last_not_of(" \t");
      std::string a = b == std::string::npos ? "" : cur.substr(b, e - b + 1);
      if (a.empty()) {
        if (last && out.empty()) return;
        fail("empty argument");
      }
      out.push_back(std::move(a));
      cur.clear();
    };
    while (pos_ < s_.size()) {
      const char c = s_[pos_++];
      if (quoted) {
        cur += c;
        if (c == '\\' && pos_ < s_.size()) cur += s_[pos_++];
        else if (c == '"') quoted = false;
        continue;
      }
      if (c == '"') {
        quoted = true;
        cur += c;
      } else if (c == '(') {
        ++depth;
        cur += c;
      } else if (c == ')') {
        if (depth == 0) {
          finish(true);
          return out;
        }
        --depth;
        cur += c;
      } else if (c == ',' && depth == 0) {
        finish(false);
      } else {
        cur += c;
      }
    }
    fail("unterminated argument list");
  }

  char peek() {
    skip_ws();
    return pos_ < s_.size() ? s_[pos_] : '\0';
  }

 private:
  std::string_view s_;
  int line_;
  int col0_;
  std::size_t pos_ = 0;
};

}  // namespace

ScriptAst parse_script(std::string_view text) {
  ScriptAst ast;
  std::set<std::string, std::less<>> names;
  int line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(start, nl - start);
    ++line_no;
    // split on ';' and '#' outside quotes and parentheses
    std::size_t stmt_begin = 0;
    bool quoted = false;
    int depth = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
      const bool end = i == line.size();
      const char c = end ? '\0' : line[i];
      if (!end && quoted) {
        if (c == '\\') ++i;
        else if (c == '"') quoted = false;
        continue;
      }
      if (c == '"') {
        quoted = true;
        continue;
      }
      if (c == '(') ++depth;
      if (c == ')' && depth > 0) --depth;
      if (!end && c != '#' && !(c == ';' && depth == 0)) continue;
      if (c == '#' && depth > 0) continue;
      std::string_view stmt = line.substr(stmt_begin, i - stmt_begin);
      StatementParser p(stmt, line_no, static_cast<int>(stmt_begin) + 1);
      if (!p.at_end()) {
        if (p.peek() == '@') {
          Declaration d;
          p.skip_ws();
          d.line = line_no;
          d.column = p.column();
          std::string_view rest = stmt.substr(stmt.find('@') + 1);
          StatementParser dp(rest, line_no, static_cast<int>(stmt_begin + stmt.find('@')) + 2);
          d.class_name = dp.ident("action class name");
          if (dp.peek() == '(') d.args = dp.args();
          d.instance = dp.ident("instance name");
          if (!dp.at_end()) dp.fail("unexpected text after instance name");
          if (!names.insert(d.instance).second) {
            throw Error(ErrorCode::DuplicateInstance, "instance '" + d.instance + "' declared twice",
                        d.line, d.column);
          }
          ast.declarations.push_back(std::move(d));
        } else {
          Connection c2;
          p.skip_ws();
          c2.line = line_no;
          c2.column = p.column();
          c2.src = p.ident("source instance");
          c2.src_port = p.number("source port");
          c2.dst_port = p.number("destination port");
          c2.dst = p.ident("destination instance");
          if (!p.at_end()) p.fail("unexpected text after connection");
          ast.connections.push_back(std::move(c2));
        }
      }
      if (c == '#' || end) break;
      stmt_begin = i + 1;
    }
    start = nl + 1;
  }
  return ast;
}

std::string print_script(const ScriptAst& ast) {
  std::string out;
  for (const auto& d : ast.declarations) {
    out += "@ " + d.class_name;
    if (!d.args.empty()) {
      out += "(";
      for (std::size_t i = 0; i < d.args.size(); ++i) {
        if (i) out += ", ";
        out += d.args[i];
      }
      out += ")";
    }
    out += " " + d.instance + "\n";
  }
  if (!ast.declarations.empty() && !ast.connections.empty()) out += "\n";
  for (const auto& c : ast.connections) {
    out += c.src + " " + std::to_string(c.src_port) + " " + std::to_string(c.dst_port) + " " + c.dst + "\n";
  }
  return out;
}

}  // namespace sdm
