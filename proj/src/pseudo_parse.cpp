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

#include <cctype>
#include <charconv>
#include <set>

#include "sdm/error.hpp"
#include "sdm/pseudo.hpp"

namespace sdm {

const DataDecl* PseudoProgram::find_decl(std::string_view n) const {
  for (const auto& d : decls) {
    if (d.name == n) return &d;
  }
  return nullptr;
}

namespace {

struct Token {
  enum class Type { Ident, Number, Punct, Newline, End } type = Type::End;
  std::string text;
  std::uint32_t value = 0;
  int line = 0;
  int column = 0;
};

std::vector<Token> lex(std::string_view s) {
  std::vector<Token> out;
  int line = 1;
  std::size_t line_start = 0;
  std::size_t i = 0;
  auto col = [&](std::size_t at) { return static_cast<int>(at - line_start) + 1; };
  while (i < s.size()) {
    const char c = s[i];
    if (c == '\n') {
      out.push_back({Token::Type::Newline, "\n", 0, line, col(i)});
      ++i;
      ++line;
      line_start = i;
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (c == '#' || (c == '/' && i + 1 < s.size() && s[i + 1] == '/')) {
      while (i < s.size() && s[i] != '\n') ++i;
      continue;
    }
    const std::size_t b = i;
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      while (i < s.size() && (std::isalnum(static_cast<unsigned char>(s[i])) || s[i] == '_')) ++i;
      out.push_back({Token::Type::Ident, std::string(s.substr(b, i - b)), 0, line, col(b)});
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      int base = 10;
      if (c == '0' && i + 1 < s.size() && (s[i + 1] == 'x' || s[i + 1] == 'X')) {
        base = 16;
        i += 2;
      }
      const std::size_t digits = i;
      while (i < s.size() && std::isalnum(static_cast<unsigned char>(s[i]))) ++i;
      std::uint64_t v = 0;
      auto [p, ec] = std::from_chars(s.data() + digits, s.data() + i, v, base);
      if (digits == i || ec != std::errc() || p != s.data() + i || v > 0xffffffffULL) {
        throw Error(ErrorCode::SyntaxError, "bad integer literal '" + std::string(s.substr(b, i - b)) + "'",
                    line, col(b));
      }
      out.push_back({Token::Type::Number, std::string(s.substr(b, i - b)), static_cast<std::uint32_t>(v), line,
                     col(b)});
      continue;
    }
    static const char* two[] = {"<<", ">>", "<=", ">=", "==", "!="};
    std::string p;
    for (const char* t : two) {
      if (s.substr(i, 2) == t) p = t;
    }
    if (p.empty()) {
      if (std::string_view("+-*&|^~<>=(){};@").find(c) == std::string_view::npos) {
        throw Error(ErrorCode::SyntaxError, std::string("unexpected character '") + c + "'", line, col(i));
      }
      p = std::string(1, c);
    }
    out.push_back({Token::Type::Punct, p, 0, line, col(i)});
    i += p.size();
  }
  out.push_back({Token::Type::End, "", 0, line, col(i)});
  return out;
}

bool is_data_kind(const std::string& s) { return s == "FIELD" || s == "META" || s == "PROP" || s == "ATTR"; }

class Parser {
 public:
  Parser(std::vector<Token> toks, std::string name) : t_(std::move(toks)) { prog_.name = std::move(name); }

  PseudoProgram run() {
    // packet object names are known up front so expressions can reject them
    for (std::size_t i = 0; i + 2 < t_.size(); ++i) {
      if (t_[i].text == "@" && t_[i].type == Token::Type::Punct && is_data_kind(t_[i + 1].text) &&
          t_[i + 2].type == Token::Type::Ident) {
        objects_.insert(t_[i + 2].text);
      }
    }
    prog_.body = items(true);
    if (cur().type != Token::Type::End) fail("unmatched '}'");
    return std::move(prog_);
  }

 private:
  const Token& cur() const { return t_[pos_]; }
  const Token& next() { return t_[pos_++]; }
  bool is(const char* p) const { return cur().type == Token::Type::Punct && cur().text == p; }
  bool is_kw(const char* k) const { return cur().type == Token::Type::Ident && cur().text == k; }

  [[noreturn]] void fail(const std::string& msg) const {
    throw Error(ErrorCode::SyntaxError, msg, cur().line, cur().column);
  }
  void expect(const char* p) {
    if (!is(p)) fail(std::string("expected '") + p + "'");
    ++pos_;
  }
  std::string ident(const char* what) {
    if (cur().type != Token::Type::Ident) fail(std::string("expected ") + what);
    return next().text;
  }
  std::uint32_t number(const char* what) {
    if (cur().type != Token::Type::Number) fail(std::string("expected ") + what);
    return next().value;
  }
  void skip_newlines() {
    while (cur().type == Token::Type::Newline || is(";")) ++pos_;
  }
  void end_statement() {
    if (is(";")) ++pos_;
    if (cur().type == Token::Type::Newline) {
      ++pos_;
      return;
    }
    if (cur().type == Token::Type::End || is("}")) return;
    fail("expected end of statement");
  }
  void reject_object(const Token& tok) const {
    if (objects_.count(tok.text)) {
      throw Error(ErrorCode::IllegalPacketObjectUse,
                  "packet object '" + tok.text + "' may only be used through LOAD/STORE", tok.line, tok.column);
    }
  }

  Block items(bool top) {
    Block out;
    for (;;) {
      skip_newlines();
      if (cur().type == Token::Type::End || is("}")) return out;
      if (auto s = statement(top)) out.push_back(std::move(*s));
    }
  }

  Block braced() {
    skip_newlines();
    expect("{");
    Block b = items(false);
    expect("}");
    return b;
  }

  std::optional<Stmt> statement(bool top) {
    Stmt s;
    s.line = cur().line;
    s.column = cur().column;
    if (is("@")) {
      ++pos_;
      const std::string kw = ident("data-access keyword");
      if (is_data_kind(kw)) {
        if (!top) fail("data declarations must be at top level");
        declaration(kw, s.line);
        end_statement();
        return std::nullopt;
      }
      if (kw == "LOAD") {
        s.kind = Stmt::Kind::Load;
        s.source = ident("packet object");
        const Token& dst = cur();
        s.name = ident("local variable");
        reject_object(dst);
        s.slot = slot(s.name);
        indexed(s);
      } else if (kw == "STORE") {
        s.kind = Stmt::Kind::Store;
        s.name = ident("packet object");
        const Token& v = cur();
        if (v.type == Token::Type::Number) {
          s.expr = literal(next());
        } else if (v.type == Token::Type::Ident) {
          reject_object(v);
          s.expr = var(next());
        } else {
          fail("STORE value must be a local or a literal");
        }
        indexed(s);
      } else if (kw == "EVENT") {
        s.kind = Stmt::Kind::Event;
        s.name = ident("event name");
        const Token& v = cur();
        s.source = ident("local variable");
        reject_object(v);
        s.slot = slot(s.source);
      } else {
        fail("unknown data-access keyword '" + kw + "'");
      }
      end_statement();
      return s;
    }
    if (is_kw("unsigned")) {
      ++pos_;
      s.kind = Stmt::Kind::Decl;
      const std::string w = ident("char, short or int");
      if (w == "char") s.width = 8;
      else if (w == "short") s.width = 16;
      else if (w == "int") s.width = 32;
      else fail("expected char, short or int");
      const Token& n = cur();
      s.name = ident("variable name");
      reject_object(n);
      s.slot = slot(s.name);
      if (is("=")) {
        ++pos_;
        s.expr = expr();
      }
      end_statement();
      return s;
    }
    if (is_kw("while") || is_kw("if")) {
      const bool loop = cur().text == "while";
      ++pos_;
      s.kind = loop ? Stmt::Kind::While : Stmt::Kind::If;
      expect("(");
      s.expr = expr();
      expect(")");
      s.body = braced();
      if (!loop) {
        const std::size_t save = pos_;
        while (cur().type == Token::Type::Newline) ++pos_;
        if (is_kw("else")) {
          ++pos_;
          if (is_kw("if")) {
            auto nested = statement(false);
            s.else_body.push_back(std::move(*nested));
            return s;
          }
          s.else_body = braced();
        } else {
          pos_ = save;
        }
      }
      end_statement();
      return s;
    }
    if (is("{")) {
      s.kind = Stmt::Kind::Block;
      s.body = braced();
      end_statement();
      return s;
    }
    if (cur().type == Token::Type::Ident) {
      const Token& n = cur();
      s.kind = Stmt::Kind::Assign;
      s.name = next().text;
      reject_object(n);
      s.slot = slot(s.name);
      expect("=");
      s.expr = expr();
      end_statement();
      return s;
    }
    fail("expected a statement");
  }

  void declaration(const std::string& kw, int line) {
    DataDecl d;
    d.line = line;
    d.name = ident("object name");
    if (prog_.find_decl(d.name)) fail("object '" + d.name + "' declared twice");
    auto type = [&]() {
      auto t = parse_value_type(cur().text);
      if (cur().type != Token::Type::Ident || !t) fail("expected UINT8, UINT16, UINT32 or DATA");
      ++pos_;
      return *t;
    };
    if (kw == "FIELD") {
      d.kind = DataDecl::Kind::Field;
      auto r = parse_region(cur().text);
      if (cur().type != Token::Type::Ident || !r) fail("expected a region");
      ++pos_;
      d.region = *r;
      d.offset = number("offset");
      d.type = type();
    } else if (kw == "META" || kw == "ATTR") {
      d.kind = kw == "META" ? DataDecl::Kind::Meta : DataDecl::Kind::Attr;
      d.type = type();
    } else {
      d.kind = DataDecl::Kind::Prop;
      d.type = ValueType::U32;
    }
    if (d.kind != DataDecl::Kind::Prop && cur().type == Token::Type::Number) d.length = number("length");
    prog_.decls.push_back(std::move(d));
  }

  void indexed(Stmt& s) {
    if (cur().type == Token::Type::Newline || cur().type == Token::Type::End || is(";") || is("}")) return;
    s.index = primary();
    auto t = parse_value_type(cur().text);
    if (cur().type != Token::Type::Ident || !t || *t == ValueType::Data) fail("expected UINT8, UINT16 or UINT32");
    ++pos_;
    s.index_type = *t;
  }

  static ExprPtr literal(const Token& t) {
    auto e = std::make_shared<Expr>();
    e->kind = Expr::Kind::Literal;
    e->value = t.value;
    e->line = t.line;
    e->column = t.column;
    return e;
  }
  int slot(const std::string& n) {
    for (std::size_t i = 0; i < prog_.locals.size(); ++i) {
      if (prog_.locals[i] == n) return static_cast<int>(i);
    }
    prog_.locals.push_back(n);
    return static_cast<int>(prog_.locals.size() - 1);
  }
  ExprPtr var(const Token& t) {
    auto e = std::make_shared<Expr>();
    e->kind = Expr::Kind::Var;
    e->name = t.text;
    e->slot = slot(t.text);
    e->line = t.line;
    e->column = t.column;
    return e;
  }
  static ExprPtr binary(BinOp op, ExprPtr a, ExprPtr b, const Token& at) {
    auto e = std::make_shared<Expr>();
    e->kind = Expr::Kind::Binary;
    e->bop = op;
    e->a = std::move(a);
    e->b = std::move(b);
    e->line = at.line;
    e->column = at.column;
    return e;
  }

  // relational < bit-or < xor < and < shift < additive < multiplicative < unary
  ExprPtr expr() {
    ExprPtr l = level(0);
    static const std::pair<const char*, BinOp> rel[] = {{"<", BinOp::Lt},  {"<=", BinOp::Le}, {">", BinOp::Gt},
                                                          {">=", BinOp::Ge}, {"==", BinOp::Eq}, {"!=", BinOp::Ne}};
    for (const auto& [p, op] : rel) {
      if (is(p)) {
        const Token& at = next();
        return binary(op, l, level(0), at);
      }
    }
    return l;
  }

  ExprPtr level(int n) {
    static const std::vector<std::vector<std::pair<const char*, BinOp>>> ops = {
        {{"|", BinOp::Or}},
        {{"^", BinOp::Xor}},
        {{"&", BinOp::And}},
        {{"<<", BinOp::Shl}, {">>", BinOp::Shr}},
        {{"+", BinOp::Add}, {"-", BinOp::Sub}},
        {{"*", BinOp::Mul}},
    };
    if (n == static_cast<int>(ops.size())) return unary();
    ExprPtr l = level(n + 1);
    for (;;) {
      bool matched = false;
      for (const auto& [p, op] : ops[static_cast<std::size_t>(n)]) {
        if (is(p)) {
          const Token& at = next();
          l = binary(op, l, level(n + 1), at);
          matched = true;
          break;
        }
      }
      if (!matched) return l;
    }
  }

  ExprPtr unary() {
    if (is("~") || is("-")) {
      const Token& at = next();
      auto e = std::make_shared<Expr>();
      e->kind = Expr::Kind::Unary;
      e->uop = at.text == "~" ? UnOp::Not : UnOp::Neg;
      e->a = unary();
      e->line = at.line;
      e->column = at.column;
      return e;
    }
    return primary();
  }

  ExprPtr primary() {
    if (cur().type == Token::Type::Number) return literal(next());
    if (cur().type == Token::Type::Ident) {
      reject_object(cur());
      return var(next());
    }
    if (is("(")) {
      ++pos_;
      ExprPtr e = expr();
      expect(")");
      return e;
    }
    fail("expected an expression");
  }

  std::vector<Token> t_;
  std::size_t pos_ = 0;
  std::set<std::string> objects_;
  PseudoProgram prog_;
};

const char* op_text(BinOp op) {
  switch (op) {
    case BinOp::Add: return "+";
    case BinOp::Sub: return "-";
    case BinOp::Mul: return "*";
    case BinOp::And: return "&";
    case BinOp::Or: return "|";
    case BinOp::Xor: return "^";
    case BinOp::Shl: return "<<";
    case BinOp::Shr: return ">>";
    case BinOp::Lt: return "<";
    case BinOp::Le: return "<=";
    case BinOp::Gt: return ">";
    case BinOp::Ge: return ">=";
    case BinOp::Eq: return "==";
    case BinOp::Ne: return "!=";
  }
  return "?";
}

std::string print_expr(const Expr& e, bool outer) {
  switch (e.kind) {
    case Expr::Kind::Literal: return std::to_string(e.value);
    case Expr::Kind::Var: return e.name;
    case Expr::Kind::Unary: return std::string(e.uop == UnOp::Not ? "~" : "-") + print_expr(*e.a, false);
    case Expr::Kind::Binary: {
      std::string s = print_expr(*e.a, false) + " " + op_text(e.bop) + " " + print_expr(*e.b, false);
      return outer ? s : "(" + s + ")";
    }
  }
  return "";
}

void print_block(const Block& b, int depth, std::string& out);

void print_stmt(const Stmt& s, int depth, std::string& out) {
  const std::string pad(static_cast<std::size_t>(depth) * 2, ' ');
  auto index = [&]() {
    if (!s.index) return std::string();
    return " " + print_expr(*s.index, false) + " " + std::string(to_string(*s.index_type));
  };
  switch (s.kind) {
    case Stmt::Kind::Decl:
      out += pad + "unsigned " + (s.width == 8 ? "char" : s.width == 16 ? "short" : "int") + " " + s.name;
      if (s.expr) out += " = " + print_expr(*s.expr, true);
      out += "\n";
      break;
    case Stmt::Kind::Assign:
      out += pad + s.name + " = " + print_expr(*s.expr, true) + "\n";
      break;
    case Stmt::Kind::While:
    case Stmt::Kind::If:
      out += pad + (s.kind == Stmt::Kind::While ? "while (" : "if (") + print_expr(*s.expr, true) + ") {\n";
      print_block(s.body, depth + 1, out);
      out += pad + "}";
      if (s.kind == Stmt::Kind::If && !s.else_body.empty()) {
        out += " else {\n";
        print_block(s.else_body, depth + 1, out);
        out += pad + "}";
      }
      out += "\n";
      break;
    case Stmt::Kind::Block:
      out += pad + "{\n";
      print_block(s.body, depth + 1, out);
      out += pad + "}\n";
      break;
    case Stmt::Kind::Load:
      out += pad + "@ LOAD " + s.source + " " + s.name + index() + "\n";
      break;
    case Stmt::Kind::Store:
      out += pad + "@ STORE " + s.name + " " + print_expr(*s.expr, true) + index() + "\n";
      break;
    case Stmt::Kind::Event:
      out += pad + "@ EVENT " + s.name + " " + s.source + "\n";
      break;
  }
}

void print_block(const Block& b, int depth, std::string& out) {
  for (const auto& s : b) print_stmt(s, depth, out);
}

bool same_expr(const ExprPtr& a, const ExprPtr& b) {
  if (!a || !b) return !a && !b;
  if (a->kind != b->kind) return false;
  switch (a->kind) {
    case Expr::Kind::Literal: return a->value == b->value;
    case Expr::Kind::Var: return a->name == b->name;
    case Expr::Kind::Unary: return a->uop == b->uop && same_expr(a->a, b->a);
    case Expr::Kind::Binary: return a->bop == b->bop && same_expr(a->a, b->a) && same_expr(a->b, b->b);
  }
  return false;
}

bool same_block(const Block& a, const Block& b);

bool same_stmt(const Stmt& a, const Stmt& b) {
  return a.kind == b.kind && a.width == b.width && a.name == b.name && a.source == b.source &&
         same_expr(a.expr, b.expr) && same_expr(a.index, b.index) && a.index_type == b.index_type &&
         same_block(a.body, b.body) && same_block(a.else_body, b.else_body);
}

bool same_block(const Block& a, const Block& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!same_stmt(a[i], b[i])) return false;
  }
  return true;
}

}  // namespace

PseudoProgram parse_program(std::string_view text, std::string name) {
  return Parser(lex(text), std::move(name)).run();
}

std::string print_program(const PseudoProgram& p) {
  std::string out;
  for (const auto& d : p.decls) {
    switch (d.kind) {
      case DataDecl::Kind::Field:
        out += "@ FIELD " + d.name + " " + std::string(to_string(d.region)) + " " + std::to_string(d.offset) + " " +
               std::string(to_string(d.type));
        break;
      case DataDecl::Kind::Meta: out += "@ META " + d.name + " " + std::string(to_string(d.type)); break;
      case DataDecl::Kind::Attr: out += "@ ATTR " + d.name + " " + std::string(to_string(d.type)); break;
      case DataDecl::Kind::Prop: out += "@ PROP " + d.name; break;
    }
    if (d.length) out += " " + std::to_string(*d.length);
    out += "\n";
  }
  if (!p.decls.empty()) out += "\n";
  print_block(p.body, 0, out);
  return out;
}

bool same_program(const PseudoProgram& a, const PseudoProgram& b) {
  if (a.decls.size() != b.decls.size()) return false;
  for (std::size_t i = 0; i < a.decls.size(); ++i) {
    const auto& x = a.decls[i];
    const auto& y = b.decls[i];
    if (x.kind != y.kind || x.name != y.name || x.region != y.region || x.offset != y.offset || x.type != y.type ||
        x.length != y.length) {
      return false;
    }
  }
  return same_block(a.body, b.body);
}

}  // namespace sdm
