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

#include <algorithm>
#include <set>

#include "sdm/error.hpp"
#include "sdm/pseudo.hpp"

namespace sdm {

namespace {

bool known_property(std::string_view n) { return n == "pkt_len" || n == "ingress_port" || n == "timestamp"; }

unsigned type_bits(ValueType t) { return static_cast<unsigned>(width_of(t) * 8); }

std::uint32_t mask_to(unsigned bits, std::uint32_t v) {
  return bits >= 32 ? v : v & ((std::uint32_t{1} << bits) - 1);
}

class Checker {
 public:
  explicit Checker(CheckedProgram& out) : out_(out) {
    out_.local_widths.assign(out_.program.locals.size(), 0);
  }

  void run() {
    for (const auto& d : out_.program.decls) {
      if (d.kind == DataDecl::Kind::Prop && !known_property(d.name)) {
        throw Error(ErrorCode::UnknownName, "no packet property '" + d.name + "'", d.line, 1);
      }
      if (d.kind == DataDecl::Kind::Meta && d.type == ValueType::Data && !d.length) {
        throw Error(ErrorCode::TypeMismatch, "DATA metadata '" + d.name + "' needs a length", d.line, 1);
      }
      if (d.kind == DataDecl::Kind::Attr) {
        if (d.type == ValueType::Data) {
          out_.attributes.push_back({d.name, AttrKind::Bytes, 0, true});
        } else {
          out_.attributes.push_back({d.name, AttrKind::Uint, type_bits(d.type), true});
        }
      }
    }
    block(out_.program.body);
  }

 private:
  [[noreturn]] static void undeclared(const std::string& n, int line, int col) {
    throw Error(ErrorCode::UndeclaredName, "'" + n + "' is not declared", line, col);
  }

  void use(const ExprPtr& e) {
    if (!e) return;
    if (e->kind == Expr::Kind::Var && !declared_.count(e->slot)) undeclared(e->name, e->line, e->column);
    use(e->a);
    use(e->b);
  }

  unsigned expr_bits(const ExprPtr& e) const {
    if (e->kind == Expr::Kind::Var) return out_.local_widths[static_cast<std::size_t>(e->slot)];
    unsigned b = 1;
    while (b < 32 && (e->value >> b)) ++b;
    return b;
  }

  int object(Stmt& s, const std::string& n) {
    for (std::size_t i = 0; i < out_.program.decls.size(); ++i) {
      if (out_.program.decls[i].name == n) return static_cast<int>(i);
    }
    undeclared(n, s.line, s.column);
  }

  void block(Block& b) {
    for (auto& s : b) stmt(s);
  }

  void stmt(Stmt& s) {
    switch (s.kind) {
      case Stmt::Kind::Decl:
        use(s.expr);
        if (!declared_.insert(s.slot).second) {
          throw Error(ErrorCode::SyntaxError, "'" + s.name + "' declared twice", s.line, s.column);
        }
        out_.local_widths[static_cast<std::size_t>(s.slot)] = s.width;
        break;
      case Stmt::Kind::Assign:
        if (!declared_.count(s.slot)) undeclared(s.name, s.line, s.column);
        use(s.expr);
        break;
      case Stmt::Kind::While:
      case Stmt::Kind::If:
        use(s.expr);
        block(s.body);
        block(s.else_body);
        break;
      case Stmt::Kind::Block:
        block(s.body);
        break;
      case Stmt::Kind::Load: {
        s.object = object(s, s.source);
        if (!declared_.count(s.slot)) undeclared(s.name, s.line, s.column);
        use(s.index);
        const DataDecl& d = out_.program.decls[static_cast<std::size_t>(s.object)];
        if (d.kind == DataDecl::Kind::Prop && s.index) {
          throw Error(ErrorCode::TypeMismatch, "properties cannot be indexed", s.line, s.column);
        }
        if (!s.index && d.type == ValueType::Data) {
          throw Error(ErrorCode::TypeMismatch, "LOAD of DATA object '" + d.name + "' needs an offset and type",
                      s.line, s.column);
        }
        const unsigned src_bits = d.kind == DataDecl::Kind::Prop ? 32 : type_bits(s.index ? *s.index_type : d.type);
        if (src_bits > out_.local_widths[static_cast<std::size_t>(s.slot)]) {
          out_.warnings.push_back("line " + std::to_string(s.line) + ": LOAD of " + std::to_string(src_bits) +
                                  "-bit " + d.name + " into narrower " + s.name + " truncates");
        }
        break;
      }
      case Stmt::Kind::Store: {
        s.object = object(s, s.name);
        use(s.expr);
        use(s.index);
        const DataDecl& d = out_.program.decls[static_cast<std::size_t>(s.object)];
        if (d.kind == DataDecl::Kind::Prop) {
          throw Error(ErrorCode::PropertyWriteForbidden, "property '" + d.name + "' is read-only", s.line,
                      s.column);
        }
        if (!s.index && d.type == ValueType::Data) {
          throw Error(ErrorCode::TypeMismatch, "STORE to DATA object '" + d.name + "' needs an offset and type",
                      s.line, s.column);
        }
        const unsigned dst_bits = type_bits(s.index ? *s.index_type : d.type);
        const unsigned val_bits = expr_bits(s.expr);
        if (val_bits > dst_bits) {
          out_.warnings.push_back("line " + std::to_string(s.line) + ": WidthMismatch: STORE of " +
                                  std::to_string(val_bits) + "-bit value into " + std::to_string(dst_bits) +
                                  "-bit " + d.name + " truncates");
        }
        break;
      }
      case Stmt::Kind::Event:
        if (!declared_.count(s.slot)) undeclared(s.source, s.line, s.column);
        if (std::find(out_.events.begin(), out_.events.end(), s.name) == out_.events.end()) {
          out_.events.push_back(s.name);
        }
        break;
    }
  }

  CheckedProgram& out_;
  std::set<int> declared_;
};

class Interpreter {
 public:
  Interpreter(const CheckedProgram& cp, Packet& p, const AttrMap& attrs, std::string_view source,
              std::uint64_t budget)
      : cp_(cp), p_(p), attrs_(attrs), source_(source), budget_(budget), vals_(cp.local_widths.size(), 0) {}

  ExecResult run() {
    block(cp_.program.body);
    return std::move(res_);
  }

 private:
  std::uint32_t eval(const Expr& e) const {
    switch (e.kind) {
      case Expr::Kind::Literal: return e.value;
      case Expr::Kind::Var: return vals_[static_cast<std::size_t>(e.slot)];
      case Expr::Kind::Unary: {
        const std::uint32_t v = eval(*e.a);
        return e.uop == UnOp::Not ? ~v : 0u - v;
      }
      case Expr::Kind::Binary: break;
    }
    const std::uint32_t a = eval(*e.a);
    const std::uint32_t b = eval(*e.b);
    switch (e.bop) {
      case BinOp::Add: return a + b;
      case BinOp::Sub: return a - b;
      case BinOp::Mul: return a * b;
      case BinOp::And: return a & b;
      case BinOp::Or: return a | b;
      case BinOp::Xor: return a ^ b;
      case BinOp::Shl: return b >= 32 ? 0 : a << b;
      case BinOp::Shr: return b >= 32 ? 0 : a >> b;
      case BinOp::Lt: return a < b;
      case BinOp::Le: return a <= b;
      case BinOp::Gt: return a > b;
      case BinOp::Ge: return a >= b;
      case BinOp::Eq: return a == b;
      case BinOp::Ne: return a != b;
    }
    return 0;
  }

  void assign(int slot, std::uint32_t v) {
    vals_[static_cast<std::size_t>(slot)] = mask_to(cp_.local_widths[static_cast<std::size_t>(slot)], v);
  }

  const AttrValue& attr(const DataDecl& d) const {
    if (auto it = res_.attr_updates.find(d.name); it != res_.attr_updates.end()) return it->second;
    auto it = attrs_.find(d.name);
    if (it == attrs_.end()) throw Error(ErrorCode::AttributeUnset, "attribute '" + d.name + "' is unset");
    return it->second;
  }

  static std::uint32_t read_bytes(const Bytes& b, std::size_t off, ValueType t) {
    const std::size_t w = width_of(t);
    if (off > b.size() || w > b.size() - off) throw Error(ErrorCode::OutOfBounds, "offset beyond object");
    std::uint32_t v = 0;
    for (std::size_t i = 0; i < w; ++i) v = (v << 8) | b[off + i];
    return v;
  }
  static void write_bytes(Bytes& b, std::size_t off, ValueType t, std::uint32_t v) {
    const std::size_t w = width_of(t);
    if (off > b.size() || w > b.size() - off) throw Error(ErrorCode::OutOfBounds, "offset beyond object");
    for (std::size_t i = 0; i < w; ++i) b[off + i] = static_cast<std::uint8_t>(v >> (8 * (w - 1 - i)));
  }

  std::uint32_t load(const Stmt& s) {
    const DataDecl& d = cp_.program.decls[static_cast<std::size_t>(s.object)];
    const std::size_t idx = s.index ? eval(*s.index) : 0;
    const ValueType t = s.index ? *s.index_type : d.type;
    switch (d.kind) {
      case DataDecl::Kind::Field: return p_.read_uint(d.region, d.offset + idx, t);
      case DataDecl::Kind::Prop: return static_cast<std::uint32_t>(p_.read_prop(d.name));
      case DataDecl::Kind::Meta: {
        const MetaObject& m = p_.read_meta(d.name);
        if (!s.index) return m.as_uint();
        return read_bytes(m.bytes, idx, t);
      }
      case DataDecl::Kind::Attr: {
        const AttrValue& v = attr(d);
        if (const auto* u = std::get_if<std::uint64_t>(&v)) {
          if (s.index) throw Error(ErrorCode::TypeMismatch, "scalar attribute '" + d.name + "' cannot be indexed");
          return static_cast<std::uint32_t>(*u);
        }
        if (const auto* b = std::get_if<Bytes>(&v)) {
          if (!s.index) throw Error(ErrorCode::TypeMismatch, "byte attribute needs an index");
          return read_bytes(*b, idx, t);
        }
        throw Error(ErrorCode::TypeMismatch, "text attribute '" + d.name + "' is not loadable");
      }
    }
    return 0;
  }

  void store(const Stmt& s) {
    const DataDecl& d = cp_.program.decls[static_cast<std::size_t>(s.object)];
    const std::uint32_t raw = eval(*s.expr);
    const std::size_t idx = s.index ? eval(*s.index) : 0;
    const ValueType t = s.index ? *s.index_type : d.type;
    const std::uint32_t v = mask_to(type_bits(t), raw);
    switch (d.kind) {
      case DataDecl::Kind::Field:
        p_.write_uint(d.region, d.offset + idx, t, v);
        return;
      case DataDecl::Kind::Prop:
        p_.write_prop(d.name, v);
      case DataDecl::Kind::Meta: {
        if (!s.index) {
          p_.write_meta(d.name, d.type, v);
          return;
        }
        Bytes b = p_.has_meta(d.name) ? p_.read_meta(d.name).bytes : Bytes(d.length.value_or(0), 0);
        write_bytes(b, idx, t, v);
        p_.write_meta(d.name, ValueType::Data, b);
        return;
      }
      case DataDecl::Kind::Attr: {
        if (!s.index) {
          res_.attr_updates[d.name] = std::uint64_t{mask_to(type_bits(d.type), raw)};
          return;
        }
        Bytes b;
        if (auto it = res_.attr_updates.find(d.name); it != res_.attr_updates.end()) {
          b = std::get<Bytes>(it->second);
        } else if (auto a = attrs_.find(d.name); a != attrs_.end()) {
          b = std::get<Bytes>(a->second);
        } else {
          b.assign(d.length.value_or(0), 0);
        }
        write_bytes(b, idx, t, v);
        res_.attr_updates[d.name] = std::move(b);
        return;
      }
    }
  }

  void block(const Block& b) {
    for (const auto& s : b) stmt(s);
  }

  void stmt(const Stmt& s) {
    switch (s.kind) {
      case Stmt::Kind::Decl: assign(s.slot, s.expr ? eval(*s.expr) : 0); break;
      case Stmt::Kind::Assign: assign(s.slot, eval(*s.expr)); break;
      case Stmt::Kind::While:
        while (eval(*s.expr)) {
          if (++res_.loop_iterations > budget_) {
            throw Error(ErrorCode::LoopBudgetExceeded,
                        "more than " + std::to_string(budget_) + " loop iterations", s.line, s.column);
          }
          block(s.body);
        }
        break;
      case Stmt::Kind::If:
        block(eval(*s.expr) ? s.body : s.else_body);
        break;
      case Stmt::Kind::Block: block(s.body); break;
      case Stmt::Kind::Load: assign(s.slot, load(s)); break;
      case Stmt::Kind::Store: store(s); break;
      case Stmt::Kind::Event: {
        const unsigned w = cp_.local_widths[static_cast<std::size_t>(s.slot)] / 8;
        const std::uint32_t v = vals_[static_cast<std::size_t>(s.slot)];
        Bytes payload(w);
        for (unsigned i = 0; i < w; ++i) payload[i] = static_cast<std::uint8_t>(v >> (8 * (w - 1 - i)));
        res_.events.push_back({std::string(source_), s.name, std::move(payload)});
        break;
      }
    }
  }

  const CheckedProgram& cp_;
  Packet& p_;
  const AttrMap& attrs_;
  std::string_view source_;
  std::uint64_t budget_;
  std::vector<std::uint32_t> vals_;
  ExecResult res_;
};

class UserAction final : public Action {
 public:
  UserAction(const ActionClass& cls, const ActionConfig& cfg, std::shared_ptr<const CheckedProgram> prog)
      : Action(cls, cfg.instance_name, 1, 1), prog_(std::move(prog)) {}

  std::optional<std::size_t> process(Packet& p, ActionContext& ctx) override {
    AttrMap attrs;
    for (const auto& a : prog_->attributes) {
      if (const auto& v = peek_attribute(a.name)) attrs.emplace(a.name, *v);
    }
    ExecResult r = interpret(*prog_, p, attrs, name());
    for (auto& [n, v] : r.attr_updates) store_attribute(n, std::move(v));
    for (auto& e : r.events) ctx.emit(e.name, std::move(e.payload));
    return 0;
  }

 private:
  std::shared_ptr<const CheckedProgram> prog_;
};

}  // namespace

CheckedProgram typecheck(const PseudoProgram& program) {
  CheckedProgram out;
  out.program = program;
  Checker(out).run();
  return out;
}

ExecResult interpret(const CheckedProgram& program, Packet& packet, const AttrMap& attrs,
                     std::string_view source, std::uint64_t loop_budget) {
  return Interpreter(program, packet, attrs, source, loop_budget).run();
}

const ActionClass& register_user_action(const CheckedProgram& program, Registry& registry, Category category,
                                        std::string name) {
  if (category != Category::OneToOne) {
    throw Error(ErrorCode::CategoryUnsupported,
                "only ONE_TO_ONE actions can be generated, not " + std::string(to_string(category)));
  }
  auto prog = std::make_shared<const CheckedProgram>(program);
  ActionClass cls;
  cls.name = name.empty() ? program.program.name : std::move(name);
  cls.category = Category::OneToOne;
  cls.attributes = program.attributes;
  cls.events = program.events;
  cls.user_defined = true;
  cls.factory = [prog](const ActionClass& c, const ActionConfig& cfg) -> std::unique_ptr<Action> {
    return std::make_unique<UserAction>(c, cfg, prog);
  };
  const std::string key = cls.name;
  registry.add(std::move(cls));
  return *registry.find(key);
}

}  // namespace sdm
