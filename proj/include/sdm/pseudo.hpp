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

#ifndef SDM_PSEUDO_HPP
#define SDM_PSEUDO_HPP

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sdm/action.hpp"
#include "sdm/packet.hpp"
#include "sdm/registry.hpp"

namespace sdm {

enum class BinOp { Add, Sub, Mul, And, Or, Xor, Shl, Shr, Lt, Le, Gt, Ge, Eq, Ne };
enum class UnOp { Not, Neg };

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
  enum class Kind { Literal, Var, Unary, Binary } kind = Kind::Literal;
  std::uint32_t value = 0;
  std::string name;
  BinOp bop = BinOp::Add;
  UnOp uop = UnOp::Not;
  ExprPtr a;
  ExprPtr b;
  int slot = -1;  // Var: local slot, assigned by the parser
  int line = 0;
  int column = 0;
};

struct Stmt;
using Block = std::vector<Stmt>;

struct Stmt {
  enum class Kind { Decl, Assign, While, If, Block, Load, Store, Event } kind = Kind::Block;
  int line = 0;
  int column = 0;
  unsigned width = 32;   // Decl: 8, 16 or 32
  std::string name;      // Decl/Assign target, Load destination, Store object, Event name
  std::string source;    // Load object, Event local
  ExprPtr expr;          // Decl init, Assign value, loop/if condition, Store value
  ExprPtr index;         // indexed Load/Store offset
  std::optional<ValueType> index_type;
  Block body;
  Block else_body;
  int slot = -1;    // local named by name (Decl/Assign/Load) or source (Event)
  int object = -1;  // Load/Store: index into decls, resolved by typecheck
};

struct DataDecl {
  enum class Kind { Field, Meta, Prop, Attr } kind = Kind::Field;
  std::string name;
  Region region = Region::Packet;
  std::size_t offset = 0;
  ValueType type = ValueType::U32;
  std::optional<std::size_t> length;
  int line = 0;
};

struct PseudoProgram {
  std::string name;
  std::vector<DataDecl> decls;
  Block body;
  std::vector<std::string> locals;  // slot -> name

  const DataDecl* find_decl(std::string_view n) const;
};

// Structural equality, ignoring source positions.
bool same_program(const PseudoProgram& a, const PseudoProgram& b);

// Throws SyntaxError or IllegalPacketObjectUse with line/column.
PseudoProgram parse_program(std::string_view text, std::string name = "UserAction");
std::string print_program(const PseudoProgram& program);

struct CheckedProgram {
  PseudoProgram program;
  std::vector<AttrSpec> attributes;
  std::vector<std::string> events;
  std::vector<std::string> warnings;
  std::vector<unsigned> local_widths;  // per slot
};

// Throws UndeclaredName, TypeMismatch, PropertyWriteForbidden, UnknownName.
CheckedProgram typecheck(const PseudoProgram& program);

using AttrMap = std::map<std::string, AttrValue, std::less<>>;

struct ExecResult {
  AttrMap attr_updates;
  std::vector<Event> events;
  std::uint64_t loop_iterations = 0;
};

inline constexpr std::uint64_t kLoopBudget = 1000000;

// Runs the program on the packet. Attributes absent from attrs are unset.
ExecResult interpret(const CheckedProgram& program, Packet& packet, const AttrMap& attrs,
                     std::string_view source = "", std::uint64_t loop_budget = kLoopBudget);

// Adds (or replaces) a ONE_TO_ONE class named name (defaults to the program
// name) whose instances run the program. Other categories throw
// CategoryUnsupported.
const ActionClass& register_user_action(const CheckedProgram& program, Registry& registry,
                                        Category category = Category::OneToOne,
                                        std::string name = "");

}  // namespace sdm

#endif  // SDM_PSEUDO_HPP
