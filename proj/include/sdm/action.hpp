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

#ifndef SDM_ACTION_HPP
#define SDM_ACTION_HPP

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "sdm/bytes.hpp"
#include "sdm/packet.hpp"

namespace sdm {

enum class Category { Starting, OneToOne, OneToMany, ManyToOne, Ending };

std::string_view to_string(Category category);

enum class AttrKind { Uint, Ipv4, Mac, Bytes, Text };

struct AttrSpec {
  std::string name;
  AttrKind kind = AttrKind::Uint;
  unsigned width_bits = 32;  // Uint only
  bool runtime_settable = false;
};

// Uint and Ipv4 use the integer alternative, Mac and Bytes the byte vector,
// Text the string.
using AttrValue = std::variant<std::uint64_t, Bytes, std::string>;

// Parses the textual form of an attribute ("10.0.0.1", "0x2a", hex bytes).
AttrValue parse_attr_value(const AttrSpec& spec, std::string_view text);
std::string format_attr_value(const AttrSpec& spec, const AttrValue& value);

struct Event {
  std::string source;
  std::string name;
  Bytes payload;
  bool operator==(const Event&) const = default;
};

// Per-invocation context handed to an action. Events are emit-only.
class ActionContext {
 public:
  explicit ActionContext(std::string_view source) : source_(source) {}

  void emit(std::string_view name, Bytes payload = {}) {
    events_.push_back({source_, std::string(name), std::move(payload)});
  }
  // Marks the current packet as taken over by the action (held for later
  // release) rather than dropped.
  void hold() { held_ = true; }

  bool held() const { return held_; }
  std::vector<Event>& events() { return events_; }
  void reset() {
    held_ = false;
    events_.clear();
  }

 private:
  std::string source_;
  std::vector<Event> events_;
  bool held_ = false;
};

class ActionClass;

// Symbol table for script arguments (IP_SRC, MAC_DEST, ...).
using Bindings = std::map<std::string, std::string, std::less<>>;

struct ActionConfig {
  std::string instance_name;
  std::vector<std::string> args;
  const Bindings* bindings = nullptr;
};

// An instantiated action. Instances are single-owner state machines; the
// mutex gives a packet a consistent attribute snapshot against concurrent
// control-plane access.
class Action {
 public:
  Action(const ActionClass& cls, std::string name, std::size_t inputs, std::size_t outputs);
  virtual ~Action() = default;
  Action(const Action&) = delete;
  Action& operator=(const Action&) = delete;

  const std::string& name() const { return name_; }
  const ActionClass& action_class() const { return *class_; }
  Category category() const;
  std::size_t inputs() const { return inputs_; }
  std::size_t outputs() const { return outputs_; }

  // Straight and classification actions. Returns the egress port, or nullopt
  // when the packet is consumed (dropped, or held if ctx.hold() was called;
  // a held packet has been moved from).
  virtual std::optional<std::size_t> process(Packet& packet, ActionContext& ctx);

  // Scheduling actions.
  virtual bool enqueue(std::size_t port, Packet&& packet, ActionContext& ctx);
  virtual std::optional<Packet> pull(ActionContext& ctx);
  virtual bool has_pending() const { return false; }

  // Packets currently retained inside the action (queues, hold buffers).
  virtual std::size_t retained() const { return 0; }
  // Held packets whose hold ended; released downstream on the next tick.
  virtual std::vector<Packet> take_released() { return {}; }

  // Device binding of FromDevice/ToDevice instances (trace "port" field).
  virtual std::optional<std::uint64_t> device() const { return std::nullopt; }
  // Pulls per tick an ending action issues to an upstream scheduler.
  virtual std::size_t pull_budget() const { return 0; }

  // Control interface.
  std::optional<AttrValue> get_attribute(std::string_view name) const;
  void set_attribute(std::string_view name, AttrValue value);
  void set_attribute_text(std::string_view name, std::string_view text);
  // Ends the configuration phase: attributes that are not runtime-settable
  // become read-only.
  void start() { running_ = true; }
  bool running() const { return running_; }
  // Config-phase attributes still unset.
  std::vector<std::string> missing_config_attributes() const;

  std::mutex& mutex() const { return mutex_; }

 protected:
  const AttrSpec& spec(std::string_view name) const;
  std::uint64_t require_uint(std::string_view name) const;
  const Bytes& require_bytes(std::string_view name) const;
  const std::string& require_text(std::string_view name) const;
  // Lock-free read for use inside process().
  const std::optional<AttrValue>& peek_attribute(std::string_view name) const;
  // Internal update that bypasses the phase check (counters, sequence numbers).
  void store_attribute(std::string_view name, AttrValue value);
  // Script-argument binding: a literal initializes the attribute, an
  // identifier is resolved through the bindings, otherwise it stays unset.
  void bind_argument(std::string_view attr, std::string_view arg, const Bindings* bindings);
  // Hook for attributes that act as commands (e.g. mapping installs).
  virtual void on_attribute_set(std::string_view name, const AttrValue& value);

 private:
  const ActionClass* class_;
  std::string name_;
  std::size_t inputs_;
  std::size_t outputs_;
  std::map<std::string, std::optional<AttrValue>, std::less<>> attributes_;
  bool running_ = false;
  mutable std::mutex mutex_;
};

using ActionFactory = std::function<std::unique_ptr<Action>(const ActionClass&, const ActionConfig&)>;

class ActionClass {
 public:
  std::string name;
  Category category = Category::OneToOne;
  // Positional script parameters; max_args == npos means variadic.
  std::vector<std::string> params;
  std::size_t min_args = 0;
  std::size_t max_args = 0;
  std::vector<AttrSpec> attributes;
  std::vector<std::string> events;
  bool user_defined = false;
  ActionFactory factory;

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  const AttrSpec* find_attribute(std::string_view attr) const;
  // Checks argument count, then runs the factory and the port-arity
  // invariant of the category.
  std::unique_ptr<Action> instantiate(const ActionConfig& config) const;
};

}  // namespace sdm

#endif  // SDM_ACTION_HPP
