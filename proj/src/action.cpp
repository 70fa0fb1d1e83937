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

#include "sdm/action.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>

#include "sdm/error.hpp"

namespace sdm {

std::string_view to_string(Category category) {
  switch (category) {
    case Category::Starting: return "STARTING";
    case Category::OneToOne: return "ONE_TO_ONE";
    case Category::OneToMany: return "ONE_TO_MANY";
    case Category::ManyToOne: return "MANY_TO_ONE";
    case Category::Ending: return "ENDING";
  }
  return "?";
}

namespace {

std::uint64_t parse_uint(std::string_view text) {
  int base = 10;
  if (text.size() > 2 && text[0] == '0' && (text[1] == 'x' || text[1] == 'X')) {
    text.remove_prefix(2);
    base = 16;
  }
  std::uint64_t v = 0;
  const auto* end = text.data() + text.size();
  auto [p, ec] = std::from_chars(text.data(), end, v, base);
  if (text.empty() || ec != std::errc() || p != end) {
    throw Error(ErrorCode::InvalidArgument, "not an integer: '" + std::string(text) + "'");
  }
  return v;
}

}  // namespace

AttrValue parse_attr_value(const AttrSpec& spec, std::string_view text) {
  switch (spec.kind) {
    case AttrKind::Uint: {
      const std::uint64_t v = parse_uint(text);
      if (spec.width_bits < 64 && v >> spec.width_bits) {
        throw Error(ErrorCode::InvalidArgument, spec.name + " exceeds " +
                                                    std::to_string(spec.width_bits) + " bits");
      }
      return v;
    }
    case AttrKind::Ipv4:
      if (text.find('.') == std::string_view::npos) return parse_uint(text) & 0xffffffffu;
      return std::uint64_t{parse_ipv4(text)};
    case AttrKind::Mac:
      if (text.find(':') == std::string_view::npos) {
        Bytes b = from_hex(text);
        if (b.size() != 6) throw Error(ErrorCode::InvalidArgument, "MAC needs 6 bytes");
        return b;
      }
      return parse_mac(text);
    case AttrKind::Bytes:
      if (text.size() > 2 && text[0] == '0' && (text[1] == 'x' || text[1] == 'X')) {
        text.remove_prefix(2);
      }
      return from_hex(text);
    case AttrKind::Text:
      return std::string(text);
  }
  return std::string(text);
}

std::string format_attr_value(const AttrSpec& spec, const AttrValue& value) {
  if (const auto* u = std::get_if<std::uint64_t>(&value)) {
    if (spec.kind == AttrKind::Ipv4) return format_ipv4(static_cast<std::uint32_t>(*u));
    return std::to_string(*u);
  }
  if (const auto* b = std::get_if<Bytes>(&value)) {
    if (spec.kind == AttrKind::Mac && b->size() == 6) {
      std::string out;
      for (std::size_t i = 0; i < 6; ++i) {
        if (i) out += ':';
        out += to_hex(ByteView(b->data() + i, 1));
      }
      return out;
    }
    return to_hex(*b);
  }
  return std::get<std::string>(value);
}

namespace {

bool kind_matches(const AttrSpec& spec, const AttrValue& value) {
  switch (spec.kind) {
    case AttrKind::Uint:
    case AttrKind::Ipv4: return std::holds_alternative<std::uint64_t>(value);
    case AttrKind::Mac: return std::holds_alternative<Bytes>(value) && std::get<Bytes>(value).size() == 6;
    case AttrKind::Bytes: return std::holds_alternative<Bytes>(value);
    case AttrKind::Text: return std::holds_alternative<std::string>(value);
  }
  return false;
}

}  // namespace

Action::Action(const ActionClass& cls, std::string name, std::size_t inputs, std::size_t outputs)
    : class_(&cls), name_(std::move(name)), inputs_(inputs), outputs_(outputs) {
  for (const auto& a : cls.attributes) attributes_.emplace(a.name, std::nullopt);
}

Category Action::category() const { return class_->category; }

std::optional<std::size_t> Action::process(Packet&, ActionContext&) {
  throw Error(ErrorCode::InvalidArgument, class_->name + " does not process pushed packets");
}

bool Action::enqueue(std::size_t, Packet&&, ActionContext&) {
  throw Error(ErrorCode::InvalidArgument, class_->name + " has no ingress queues");
}

std::optional<Packet> Action::pull(ActionContext&) { return std::nullopt; }

const AttrSpec& Action::spec(std::string_view name) const {
  const AttrSpec* s = class_->find_attribute(name);
  if (!s) {
    throw Error(ErrorCode::UnknownAttribute,
                class_->name + " has no attribute '" + std::string(name) + "'");
  }
  return *s;
}

std::optional<AttrValue> Action::get_attribute(std::string_view name) const {
  spec(name);
  std::lock_guard lock(mutex_);
  return attributes_.find(name)->second;
}

void Action::set_attribute(std::string_view name, AttrValue value) {
  const AttrSpec& s = spec(name);
  if (!kind_matches(s, value)) {
    throw Error(ErrorCode::TypeMismatch, "wrong value kind for " + s.name);
  }
  if (const auto* u = std::get_if<std::uint64_t>(&value);
      u && s.kind == AttrKind::Uint && s.width_bits < 64 && (*u >> s.width_bits)) {
    throw Error(ErrorCode::InvalidArgument, s.name + " exceeds its width");
  }
  std::lock_guard lock(mutex_);
  if (running_ && !s.runtime_settable) {
    throw Error(ErrorCode::NotRuntimeSettable, s.name + " is fixed after configuration");
  }
  on_attribute_set(s.name, value);
  attributes_.find(name)->second = std::move(value);
}

void Action::set_attribute_text(std::string_view name, std::string_view text) {
  set_attribute(name, parse_attr_value(spec(name), text));
}

std::vector<std::string> Action::missing_config_attributes() const {
  std::vector<std::string> out;
  std::lock_guard lock(mutex_);
  for (const auto& a : class_->attributes) {
    if (!a.runtime_settable && !attributes_.find(a.name)->second) out.push_back(a.name);
  }
  return out;
}

std::uint64_t Action::require_uint(std::string_view name) const {
  const auto& v = attributes_.find(name)->second;
  if (!v) throw Error(ErrorCode::AttributeUnset, name_ + "." + std::string(name) + " is unset");
  return std::get<std::uint64_t>(*v);
}

const Bytes& Action::require_bytes(std::string_view name) const {
  const auto& v = attributes_.find(name)->second;
  if (!v) throw Error(ErrorCode::AttributeUnset, name_ + "." + std::string(name) + " is unset");
  return std::get<Bytes>(*v);
}

const std::string& Action::require_text(std::string_view name) const {
  const auto& v = attributes_.find(name)->second;
  if (!v) throw Error(ErrorCode::AttributeUnset, name_ + "." + std::string(name) + " is unset");
  return std::get<std::string>(*v);
}

const std::optional<AttrValue>& Action::peek_attribute(std::string_view name) const {
  return attributes_.find(spec(name).name)->second;
}

void Action::store_attribute(std::string_view name, AttrValue value) {
  attributes_.find(name)->second = std::move(value);
}

namespace {

bool is_identifier(std::string_view s) {
  if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
  for (char c : s) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
  }
  // Hex MACs such as "aabbccddeeff" are literals, but those never look like
  // upper-case symbol names, which is what scripts use.
  return std::any_of(s.begin(), s.end(), [](char c) { return std::isupper(static_cast<unsigned char>(c)) || c == '_'; });
}

}  // namespace

void Action::bind_argument(std::string_view attr, std::string_view arg, const Bindings* bindings) {
  const AttrSpec& s = spec(attr);
  std::string_view text = arg;
  if (is_identifier(arg)) {
    if (!bindings) return;
    auto it = bindings->find(arg);
    if (it == bindings->end()) return;
    text = it->second;
  }
  attributes_.find(attr)->second = parse_attr_value(s, text);
}

void Action::on_attribute_set(std::string_view, const AttrValue&) {}

const AttrSpec* ActionClass::find_attribute(std::string_view attr) const {
  for (const auto& a : attributes) {
    if (a.name == attr) return &a;
  }
  return nullptr;
}

std::unique_ptr<Action> ActionClass::instantiate(const ActionConfig& config) const {
  const std::size_t n = config.args.size();
  if (n < min_args || (max_args != npos && n > max_args)) {
    throw Error(ErrorCode::ArityMismatch,
                name + " takes " + std::to_string(min_args) +
                    (max_args == npos ? "+" : (max_args == min_args ? "" : "-" + std::to_string(max_args))) +
                    " arguments, got " + std::to_string(n));
  }
  auto action = factory(*this, config);
  const std::size_t in = action->inputs();
  const std::size_t out = action->outputs();
  bool ok = false;
  switch (category) {
    case Category::Starting: ok = in == 0 && out == 1; break;
    case Category::Ending: ok = in == 1 && out == 0; break;
    case Category::OneToOne: ok = in == 1 && out == 1; break;
    case Category::OneToMany: ok = in == 1 && out >= 2; break;
    case Category::ManyToOne: ok = in >= 2 && out == 1; break;
  }
  if (!ok) {
    throw Error(ErrorCode::ArityMismatch, name + " instance '" + config.instance_name +
                                              "' violates " + std::string(to_string(category)) +
                                              " port arity");
  }
  return action;
}

}  // namespace sdm
