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

#include "sdm/registry.hpp"

#include "catalog.hpp"
#include "sdm/error.hpp"
#include "sdm/packet.hpp"

namespace sdm {

void Registry::add(ActionClass cls) {
  auto name = cls.name;
  classes_[name] = std::make_shared<const ActionClass>(std::move(cls));
}

const ActionClass* Registry::find(std::string_view name) const {
  auto it = classes_.find(name);
  return it == classes_.end() ? nullptr : it->second.get();
}

std::shared_ptr<const ActionClass> Registry::find_shared(std::string_view name) const {
  auto it = classes_.find(name);
  return it == classes_.end() ? nullptr : it->second;
}

std::vector<std::string> Registry::names() const {
  std::vector<std::string> out;
  for (const auto& [name, cls] : classes_) out.push_back(name);
  return out;
}

namespace {

std::string_view kind_name(AttrKind kind) {
  switch (kind) {
    case AttrKind::Uint: return "uint";
    case AttrKind::Ipv4: return "ipv4";
    case AttrKind::Mac: return "mac";
    case AttrKind::Bytes: return "bytes";
    case AttrKind::Text: return "text";
  }
  return "?";
}

}  // namespace

nlohmann::json Registry::to_json() const {
  nlohmann::json classes = nlohmann::json::array();
  for (const auto& [name, cls] : classes_) {
    nlohmann::json attrs = nlohmann::json::array();
    for (const auto& a : cls->attributes) {
      nlohmann::json j = {{"name", a.name}, {"type", kind_name(a.kind)}, {"runtime", a.runtime_settable}};
      if (a.kind == AttrKind::Uint) j["bits"] = a.width_bits;
      attrs.push_back(j);
    }
    classes.push_back({{"name", name},
                       {"category", to_string(cls->category)},
                       {"params", cls->params},
                       {"min_args", cls->min_args},
                       {"max_args", cls->max_args == ActionClass::npos ? nlohmann::json(nullptr)
                                                                        : nlohmann::json(cls->max_args)},
                       {"attributes", attrs},
                       {"events", cls->events},
                       {"user_defined", cls->user_defined}});
  }
  return {{"classes", classes}};
}

namespace detail {

std::uint64_t arg_uint(const std::string& arg, const std::string& what) {
  AttrSpec s{what, AttrKind::Uint, 64, false};
  return std::get<std::uint64_t>(parse_attr_value(s, arg));
}

namespace {

class FromDevice final : public Action {
 public:
  FromDevice(const ActionClass& cls, const ActionConfig& cfg) : Action(cls, cfg.instance_name, 0, 1) {
    port_ = cfg.args.empty() ? 0 : arg_uint(cfg.args[0], "PORT");
    store_attribute("PORT", port_);
  }
  std::optional<std::size_t> process(Packet& p, ActionContext&) override {
    mark_layers(p);
    return 0;
  }
  std::optional<std::uint64_t> device() const override { return port_; }

 private:
  std::uint64_t port_;
};

class ToDevice final : public Action {
 public:
  ToDevice(const ActionClass& cls, const ActionConfig& cfg) : Action(cls, cfg.instance_name, 1, 0) {
    port_ = cfg.args.empty() ? 0 : arg_uint(cfg.args[0], "PORT");
    pulls_ = cfg.args.size() > 1 ? arg_uint(cfg.args[1], "PULLS") : 1;
    store_attribute("PORT", port_);
    store_attribute("PULLS", pulls_);
  }
  std::optional<std::size_t> process(Packet&, ActionContext&) override { return std::nullopt; }
  std::optional<std::uint64_t> device() const override { return port_; }
  std::size_t pull_budget() const override { return pulls_; }

 private:
  std::uint64_t port_;
  std::uint64_t pulls_;
};

class Discard final : public Action {
 public:
  Discard(const ActionClass& cls, const ActionConfig& cfg) : Action(cls, cfg.instance_name, 1, 0) {}
  std::optional<std::size_t> process(Packet&, ActionContext&) override { return std::nullopt; }
};

}  // namespace

void add_device_actions(Registry& reg) {
  reg.add({.name = "FromDevice",
           .category = Category::Starting,
           .params = {"PORT"},
           .min_args = 0,
           .max_args = 1,
           .attributes = {uint_attr("PORT", 32)},
           .factory = factory_of<FromDevice>()});
  reg.add({.name = "ToDevice",
           .category = Category::Ending,
           .params = {"PORT", "PULLS"},
           .min_args = 0,
           .max_args = 2,
           .attributes = {uint_attr("PORT", 32), uint_attr("PULLS", 32)},
           .factory = factory_of<ToDevice>()});
  reg.add({.name = "Discard",
           .category = Category::Ending,
           .factory = factory_of<Discard>()});
}

}  // namespace detail

Registry builtin_registry() {
  Registry reg;
  detail::add_device_actions(reg);
  detail::add_straight_actions(reg);
  detail::add_classify_actions(reg);
  detail::add_sched_actions(reg);
  detail::add_middlebox_actions(reg);
  return reg;
}

}  // namespace sdm
