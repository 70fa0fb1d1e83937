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

#ifndef SDM_SRC_CATALOG_HPP
#define SDM_SRC_CATALOG_HPP

#include <memory>
#include <string>
#include <vector>

#include "sdm/action.hpp"
#include "sdm/registry.hpp"

namespace sdm::detail {

template <typename T>
ActionFactory factory_of() {
  return [](const ActionClass& cls, const ActionConfig& cfg) -> std::unique_ptr<Action> {
    return std::make_unique<T>(cls, cfg);
  };
}

inline AttrSpec uint_attr(std::string name, unsigned bits, bool runtime = false) {
  return {std::move(name), AttrKind::Uint, bits, runtime};
}
inline AttrSpec attr(std::string name, AttrKind kind, bool runtime = false) {
  return {std::move(name), kind, 32, runtime};
}

// Parses a non-negative integer script argument (decimal or 0x hex).
std::uint64_t arg_uint(const std::string& arg, const std::string& what);

void add_device_actions(Registry& reg);
void add_straight_actions(Registry& reg);
void add_classify_actions(Registry& reg);
void add_sched_actions(Registry& reg);
void add_middlebox_actions(Registry& reg);

}  // namespace sdm::detail

#endif  // SDM_SRC_CATALOG_HPP
