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

#ifndef SDM_REGISTRY_HPP
#define SDM_REGISTRY_HPP

#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "sdm/action.hpp"

namespace sdm {

// Name-indexed action catalog. Classes are held by shared pointer so that
// instances keep their class alive after an override.
class Registry {
 public:
  // Adds or replaces a class of the same name.
  void add(ActionClass cls);
  const ActionClass* find(std::string_view name) const;
  std::shared_ptr<const ActionClass> find_shared(std::string_view name) const;
  std::vector<std::string> names() const;

  // {"classes": [{name, category, params, attributes, events, user_defined}]}
  nlohmann::json to_json() const;

 private:
  std::map<std::string, std::shared_ptr<const ActionClass>, std::less<>> classes_;
};

// Fresh registry with the provisioned catalog.
Registry builtin_registry();

}  // namespace sdm

#endif  // SDM_REGISTRY_HPP
