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

#ifndef SDM_TESTS_UTIL_HPP
#define SDM_TESTS_UTIL_HPP

#include <gtest/gtest.h>

#include <string>

#include "oracles.hpp"
#include "sdm/error.hpp"
#include "sdm/packet.hpp"

// Expects stmt to throw sdm::Error with the given code.
#define EXPECT_SDM_ERROR(stmt, ecode)                                                   \
  do {                                                                                  \
    try {                                                                               \
      stmt;                                                                             \
      ADD_FAILURE() << "expected " << sdm::to_string(ecode) << " from " #stmt;         \
    } catch (const sdm::Error& e_) {                                                    \
      EXPECT_EQ(e_.code(), ecode) << e_.what();                                         \
    }                                                                                   \
  } while (0)

namespace testutil {

inline sdm::Packet marked(const oracle::Buf& frame) {
  sdm::Packet p(frame);
  sdm::mark_layers(p);
  return p;
}

inline oracle::Buf bytes(const sdm::Packet& p) { return oracle::Buf(p.data().begin(), p.data().end()); }

inline std::string data_path(const std::string& name) { return std::string(SDM_DATA_DIR) + "/" + name; }

}  // namespace testutil

#endif  // SDM_TESTS_UTIL_HPP
