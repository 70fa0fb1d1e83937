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

#ifndef SDM_CHECKSUM_HPP
#define SDM_CHECKSUM_HPP

#include <cstdint>

#include "sdm/bytes.hpp"

namespace sdm {

// Ones-complement sum of big-endian 16-bit words, folded to 16 bits. An odd
// trailing byte is padded with zero on the right.
std::uint16_t ones_sum(ByteView data, std::uint32_t initial = 0);

// Internet checksum: complement of the folded sum.
inline std::uint16_t internet_checksum(ByteView data, std::uint32_t initial = 0) {
  return static_cast<std::uint16_t>(~ones_sum(data, initial));
}

// Incremental update when one 16-bit word changes from old_word to new_word
// (HC' = ~(~HC + ~m + m')).
std::uint16_t checksum_adjust(std::uint16_t checksum, std::uint16_t old_word,
                              std::uint16_t new_word);
std::uint16_t checksum_adjust32(std::uint16_t checksum, std::uint32_t old_value,
                                std::uint32_t new_value);

// TCP/UDP pseudo-header sum (not complemented): src, dst, zero+proto, length.
std::uint32_t pseudo_header_sum(std::uint32_t src, std::uint32_t dst,
                                std::uint8_t protocol, std::uint16_t length);

}  // namespace sdm

#endif  // SDM_CHECKSUM_HPP
