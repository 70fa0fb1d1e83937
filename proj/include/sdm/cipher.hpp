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

#ifndef SDM_CIPHER_HPP
#define SDM_CIPHER_HPP

#include <memory>
#include <string_view>

#include "sdm/bytes.hpp"

namespace sdm {

// Block transform applied in ECB order over whole blocks. A trailing
// partial block is left untouched.
class BlockCipher {
 public:
  virtual ~BlockCipher() = default;
  virtual std::size_t block_size() const = 0;
  virtual void encrypt(MutableByteView data, ByteView key) const = 0;
  virtual void decrypt(MutableByteView data, ByteView key) const = 0;
};

// "identity", "xor", "aes" (AES-128-ECB, 16-byte key). Also accepts the
// script spellings "EBC"/"ECB" for aes.
std::unique_ptr<BlockCipher> make_cipher(std::string_view mode);

}  // namespace sdm

#endif  // SDM_CIPHER_HPP
