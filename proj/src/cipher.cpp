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

#include "sdm/cipher.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cctype>
#include <string>

#include "sdm/error.hpp"

namespace sdm {

namespace {

class IdentityCipher final : public BlockCipher {
 public:
  std::size_t block_size() const override { return 16; }
  void encrypt(MutableByteView, ByteView) const override {}
  void decrypt(MutableByteView, ByteView) const override {}
};

class XorCipher final : public BlockCipher {
 public:
  std::size_t block_size() const override { return 16; }
  void encrypt(MutableByteView data, ByteView key) const override {
    if (key.empty()) throw Error(ErrorCode::InvalidArgument, "xor cipher needs a key");
    const std::size_t n = data.size() - data.size() % 16;
    for (std::size_t i = 0; i < n; ++i) data[i] ^= key[i % key.size()];
  }
  void decrypt(MutableByteView data, ByteView key) const override { encrypt(data, key); }
};

class Aes128Ecb final : public BlockCipher {
 public:
  std::size_t block_size() const override { return 16; }
  void encrypt(MutableByteView data, ByteView key) const override { run(data, key, 1); }
  void decrypt(MutableByteView data, ByteView key) const override { run(data, key, 0); }

 private:
  static void run(MutableByteView data, ByteView key, int enc) {
    if (key.size() != 16) throw Error(ErrorCode::InvalidArgument, "AES-128 needs a 16-byte key");
    const int n = static_cast<int>(data.size() - data.size() % 16);
    if (n == 0) return;
    std::unique_ptr<EVP_CIPHER_CTX, decltype(&EVP_CIPHER_CTX_free)> ctx(EVP_CIPHER_CTX_new(),
                                                                          EVP_CIPHER_CTX_free);
    int out_len = 0;
    if (!ctx || EVP_CipherInit_ex(ctx.get(), EVP_aes_128_ecb(), nullptr, key.data(), nullptr, enc) != 1 ||
        EVP_CIPHER_CTX_set_padding(ctx.get(), 0) != 1 ||
        EVP_CipherUpdate(ctx.get(), data.data(), &out_len, data.data(), n) != 1 || out_len != n) {
      throw Error(ErrorCode::RuntimeFault, "AES transform failed");
    }
  }
};

}  // namespace

std::unique_ptr<BlockCipher> make_cipher(std::string_view mode) {
  std::string m(mode);
  std::transform(m.begin(), m.end(), m.begin(), [](unsigned char c) { return std::tolower(c); });
  if (m == "identity" || m == "none") return std::make_unique<IdentityCipher>();
  if (m == "xor") return std::make_unique<XorCipher>();
  if (m == "aes" || m == "ebc" || m == "ecb" || m == "aes-128-ecb") return std::make_unique<Aes128Ecb>();
  throw Error(ErrorCode::InvalidArgument, "unknown cipher mode '" + std::string(mode) + "'");
}

}  // namespace sdm
