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

#include "sdm/bytes.hpp"

#include <charconv>

#include "sdm/error.hpp"

namespace sdm {

namespace {

int hex_digit(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

}  // namespace

std::string to_hex(ByteView bytes) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (std::uint8_t b : bytes) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 0x0f]);
  }
  return out;
}

Bytes from_hex(std::string_view hex) {
  std::string compact;
  compact.reserve(hex.size());
  for (char c : hex) {
    if (c == ' ' || c == '\n' || c == '\r' || c == '\t') continue;
    compact.push_back(c);
  }
  if (compact.size() % 2 != 0) {
    throw Error(ErrorCode::InvalidArgument, "hex string has odd length");
  }
  Bytes out(compact.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i) {
    int hi = hex_digit(compact[2 * i]);
    int lo = hex_digit(compact[2 * i + 1]);
    if (hi < 0 || lo < 0) throw Error(ErrorCode::InvalidArgument, "invalid hex digit");
    out[i] = static_cast<std::uint8_t>((hi << 4) | lo);
  }
  return out;
}

std::uint32_t parse_ipv4(std::string_view text) {
  std::uint32_t addr = 0;
  int parts = 0;
  const char* p = text.data();
  const char* end = text.data() + text.size();
  while (parts < 4) {
    unsigned value = 0;
    auto [next, ec] = std::from_chars(p, end, value);
    if (ec != std::errc() || value > 255 || next == p) break;
    addr = (addr << 8) | value;
    ++parts;
    p = next;
    if (parts < 4) {
      if (p == end || *p != '.') break;
      ++p;
    }
  }
  if (parts != 4 || p != end) {
    throw Error(ErrorCode::InvalidArgument, "bad IPv4 address '" + std::string(text) + "'");
  }
  return addr;
}

std::string format_ipv4(std::uint32_t addr) {
  return std::to_string(addr >> 24) + "." + std::to_string((addr >> 16) & 0xff) + "." +
         std::to_string((addr >> 8) & 0xff) + "." + std::to_string(addr & 0xff);
}

Bytes parse_mac(std::string_view text) {
  Bytes out;
  std::size_t i = 0;
  while (i < text.size()) {
    if (i + 2 > text.size()) break;
    int hi = hex_digit(text[i]);
    int lo = hex_digit(text[i + 1]);
    if (hi < 0 || lo < 0) break;
    out.push_back(static_cast<std::uint8_t>((hi << 4) | lo));
    i += 2;
    if (i < text.size()) {
      if (text[i] != ':' && text[i] != '-') break;
      ++i;
      if (i == text.size()) { out.clear(); break; }
    }
  }
  if (out.size() != 6 || i != text.size()) {
    throw Error(ErrorCode::InvalidArgument, "bad MAC address '" + std::string(text) + "'");
  }
  return out;
}

}  // namespace sdm
