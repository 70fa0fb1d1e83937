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

#ifndef SDM_HEADERS_HPP
#define SDM_HEADERS_HPP

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>

#include "sdm/bytes.hpp"
#include "sdm/packet.hpp"

namespace sdm {

inline constexpr std::uint8_t kProtoTcp = 6;
inline constexpr std::uint8_t kProtoUdp = 17;
inline constexpr std::uint8_t kProtoEsp = 50;
inline constexpr std::uint16_t kEtherTypeIpv4 = 0x0800;

inline constexpr std::uint8_t kTcpFin = 0x01;
inline constexpr std::uint8_t kTcpSyn = 0x02;
inline constexpr std::uint8_t kTcpRst = 0x04;
inline constexpr std::uint8_t kTcpAck = 0x10;

struct FiveTuple {
  std::uint32_t src = 0;
  std::uint32_t dst = 0;
  std::uint16_t sport = 0;
  std::uint16_t dport = 0;
  std::uint8_t proto = 0;

  FiveTuple reversed() const { return {dst, src, dport, sport, proto}; }
  // 13-byte wire form: src, dst, sport, dport, proto (big-endian).
  Bytes to_bytes() const;
  bool operator==(const FiveTuple&) const = default;
};

struct FiveTupleHash {
  std::size_t operator()(const FiveTuple& t) const noexcept {
    std::uint64_t h = (std::uint64_t{t.src} << 32) ^ t.dst;
    h ^= (std::uint64_t{t.sport} << 24) ^ (std::uint64_t{t.dport} << 8) ^ t.proto;
    h *= 0x9e3779b97f4a7c15ULL;
    return static_cast<std::size_t>(h ^ (h >> 29));
  }
};

// Reads the 5-tuple from the NETWORK mark (and TRANSPORT for ports).
// Returns nullopt for non-IPv4 or unmarked packets; ports are zero for
// protocols other than TCP/UDP.
std::optional<FiveTuple> extract_five_tuple(const Packet& packet);

// IPv4 header length in bytes from the NETWORK mark.
std::size_t ipv4_header_length(const Packet& packet);

// Recomputes the IPv4 header checksum in place.
void set_ipv4_checksum(Packet& packet);
// Recomputes the TCP checksum over the segment described by the IPv4 total
// length, using the pseudo header.
void set_tcp_checksum(Packet& packet);

}  // namespace sdm

#endif  // SDM_HEADERS_HPP
