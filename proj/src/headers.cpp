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

#include "sdm/headers.hpp"

#include "sdm/checksum.hpp"
#include "sdm/error.hpp"

namespace sdm {

Bytes FiveTuple::to_bytes() const {
  Bytes out(13);
  store_be32(out.data(), src);
  store_be32(out.data() + 4, dst);
  store_be16(out.data() + 8, sport);
  store_be16(out.data() + 10, dport);
  out[12] = proto;
  return out;
}

std::optional<FiveTuple> extract_five_tuple(const Packet& packet) {
  const auto net = packet.layer(Layer::Network);
  if (!net) return std::nullopt;
  const ByteView d = packet.data();
  if (d.size() < *net + 20 || (d[*net] >> 4) != 4) return std::nullopt;
  FiveTuple t;
  t.proto = d[*net + 9];
  t.src = load_be32(d.data() + *net + 12);
  t.dst = load_be32(d.data() + *net + 16);
  const auto l4 = packet.layer(Layer::Transport);
  if ((t.proto == kProtoTcp || t.proto == kProtoUdp) && l4 && d.size() >= *l4 + 4) {
    t.sport = load_be16(d.data() + *l4);
    t.dport = load_be16(d.data() + *l4 + 2);
  }
  return t;
}

std::size_t ipv4_header_length(const Packet& packet) {
  return std::size_t{packet.read_uint(Region::Network, 0, ValueType::U8) & 0x0fu} * 4;
}

void set_ipv4_checksum(Packet& packet) {
  const std::size_t hlen = ipv4_header_length(packet);
  packet.write_uint(Region::Network, 10, ValueType::U16, 0);
  const std::size_t start = packet.resolve(Region::Network, 0, hlen);
  const std::uint16_t csum = internet_checksum(packet.data().subspan(start, hlen));
  packet.write_uint(Region::Network, 10, ValueType::U16, csum);
}

void set_tcp_checksum(Packet& packet) {
  const std::size_t hlen = ipv4_header_length(packet);
  const std::uint32_t total = packet.read_uint(Region::Network, 2, ValueType::U16);
  if (total < hlen) throw Error(ErrorCode::OutOfBounds, "IPv4 total length below header length");
  const std::size_t seg_len = total - hlen;
  const std::uint32_t src = packet.read_uint(Region::Network, 12, ValueType::U32);
  const std::uint32_t dst = packet.read_uint(Region::Network, 16, ValueType::U32);
  packet.write_uint(Region::Transport, 16, ValueType::U16, 0);
  const std::size_t start = packet.resolve(Region::Transport, 0, seg_len);
  const std::uint32_t pseudo =
      pseudo_header_sum(src, dst, kProtoTcp, static_cast<std::uint16_t>(seg_len));
  const std::uint16_t csum = internet_checksum(packet.data().subspan(start, seg_len), pseudo);
  packet.write_uint(Region::Transport, 16, ValueType::U16, csum);
}

}  // namespace sdm
