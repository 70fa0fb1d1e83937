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

#ifndef SDM_PACKET_HPP
#define SDM_PACKET_HPP

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include "sdm/bytes.hpp"

namespace sdm {

enum class Layer : std::uint8_t { Link = 0, Network = 1, Transport = 2, App = 3 };
inline constexpr std::size_t kLayerCount = 4;

// Addressing base for a field. Packet is byte 0 of the payload and is always
// available, even before layers are marked.
enum class Region : std::uint8_t { Link, Network, Transport, App, Packet };

enum class ValueType : std::uint8_t { U8, U16, U32, Data };

// Width in bytes of a scalar type; 0 for Data.
constexpr std::size_t width_of(ValueType type) {
  switch (type) {
    case ValueType::U8: return 1;
    case ValueType::U16: return 2;
    case ValueType::U32: return 4;
    case ValueType::Data: return 0;
  }
  return 0;
}

std::string_view to_string(Region region);
std::string_view to_string(ValueType type);
std::optional<Region> parse_region(std::string_view text);
std::optional<ValueType> parse_value_type(std::string_view text);

// (region, offset, type). Data fields without a length extend to the end of
// the payload.
struct FieldRef {
  Region region = Region::Packet;
  std::size_t offset = 0;
  ValueType type = ValueType::U8;
  std::optional<std::size_t> length;
};

using FieldValue = std::variant<std::uint32_t, Bytes>;

struct MetaObject {
  ValueType type = ValueType::U32;
  Bytes bytes;

  std::uint32_t as_uint() const;
};

struct PacketProperties {
  std::uint64_t pkt_len = 0;
  std::uint64_t ingress_port = 0;
  std::uint64_t timestamp = 0;
  bool operator==(const PacketProperties&) const = default;
};

class Packet {
 public:
  static constexpr std::size_t kDefaultReserve = 128;

  Packet() = default;
  explicit Packet(ByteView bytes, std::size_t headroom = kDefaultReserve,
                  std::size_t tailroom = kDefaultReserve, std::uint64_t ingress_port = 0,
                  std::uint64_t timestamp = 0);

  ByteView data() const { return {storage_.data() + head_, len_}; }
  MutableByteView mutable_data() { return {storage_.data() + head_, len_}; }
  std::size_t size() const { return len_; }
  std::size_t headroom() const { return head_; }
  std::size_t tailroom() const { return storage_.size() - head_ - len_; }
  std::size_t allocation() const { return storage_.size(); }

  std::optional<std::size_t> layer(Layer which) const {
    return layers_[static_cast<std::size_t>(which)];
  }
  // Marks a layer start. Marks that would break LINK <= NETWORK <= TRANSPORT
  // <= APP are cleared.
  void set_layer(Layer which, std::size_t offset);
  void clear_layer(Layer which) { layers_[static_cast<std::size_t>(which)].reset(); }
  void clear_layers() { layers_ = {}; }

  // Absolute payload offset of region+offset with `width` bytes available.
  std::size_t resolve(Region region, std::size_t offset, std::size_t width) const;

  FieldValue read_field(const FieldRef& field) const;
  void write_field(const FieldRef& field, const FieldValue& value);
  std::uint32_t read_uint(Region region, std::size_t offset, ValueType type) const;
  void write_uint(Region region, std::size_t offset, ValueType type, std::uint32_t value);

  // Length-changing operations. Head operations shift every layer mark by
  // the head delta; marks that fall outside the payload are dropped.
  void encap_head(ByteView bytes);
  MutableByteView push_head(std::size_t n);
  void decap_head(std::size_t n);
  void pad_tail(ByteView bytes);
  void unpad_tail(std::size_t n);

  bool has_meta(std::string_view name) const;
  const MetaObject& read_meta(std::string_view name) const;
  // Creates the object on first write; later writes must keep the type and,
  // for Data, the length.
  void write_meta(std::string_view name, ValueType type, const FieldValue& value);
  void erase_meta(std::string_view name);
  const std::map<std::string, MetaObject, std::less<>>& metadata() const { return meta_; }

  std::uint64_t read_prop(std::string_view name) const;
  // Properties are read-only to actions; this always throws
  // PropertyWriteForbidden.
  [[noreturn]] void write_prop(std::string_view name, std::uint64_t value);
  PacketProperties properties() const { return {len_, ingress_port_, timestamp_}; }

 private:
  void normalize_layers();
  void shift_layers(std::ptrdiff_t delta);

  Bytes storage_;
  std::size_t head_ = 0;
  std::size_t len_ = 0;
  std::array<std::optional<std::size_t>, kLayerCount> layers_{};
  std::map<std::string, MetaObject, std::less<>> meta_;
  std::uint64_t ingress_port_ = 0;
  std::uint64_t timestamp_ = 0;
};

inline Packet new_packet(ByteView bytes, std::size_t headroom = Packet::kDefaultReserve,
                         std::size_t tailroom = Packet::kDefaultReserve) {
  return Packet(bytes, headroom, tailroom);
}

// Marks LINK/NETWORK/TRANSPORT/APP assuming the payload starts with an
// Ethernet frame. Never fails; anything unparseable stays unmarked.
void mark_layers(Packet& packet);

}  // namespace sdm

#endif  // SDM_PACKET_HPP
