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

#include "sdm/packet.hpp"

#include <algorithm>
#include <cstring>

#include "sdm/error.hpp"

namespace sdm {

std::string_view to_string(Region region) {
  switch (region) {
    case Region::Link: return "LINK";
    case Region::Network: return "NETWORK";
    case Region::Transport: return "TRANSPORT";
    case Region::App: return "APP";
    case Region::Packet: return "PACKET";
  }
  return "?";
}

std::string_view to_string(ValueType type) {
  switch (type) {
    case ValueType::U8: return "UINT8";
    case ValueType::U16: return "UINT16";
    case ValueType::U32: return "UINT32";
    case ValueType::Data: return "DATA";
  }
  return "?";
}

std::optional<Region> parse_region(std::string_view text) {
  if (text == "LINK") return Region::Link;
  if (text == "NETWORK") return Region::Network;
  if (text == "TRANSPORT") return Region::Transport;
  if (text == "APP") return Region::App;
  if (text == "PACKET") return Region::Packet;
  return std::nullopt;
}

std::optional<ValueType> parse_value_type(std::string_view text) {
  if (text == "UINT8") return ValueType::U8;
  if (text == "UINT16") return ValueType::U16;
  if (text == "UINT32") return ValueType::U32;
  if (text == "DATA") return ValueType::Data;
  return std::nullopt;
}

std::uint32_t MetaObject::as_uint() const {
  std::uint32_t v = 0;
  for (std::uint8_t b : bytes) v = (v << 8) | b;
  return v;
}

Packet::Packet(ByteView bytes, std::size_t headroom, std::size_t tailroom,
               std::uint64_t ingress_port, std::uint64_t timestamp)
    : storage_(headroom + bytes.size() + tailroom, 0),
      head_(headroom),
      len_(bytes.size()),
      ingress_port_(ingress_port),
      timestamp_(timestamp) {
  if (!bytes.empty()) std::memcpy(storage_.data() + head_, bytes.data(), bytes.size());
}

void Packet::set_layer(Layer which, std::size_t offset) {
  if (offset > len_) {
    throw Error(ErrorCode::OutOfBounds, "layer mark " + std::to_string(offset) +
                                            " beyond payload of " + std::to_string(len_));
  }
  const auto idx = static_cast<std::size_t>(which);
  layers_[idx] = offset;
  for (std::size_t i = 0; i < idx; ++i) {
    if (layers_[i] && *layers_[i] > offset) layers_[i].reset();
  }
  for (std::size_t i = idx + 1; i < kLayerCount; ++i) {
    if (layers_[i] && *layers_[i] < offset) layers_[i].reset();
  }
}

std::size_t Packet::resolve(Region region, std::size_t offset, std::size_t width) const {
  std::size_t base = 0;
  if (region != Region::Packet) {
    const auto& mark = layers_[static_cast<std::size_t>(region)];
    if (!mark) {
      throw Error(ErrorCode::UnmarkedRegion,
                  std::string(to_string(region)) + " layer is not marked");
    }
    base = *mark;
  }
  const std::size_t start = base + offset;
  if (start < base || start > len_ || width > len_ - start) {
    throw Error(ErrorCode::OutOfBounds,
                std::string(to_string(region)) + "+" + std::to_string(offset) + " width " +
                    std::to_string(width) + " exceeds payload of " + std::to_string(len_));
  }
  return start;
}

FieldValue Packet::read_field(const FieldRef& field) const {
  if (field.type == ValueType::Data) {
    std::size_t start = resolve(field.region, field.offset, 0);
    std::size_t len = field.length ? *field.length : len_ - start;
    start = resolve(field.region, field.offset, len);
    const auto* p = storage_.data() + head_ + start;
    return Bytes(p, p + len);
  }
  return read_uint(field.region, field.offset, field.type);
}

void Packet::write_field(const FieldRef& field, const FieldValue& value) {
  if (field.type == ValueType::Data) {
    const Bytes* bytes = std::get_if<Bytes>(&value);
    if (!bytes) throw Error(ErrorCode::TypeMismatch, "DATA field needs a byte value");
    if (field.length && *field.length != bytes->size()) {
      throw Error(ErrorCode::TypeMismatch, "DATA field length mismatch");
    }
    std::size_t start = resolve(field.region, field.offset, bytes->size());
    std::copy(bytes->begin(), bytes->end(), storage_.begin() + static_cast<std::ptrdiff_t>(head_ + start));
    return;
  }
  const auto* v = std::get_if<std::uint32_t>(&value);
  if (!v) throw Error(ErrorCode::TypeMismatch, "scalar field needs an integer value");
  write_uint(field.region, field.offset, field.type, *v);
}

std::uint32_t Packet::read_uint(Region region, std::size_t offset, ValueType type) const {
  const std::size_t width = width_of(type);
  if (width == 0) throw Error(ErrorCode::TypeMismatch, "DATA is not a scalar type");
  const auto* p = storage_.data() + head_ + resolve(region, offset, width);
  switch (type) {
    case ValueType::U8: return *p;
    case ValueType::U16: return load_be16(p);
    default: return load_be32(p);
  }
}

void Packet::write_uint(Region region, std::size_t offset, ValueType type, std::uint32_t value) {
  const std::size_t width = width_of(type);
  if (width == 0) throw Error(ErrorCode::TypeMismatch, "DATA is not a scalar type");
  auto* p = storage_.data() + head_ + resolve(region, offset, width);
  switch (type) {
    case ValueType::U8: *p = static_cast<std::uint8_t>(value); break;
    case ValueType::U16: store_be16(p, static_cast<std::uint16_t>(value)); break;
    default: store_be32(p, value); break;
  }
}

void Packet::shift_layers(std::ptrdiff_t delta) {
  for (auto& mark : layers_) {
    if (!mark) continue;
    const auto shifted = static_cast<std::ptrdiff_t>(*mark) + delta;
    if (shifted < 0) {
      mark.reset();
    } else {
      mark = static_cast<std::size_t>(shifted);
    }
  }
  normalize_layers();
}

void Packet::normalize_layers() {
  for (auto& mark : layers_) {
    if (mark && *mark > len_) mark.reset();
  }
}

MutableByteView Packet::push_head(std::size_t n) {
  if (n > head_) {
    throw Error(ErrorCode::InsufficientHeadroom, "need " + std::to_string(n) + " bytes, have " +
                                                     std::to_string(head_));
  }
  head_ -= n;
  len_ += n;
  shift_layers(static_cast<std::ptrdiff_t>(n));
  return {storage_.data() + head_, n};
}

void Packet::encap_head(ByteView bytes) {
  auto dst = push_head(bytes.size());
  if (!bytes.empty()) std::memcpy(dst.data(), bytes.data(), bytes.size());
}

void Packet::decap_head(std::size_t n) {
  if (n > len_) {
    throw Error(ErrorCode::Underflow, "cannot remove " + std::to_string(n) +
                                          " bytes from payload of " + std::to_string(len_));
  }
  head_ += n;
  len_ -= n;
  shift_layers(-static_cast<std::ptrdiff_t>(n));
}

void Packet::pad_tail(ByteView bytes) {
  if (bytes.size() > tailroom()) {
    throw Error(ErrorCode::InsufficientTailroom, "need " + std::to_string(bytes.size()) +
                                                     " bytes, have " + std::to_string(tailroom()));
  }
  if (!bytes.empty()) std::memcpy(storage_.data() + head_ + len_, bytes.data(), bytes.size());
  len_ += bytes.size();
}

void Packet::unpad_tail(std::size_t n) {
  if (n > len_) {
    throw Error(ErrorCode::Underflow, "cannot remove " + std::to_string(n) +
                                          " bytes from payload of " + std::to_string(len_));
  }
  len_ -= n;
  normalize_layers();
}

bool Packet::has_meta(std::string_view name) const { return meta_.find(name) != meta_.end(); }

const MetaObject& Packet::read_meta(std::string_view name) const {
  auto it = meta_.find(name);
  if (it == meta_.end()) throw Error(ErrorCode::UnknownName, "no metadata '" + std::string(name) + "'");
  return it->second;
}

void Packet::write_meta(std::string_view name, ValueType type, const FieldValue& value) {
  Bytes bytes;
  if (type == ValueType::Data) {
    const Bytes* b = std::get_if<Bytes>(&value);
    if (!b) throw Error(ErrorCode::TypeMismatch, "DATA metadata needs a byte value");
    bytes = *b;
  } else {
    const auto* v = std::get_if<std::uint32_t>(&value);
    if (!v) throw Error(ErrorCode::TypeMismatch, "scalar metadata needs an integer value");
    bytes.resize(width_of(type));
    std::uint32_t x = *v;
    for (std::size_t i = bytes.size(); i-- > 0;) {
      bytes[i] = static_cast<std::uint8_t>(x);
      x >>= 8;
    }
  }
  auto it = meta_.find(name);
  if (it == meta_.end()) {
    meta_.emplace(std::string(name), MetaObject{type, std::move(bytes)});
    return;
  }
  if (it->second.type != type || it->second.bytes.size() != bytes.size()) {
    throw Error(ErrorCode::TypeMismatch, "metadata '" + std::string(name) +
                                             "' was declared " +
                                             std::string(to_string(it->second.type)) + "/" +
                                             std::to_string(it->second.bytes.size()));
  }
  it->second.bytes = std::move(bytes);
}

void Packet::erase_meta(std::string_view name) {
  auto it = meta_.find(name);
  if (it != meta_.end()) meta_.erase(it);
}

std::uint64_t Packet::read_prop(std::string_view name) const {
  if (name == "pkt_len") return len_;
  if (name == "ingress_port") return ingress_port_;
  if (name == "timestamp") return timestamp_;
  throw Error(ErrorCode::UnknownName, "no property '" + std::string(name) + "'");
}

void Packet::write_prop(std::string_view name, std::uint64_t) {
  throw Error(ErrorCode::PropertyWriteForbidden,
              "property '" + std::string(name) + "' is read-only");
}

void mark_layers(Packet& packet) {
  packet.clear_layers();
  const ByteView d = packet.data();
  if (d.size() < 14) {
    if (!d.empty()) packet.set_layer(Layer::Link, 0);
    return;
  }
  packet.set_layer(Layer::Link, 0);
  if (load_be16(d.data() + 12) != 0x0800) return;
  constexpr std::size_t kNet = 14;
  if (d.size() <= kNet) return;
  // The link header alone places NETWORK; a short IP header is left to
  // field access to report.
  packet.set_layer(Layer::Network, kNet);
  if (d.size() < kNet + 20) return;
  const std::uint8_t vihl = d[kNet];
  const std::size_t ihl = std::size_t{vihl & 0x0fu} * 4;
  if ((vihl >> 4) != 4 || ihl < 20 || d.size() < kNet + ihl) return;
  const std::uint8_t proto = d[kNet + 9];
  const std::size_t l4 = kNet + ihl;
  if (proto == 6) {
    if (l4 >= d.size()) return;
    packet.set_layer(Layer::Transport, l4);
    if (d.size() < l4 + 20) return;
    const std::size_t doff = std::size_t{static_cast<std::uint8_t>(d[l4 + 12] >> 4)} * 4;
    if (doff >= 20 && l4 + doff <= d.size()) packet.set_layer(Layer::App, l4 + doff);
  } else if (proto == 17) {
    if (l4 >= d.size()) return;
    packet.set_layer(Layer::Transport, l4);
    if (l4 + 8 <= d.size()) packet.set_layer(Layer::App, l4 + 8);
  }
}

}  // namespace sdm
