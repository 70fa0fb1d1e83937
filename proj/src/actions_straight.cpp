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

#include <array>
#include <tuple>
#include <utility>

#include "catalog.hpp"
#include "sdm/checksum.hpp"
#include "sdm/cipher.hpp"
#include "sdm/error.hpp"
#include "sdm/headers.hpp"

namespace sdm::detail {

namespace {

constexpr auto kNet = Region::Network;
constexpr auto U8 = ValueType::U8;
constexpr auto U16 = ValueType::U16;
constexpr auto U32 = ValueType::U32;

void fix_ip_word(Packet& p, std::size_t offset, std::uint16_t old_word, std::uint16_t new_word) {
  const auto csum = static_cast<std::uint16_t>(p.read_uint(kNet, 10, U16));
  p.write_uint(kNet, offset, U16, new_word);
  p.write_uint(kNet, 10, U16, checksum_adjust(csum, old_word, new_word));
}

class DecTTL final : public Action {
 public:
  DecTTL(const ActionClass& cls, const ActionConfig& cfg) : Action(cls, cfg.instance_name, 1, 1) {}
  std::optional<std::size_t> process(Packet& p, ActionContext& ctx) override {
    const auto word = static_cast<std::uint16_t>(p.read_uint(kNet, 8, U16));
    const unsigned ttl = word >> 8;
    if (ttl <= 1) {
      ctx.emit("ttl_expired", Bytes{static_cast<std::uint8_t>(ttl)});
      return std::nullopt;
    }
    fix_ip_word(p, 8, word, static_cast<std::uint16_t>(word - 0x100));
    return 0;
  }
};

class SetECN final : public Action {
 public:
  SetECN(const ActionClass& cls, const ActionConfig& cfg) : Action(cls, cfg.instance_name, 1, 1) {
    store_attribute("ECN", std::uint64_t{3});
    if (!cfg.args.empty()) bind_argument("ECN", cfg.args[0], cfg.bindings);
  }
  std::optional<std::size_t> process(Packet& p, ActionContext&) override {
    const auto ecn = static_cast<std::uint16_t>(require_uint("ECN"));
    const auto word = static_cast<std::uint16_t>(p.read_uint(kNet, 0, U16));
    const auto next = static_cast<std::uint16_t>((word & ~0x3u) | ecn);
    if (next != word) fix_ip_word(p, 0, word, next);
    return 0;
  }
};

class DecapHeader final : public Action {
 public:
  DecapHeader(const ActionClass& cls, const ActionConfig& cfg) : Action(cls, cfg.instance_name, 1, 1) {
    bind_argument("LENGTH", cfg.args[0], cfg.bindings);
  }
  std::optional<std::size_t> process(Packet& p, ActionContext&) override {
    p.decap_head(require_uint("LENGTH"));
    return 0;
  }
};

class EncapHeader final : public Action {
 public:
  EncapHeader(const ActionClass& cls, const ActionConfig& cfg) : Action(cls, cfg.instance_name, 1, 1) {
    bind_argument("MAC_DEST", cfg.args[0], cfg.bindings);
    bind_argument("MAC_SRC", cfg.args[1], cfg.bindings);
    if (cfg.args[2] == "PROTO_IP") {
      store_attribute("ETHERTYPE", std::uint64_t{kEtherTypeIpv4});
    } else {
      bind_argument("ETHERTYPE", cfg.args[2], cfg.bindings);
    }
  }
  std::optional<std::size_t> process(Packet& p, ActionContext&) override {
    const Bytes& dst = require_bytes("MAC_DEST");
    const Bytes& src = require_bytes("MAC_SRC");
    const auto type = static_cast<std::uint16_t>(require_uint("ETHERTYPE"));
    auto hdr = p.push_head(14);
    std::copy(dst.begin(), dst.end(), hdr.begin());
    std::copy(src.begin(), src.end(), hdr.begin() + 6);
    store_be16(hdr.data() + 12, type);
    p.set_layer(Layer::Link, 0);
    return 0;
  }
};

// ESP header (SPI, sequence) in front, trailer (padding, pad length, next
// header = IPv4) behind, sized so the protected part fills whole blocks.
class ESPEncap final : public Action {
 public:
  ESPEncap(const ActionClass& cls, const ActionConfig& cfg) : Action(cls, cfg.instance_name, 1, 1) {
    store_attribute("SEQ", std::uint64_t{0});
    store_attribute("BLOCK", std::uint64_t{16});
  }
  std::optional<std::size_t> process(Packet& p, ActionContext&) override {
    const auto spi = static_cast<std::uint32_t>(require_uint("SPI"));
    require_uint("RPL");
    const std::uint64_t block = require_uint("BLOCK");
    const std::uint64_t seq = (require_uint("SEQ") + 1) & 0xffffffffu;
    const std::size_t used = (p.size() + 2) % block;
    const std::size_t pad = used == 0 ? 0 : block - used;
    Bytes trailer(pad + 2);
    for (std::size_t i = 0; i < pad; ++i) trailer[i] = static_cast<std::uint8_t>(i + 1);
    trailer[pad] = static_cast<std::uint8_t>(pad);
    trailer[pad + 1] = 4;
    p.pad_tail(trailer);
    auto hdr = p.push_head(8);
    store_be32(hdr.data(), spi);
    store_be32(hdr.data() + 4, static_cast<std::uint32_t>(seq));
    store_attribute("SEQ", seq);
    return 0;
  }
};

class Cipher final : public Action {
 public:
  Cipher(const ActionClass& cls, const ActionConfig& cfg, std::string default_mode)
      : Action(cls, cfg.instance_name, 1, 1) {
    const std::string mode = cfg.args.empty() ? default_mode : cfg.args[0];
    cipher_ = make_cipher(mode);
    store_attribute("MODE", mode);
    store_attribute("OFFSET", std::uint64_t{8});
    if (cfg.args.size() > 1) bind_argument("KEY", cfg.args[1], cfg.bindings);
  }
  std::optional<std::size_t> process(Packet& p, ActionContext&) override {
    const Bytes& key = require_bytes("KEY");
    const std::uint64_t offset = require_uint("OFFSET");
    if (offset > p.size()) throw Error(ErrorCode::OutOfBounds, "cipher offset beyond payload");
    cipher_->encrypt(p.mutable_data().subspan(offset), key);
    return 0;
  }

 private:
  std::unique_ptr<BlockCipher> cipher_;
};

class IPsecEncap final : public Action {
 public:
  IPsecEncap(const ActionClass& cls, const ActionConfig& cfg) : Action(cls, cfg.instance_name, 1, 1) {
    store_attribute("TTL", std::uint64_t{64});
  }
  std::optional<std::size_t> process(Packet& p, ActionContext&) override {
    const std::size_t inner = p.size();
    if (inner + 20 > 0xffff) throw Error(ErrorCode::OutOfBounds, "tunnel packet exceeds 64 KiB");
    auto h = p.push_head(20);
    std::fill(h.begin(), h.end(), 0);
    h[0] = 0x45;
    store_be16(h.data() + 2, static_cast<std::uint16_t>(inner + 20));
    h[8] = static_cast<std::uint8_t>(require_uint("TTL"));
    h[9] = kProtoEsp;
    store_be16(h.data() + 10, internet_checksum(ByteView(h.data(), 20)));
    p.clear_layers();
    p.set_layer(Layer::Network, 0);
    return 0;
  }
};

class ChangeIP final : public Action {
 public:
  ChangeIP(const ActionClass& cls, const ActionConfig& cfg, std::string attr, std::size_t offset)
      : Action(cls, cfg.instance_name, 1, 1), attr_(std::move(attr)), offset_(offset) {
    bind_argument(attr_, cfg.args[0], cfg.bindings);
  }
  std::optional<std::size_t> process(Packet& p, ActionContext&) override {
    p.write_uint(kNet, offset_, U32, static_cast<std::uint32_t>(require_uint(attr_)));
    return 0;
  }

 private:
  std::string attr_;
  std::size_t offset_;
};

class SetIPChecksum final : public Action {
 public:
  SetIPChecksum(const ActionClass& cls, const ActionConfig& cfg) : Action(cls, cfg.instance_name, 1, 1) {}
  std::optional<std::size_t> process(Packet& p, ActionContext&) override {
    set_ipv4_checksum(p);
    return 0;
  }
};

class SetTCPChecksum final : public Action {
 public:
  SetTCPChecksum(const ActionClass& cls, const ActionConfig& cfg) : Action(cls, cfg.instance_name, 1, 1) {}
  std::optional<std::size_t> process(Packet& p, ActionContext&) override {
    if (p.read_uint(kNet, 9, U8) == kProtoTcp) set_tcp_checksum(p);
    return 0;
  }
};

class Pad final : public Action {
 public:
  Pad(const ActionClass& cls, const ActionConfig& cfg) : Action(cls, cfg.instance_name, 1, 1) {
    bind_argument("LENGTH", cfg.args[0], cfg.bindings);
  }
  std::optional<std::size_t> process(Packet& p, ActionContext&) override {
    p.pad_tail(Bytes(require_uint("LENGTH"), 0));
    return 0;
  }
};

class Unpad final : public Action {
 public:
  Unpad(const ActionClass& cls, const ActionConfig& cfg) : Action(cls, cfg.instance_name, 1, 1) {
    bind_argument("LENGTH", cfg.args[0], cfg.bindings);
  }
  std::optional<std::size_t> process(Packet& p, ActionContext&) override {
    p.unpad_tail(require_uint("LENGTH"));
    return 0;
  }
};

class PacketCounter final : public Action {
 public:
  PacketCounter(const ActionClass& cls, const ActionConfig& cfg) : Action(cls, cfg.instance_name, 1, 1) {
    store_attribute("count", std::uint64_t{0});
  }
  std::optional<std::size_t> process(Packet&, ActionContext&) override {
    store_attribute("count", require_uint("count") + 1);
    return 0;
  }
};

class TCPSyncNotifier final : public Action {
 public:
  TCPSyncNotifier(const ActionClass& cls, const ActionConfig& cfg) : Action(cls, cfg.instance_name, 1, 1) {}
  std::optional<std::size_t> process(Packet& p, ActionContext& ctx) override {
    auto t = extract_five_tuple(p);
    if (t && t->proto == kProtoTcp && p.layer(Layer::Transport)) {
      const auto flags = p.read_uint(Region::Transport, 13, U8);
      if ((flags & kTcpSyn) && !(flags & kTcpAck)) ctx.emit("tcp_syn", t->to_bytes());
    }
    return 0;
  }
};

template <typename T>
ActionClass straight(std::string name, std::vector<std::string> params, std::vector<AttrSpec> attrs,
                     std::vector<std::string> events = {}) {
  ActionClass c;
  c.name = std::move(name);
  c.category = Category::OneToOne;
  c.min_args = c.max_args = params.size();
  c.params = std::move(params);
  c.attributes = std::move(attrs);
  c.events = std::move(events);
  c.factory = factory_of<T>();
  return c;
}

}  // namespace

void add_straight_actions(Registry& reg) {
  reg.add(straight<DecTTL>("DecTTL", {}, {}, {"ttl_expired"}));
  {
    auto c = straight<SetECN>("SetECN", {"ECN"}, {uint_attr("ECN", 2)});
    c.min_args = 0;
    reg.add(std::move(c));
  }
  reg.add(straight<DecapHeader>("DecapHeader", {"LENGTH"}, {uint_attr("LENGTH", 16)}));
  reg.add(straight<EncapHeader>("EncapHeader", {"MAC_DEST", "MAC_SRC", "ETHERTYPE"},
                                {attr("MAC_DEST", AttrKind::Mac), attr("MAC_SRC", AttrKind::Mac),
                                 uint_attr("ETHERTYPE", 16)}));
  reg.add(straight<ESPEncap>("ESPEncap", {},
                             {uint_attr("SPI", 32, true), uint_attr("RPL", 32, true),
                              uint_attr("SEQ", 32, true), uint_attr("BLOCK", 8)}));
  for (const auto& [name, mode] : {std::pair{"Aes", "aes"}, std::pair{"Cipher", "xor"}}) {
    ActionClass c;
    c.name = name;
    c.category = Category::OneToOne;
    c.params = {"MODE", "KEY"};
    c.min_args = 0;
    c.max_args = 2;
    c.attributes = {attr("MODE", AttrKind::Text), attr("KEY", AttrKind::Bytes, true),
                    uint_attr("OFFSET", 16)};
    std::string def = mode;
    c.factory = [def](const ActionClass& cls, const ActionConfig& cfg) -> std::unique_ptr<Action> {
      return std::make_unique<Cipher>(cls, cfg, def);
    };
    reg.add(std::move(c));
  }
  reg.add(straight<IPsecEncap>("IPsecEncap", {}, {uint_attr("TTL", 8)}));
  for (const auto& [name, field, off] :
       {std::tuple{"ChangeSrcIP", "IP_SRC", 12}, std::tuple{"ChangeDstIP", "IP_DST", 16}}) {
    auto c = straight<SetIPChecksum>(name, {field}, {attr(field, AttrKind::Ipv4)});
    std::string f = field;
    std::size_t o = static_cast<std::size_t>(off);
    c.factory = [f, o](const ActionClass& cls, const ActionConfig& cfg) -> std::unique_ptr<Action> {
      return std::make_unique<ChangeIP>(cls, cfg, f, o);
    };
    reg.add(std::move(c));
  }
  reg.add(straight<SetIPChecksum>("SetIPChecksum", {}, {}));
  reg.add(straight<SetTCPChecksum>("SetTCPChecksum", {}, {}));
  reg.add(straight<Pad>("Pad", {"LENGTH"}, {uint_attr("LENGTH", 16)}));
  reg.add(straight<Unpad>("Unpad", {"LENGTH"}, {uint_attr("LENGTH", 16)}));
  reg.add(straight<PacketCounter>("PacketCounter", {}, {uint_attr("count", 64, true)}));
  reg.add(straight<TCPSyncNotifier>("TCPSyncNotifier", {}, {}, {"tcp_syn"}));
}

}  // namespace sdm::detail
