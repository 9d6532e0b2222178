#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>

#include "profwall/net.hpp"
#include "profwall/profile.hpp"
#include "profwall/proto.hpp"
#include "profwall/time.hpp"

namespace profwall {

constexpr std::uint16_t kEthIpv4 = 0x0800;
constexpr std::uint16_t kEthArp = 0x0806;
constexpr std::uint16_t kEthIpv6 = 0x86dd;
constexpr std::uint8_t kProtoIcmp = 1;
constexpr std::uint8_t kProtoIgmp = 2;
constexpr std::uint8_t kProtoTcp = 6;
constexpr std::uint8_t kProtoUdp = 17;
constexpr std::uint8_t kProtoIcmpv6 = 58;
constexpr int kLinkTypeEthernet = 1;

struct EthernetHeader {
  MacAddr dst;
  MacAddr src;
  std::uint16_t eth_type = kEthIpv4;
  bool operator==(const EthernetHeader&) const = default;
};

struct ArpLayer {
  std::uint16_t htype = 1;
  std::uint16_t ptype = kEthIpv4;
  std::uint16_t op = 1;
  MacAddr sender_hw;
  IpAddr sender_ip;
  MacAddr target_hw;
  IpAddr target_ip;
  bool operator==(const ArpLayer&) const = default;
};

// IPv4 or IPv6 header. Version-specific fields are ignored for the other version.
struct IpLayer {
  int version = 4;
  IpAddr src;
  IpAddr dst;
  std::uint8_t protocol = 0;  // IPv6: next header
  std::uint8_t ttl = 64;      // IPv6: hop limit
  std::uint8_t tos = 0;       // IPv6: traffic class
  std::uint16_t total_length = 0;
  std::uint16_t id = 0;
  std::uint16_t flags_fragment = 0;
  std::uint16_t checksum = 0;
  Bytes options;
  std::uint32_t flow_label = 0;
  std::uint16_t payload_length = 0;

  bool is_fragment() const { return version == 4 && (flags_fragment & 0x3fff) != 0; }
  bool operator==(const IpLayer&) const = default;
};

struct IcmpLayer {
  std::uint8_t type = 0;
  std::uint8_t code = 0;
  std::uint16_t checksum = 0;
  bool operator==(const IcmpLayer&) const = default;
};

namespace tcp_flags {
constexpr std::uint8_t kFin = 0x01;
constexpr std::uint8_t kSyn = 0x02;
constexpr std::uint8_t kRst = 0x04;
constexpr std::uint8_t kPsh = 0x08;
constexpr std::uint8_t kAck = 0x10;
}  // namespace tcp_flags

struct TransportLayer {
  TransportProto proto = TransportProto::Tcp;
  std::uint16_t src_port = 0;
  std::uint16_t dst_port = 0;
  std::uint16_t checksum = 0;
  // TCP
  std::uint32_t seq = 0;
  std::uint32_t ack = 0;
  std::uint16_t offset_flags = 0x5000;  // data offset (4 bits), reserved, flags
  std::uint16_t window = 0;
  std::uint16_t urgent = 0;
  Bytes options;
  // UDP
  std::uint16_t length = 0;

  std::uint8_t flags() const { return static_cast<std::uint8_t>(offset_flags & 0xff); }
  bool operator==(const TransportLayer&) const = default;
};

using AppMessage = std::variant<DnsMessage, DhcpMessage, HttpMessage, SsdpMessage, CoapMessage, IgmpMessage>;

struct AppLayer {
  AppProto proto = AppProto::Dns;
  AppMessage message;
  bool operator==(const AppLayer&) const = default;
};

// A timestamped frame with its parsed layers. `payload` holds the bytes after
// the deepest parsed header (the application message when `app` is set);
// `trailer` holds link padding after the network datagram.
struct Packet {
  Timestamp ts;
  std::optional<std::string> iface;
  EthernetHeader eth;
  std::optional<ArpLayer> arp;
  std::optional<IpLayer> ip;
  std::optional<IcmpLayer> icmp;
  std::optional<TransportLayer> transport;
  std::optional<AppLayer> app;
  Bytes payload;
  Bytes trailer;
  Bytes raw;

  // Parsed fields only: `raw` is excluded.
  bool same_fields(const Packet& other) const;
};

// Deepest-possible parse. Throws FormatError only when the Ethernet header is truncated.
Packet dissect(std::span<const std::uint8_t> raw, int linktype = kLinkTypeEthernet, Timestamp ts = {});

// Stored fields written verbatim; an unmodified dissected packet yields its raw bytes.
Bytes serialize(const Packet& pkt);

// Re-encodes `app` into `payload`.
void encode_app(Packet& pkt);

// Recomputes lengths, TCP data offset and checksums from the stored fields.
void finalize(Packet& pkt);

// encode_app + finalize + serialize, then re-dissects so the result is exactly
// what a reader of the bytes would see. Keeps ts/iface.
Packet rebuild(const Packet& pkt);

// Highest parsed layer: "app", "transport", "icmp", "ip", "arp" or "ethernet".
std::string_view highest_layer(const Packet& pkt);

// The DNS or mDNS message carried, if any.
const DnsMessage* dns_message(const Packet& pkt);

}  // namespace profwall
