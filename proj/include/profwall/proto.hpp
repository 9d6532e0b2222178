#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "profwall/net.hpp"

namespace profwall {

// Application-layer messages. decode_* return nullopt for bytes that are not a
// well-formed message; encode_* produce canonical bytes (no DNS name
// compression, CRLF line endings) so that decode(encode(m)) == m.

struct DnsQuestion {
  std::string name;  // dotted, no trailing dot
  std::uint16_t qtype = 1;
  std::uint16_t qclass = 1;
  bool operator==(const DnsQuestion&) const = default;
};

struct DnsRecord {
  std::string name;
  std::uint16_t type = 1;
  std::uint16_t rclass = 1;
  std::uint32_t ttl = 0;
  std::optional<IpAddr> address;     // A / AAAA
  std::optional<std::string> target;  // CNAME / PTR / NS
  Bytes rdata;                        // other types
  bool operator==(const DnsRecord&) const = default;
};

struct DnsMessage {
  std::uint16_t id = 0;
  std::uint16_t flags = 0;
  std::vector<DnsQuestion> questions;
  std::vector<DnsRecord> answers;
  std::vector<DnsRecord> authorities;
  std::vector<DnsRecord> additionals;

  bool is_response() const { return (flags & 0x8000) != 0; }
  void set_response(bool r) { flags = static_cast<std::uint16_t>(r ? (flags | 0x8000) : (flags & 0x7fff)); }
  bool operator==(const DnsMessage&) const = default;
};

struct DhcpMessage {
  std::uint8_t op = 1;
  std::uint8_t htype = 1;
  std::uint8_t hlen = 6;
  std::uint8_t hops = 0;
  std::uint32_t xid = 0;
  std::uint16_t secs = 0;
  std::uint16_t flags = 0;
  std::array<std::uint8_t, 4> ciaddr{};
  std::array<std::uint8_t, 4> yiaddr{};
  std::array<std::uint8_t, 4> siaddr{};
  std::array<std::uint8_t, 4> giaddr{};
  std::array<std::uint8_t, 16> chaddr{};
  std::array<std::uint8_t, 64> sname{};
  std::array<std::uint8_t, 128> file{};
  std::vector<std::pair<std::uint8_t, Bytes>> options;  // without pad/end

  std::optional<std::uint8_t> message_type() const;
  void set_message_type(std::uint8_t type);
  bool operator==(const DhcpMessage&) const = default;
};

// Start line plus headers; shared by HTTP and SSDP (HTTP over UDP).
struct TextMessage {
  bool response = false;
  std::string method;  // requests
  std::string uri;     // requests
  std::string version = "HTTP/1.1";
  int status = 0;      // responses
  std::string reason;  // responses
  std::vector<std::pair<std::string, std::string>> headers;
  Bytes body;

  // Case-insensitive header lookup.
  std::optional<std::string> header(std::string_view name) const;
  bool operator==(const TextMessage&) const = default;
};

struct HttpMessage : TextMessage {
  bool operator==(const HttpMessage&) const = default;
};

struct SsdpMessage : TextMessage {
  // Search target: the ST header, or NT for NOTIFY announcements.
  std::optional<std::string> search_target() const;
  bool operator==(const SsdpMessage&) const = default;
};

struct CoapMessage {
  std::uint8_t type = 0;  // 0 CON, 1 NON, 2 ACK, 3 RST
  std::uint8_t code = 0;  // class << 5 | detail
  std::uint16_t message_id = 0;
  Bytes token;
  std::vector<std::pair<std::uint16_t, Bytes>> options;  // ascending option number
  Bytes payload;

  bool is_response() const { return (code >> 5) >= 2; }
  // Request method code 1..4, or nullopt for responses and empty messages.
  std::optional<std::uint8_t> method() const;
  // Uri-Path options joined with '/'.
  std::string uri_path() const;
  void set_uri_path(std::string_view path);
  bool operator==(const CoapMessage&) const = default;
};

struct IgmpMessage {
  std::uint8_t type = 0x16;
  std::uint8_t max_resp = 0;
  std::uint16_t checksum = 0;
  IpAddr group;
  Bytes extra;  // IGMPv3 bytes after the group field
  bool operator==(const IgmpMessage&) const = default;
};

std::optional<DnsMessage> decode_dns(std::span<const std::uint8_t> bytes);
Bytes encode_dns(const DnsMessage& msg);
std::optional<DhcpMessage> decode_dhcp(std::span<const std::uint8_t> bytes);
Bytes encode_dhcp(const DhcpMessage& msg);
std::optional<TextMessage> decode_text(std::span<const std::uint8_t> bytes);
Bytes encode_text(const TextMessage& msg);
std::optional<CoapMessage> decode_coap(std::span<const std::uint8_t> bytes);
Bytes encode_coap(const CoapMessage& msg);
std::optional<IgmpMessage> decode_igmp(std::span<const std::uint8_t> bytes);
// Recomputes the checksum.
Bytes encode_igmp(const IgmpMessage& msg);

// True when `bytes` begins with an HTTP request method or "HTTP/".
bool looks_like_http(std::span<const std::uint8_t> bytes);

// Internet checksum (RFC 1071) over `bytes`, continuing from `sum`.
std::uint32_t checksum_add(std::uint32_t sum, std::span<const std::uint8_t> bytes);
std::uint16_t checksum_fold(std::uint32_t sum);

}  // namespace profwall
