#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "profwall/errors.hpp"
#include "profwall/net.hpp"
#include "profwall/time.hpp"

namespace profwall {

struct DeviceInfo {
  std::string name;
  MacAddr mac;
  std::optional<IpAddr> ipv4;
  std::optional<IpAddr> ipv6;

  bool has_ip(const IpAddr& addr) const { return ipv4 == addr || ipv6 == addr; }
  bool operator==(const DeviceInfo&) const = default;
};

// Hardware address in a policy: a literal, the profiled device itself, or anything.
struct MacExpr {
  enum class Kind : std::uint8_t { Literal, Self, Any };
  Kind kind = Kind::Any;
  MacAddr addr;

  static std::optional<MacExpr> parse(std::string_view text);
  std::string str() const;
  bool operator==(const MacExpr&) const = default;
};

// Network endpoint in a policy. Symbolic referents are resolved against the
// engine configuration at match time.
struct EndpointExpr {
  enum class Kind : std::uint8_t { Literal, Domain, Self, Local, Gateway, Phone, Any };
  Kind kind = Kind::Any;
  IpAddr addr;
  std::string domain;  // normalized: lowercase, no trailing dot

  static std::optional<EndpointExpr> parse(std::string_view text);
  static EndpointExpr literal(const IpAddr& a) { return {Kind::Literal, a, {}}; }
  static EndpointExpr of_domain(std::string_view name);
  static EndpointExpr symbol(Kind k) { return {k, {}, {}}; }
  std::string str() const;
  bool operator==(const EndpointExpr&) const = default;
};

struct PortRange {
  std::uint16_t lo = 0;
  std::uint16_t hi = 0;

  static std::optional<PortRange> parse(std::string_view text);
  static PortRange single(std::uint16_t p) { return {p, p}; }
  bool contains(std::uint16_t port) const { return port >= lo && port <= hi; }
  std::string str() const;
  bool operator==(const PortRange&) const = default;
};

enum class ArpOp : std::uint16_t { Request = 1, Reply = 2 };
enum class DnsQr : std::uint8_t { Query, Response };
enum class TransportProto : std::uint8_t { Tcp, Udp };
enum class CoapType : std::uint8_t { Con = 0, Non = 1, Ack = 2, Rst = 3 };
enum class CoapMethod : std::uint8_t { Get = 1, Post = 2, Put = 3, Delete = 4 };
enum class AppProto : std::uint8_t { Dns, Mdns, Dhcp, Http, Ssdp, Coap, Igmp };

enum class IcmpKind : std::uint8_t {
  EchoReply,
  EchoRequest,
  DestinationUnreachable,
  TimeExceeded,
  ParameterProblem,
  Redirect,
  RouterSolicitation,
  RouterAdvertisement,
  NeighborSolicitation,
  NeighborAdvertisement,
};

struct LinkMatch {
  std::optional<MacExpr> src;
  std::optional<MacExpr> dst;
  std::optional<std::uint16_t> eth_type;
  bool operator==(const LinkMatch&) const = default;
};

struct ArpMatch {
  std::optional<ArpOp> op;
  std::optional<MacExpr> sender_hw;
  std::optional<EndpointExpr> sender_ip;
  std::optional<MacExpr> target_hw;
  std::optional<EndpointExpr> target_ip;
  bool operator==(const ArpMatch&) const = default;
};

struct IpMatch {
  int version = 4;
  std::optional<EndpointExpr> src;
  std::optional<EndpointExpr> dst;
  bool operator==(const IpMatch&) const = default;
};

struct IcmpMatch {
  std::optional<IcmpKind> type;
  bool operator==(const IcmpMatch&) const = default;
};

struct TransportMatch {
  TransportProto proto = TransportProto::Tcp;
  std::optional<PortRange> src_port;
  std::optional<PortRange> dst_port;
  bool operator==(const TransportMatch&) const = default;
};

struct DnsMatch {
  std::optional<DnsQr> qr;
  std::optional<std::uint16_t> qtype;
  std::optional<std::string> domain_name;
  bool operator==(const DnsMatch&) const = default;
};

struct DhcpMatch {
  std::optional<std::uint8_t> message_type;
  bool operator==(const DhcpMatch&) const = default;
};

// `response` distinguishes requests from responses; method/uri constrain the
// request line and are not checked against responses.
struct HttpMatch {
  std::optional<bool> response;
  std::optional<std::string> method;
  std::optional<std::string> uri_prefix;
  bool operator==(const HttpMatch&) const = default;
};

struct SsdpMatch {
  std::optional<bool> response;
  std::optional<std::string> method;
  std::optional<std::string> st;
  bool operator==(const SsdpMatch&) const = default;
};

struct CoapMatch {
  std::optional<bool> response;
  std::optional<CoapType> type;
  std::optional<CoapMethod> method;
  std::optional<std::string> uri_path;
  bool operator==(const CoapMatch&) const = default;
};

struct IgmpMatch {
  std::optional<std::uint8_t> type;
  std::optional<IpAddr> group;
  bool operator==(const IgmpMatch&) const = default;
};

struct AppMatch {
  AppProto proto = AppProto::Dns;
  std::variant<DnsMatch, DhcpMatch, HttpMatch, SsdpMatch, CoapMatch, IgmpMatch> spec;
  bool operator==(const AppMatch&) const = default;
};

struct MatchSpec {
  std::optional<LinkMatch> link;
  std::optional<ArpMatch> arp;
  std::optional<IpMatch> ip;
  std::optional<IcmpMatch> icmp;
  std::optional<TransportMatch> transport;
  std::optional<AppMatch> app;

  bool empty() const { return !link && !arp && !ip && !icmp && !transport && !app; }
  bool operator==(const MatchSpec&) const = default;
};

// "<packets>/<unit>" with a decimal packet count: packets = numerator / denominator.
struct Rate {
  enum class Unit : std::uint8_t { Second, Minute, Hour, Day };
  std::uint64_t numerator = 1;
  std::uint64_t denominator = 1;  // power of ten, minimal
  Unit unit = Unit::Second;

  static std::optional<Rate> parse(std::string_view text);
  Duration unit_duration() const;
  // One token's worth of time: the bucket gains `numerator` tokens every `period()`.
  Duration period() const { return unit_duration() * static_cast<std::int64_t>(denominator); }
  double per_second() const;
  std::string str() const;
  bool operator==(const Rate&) const = default;
};

struct RateSpec {
  Rate rate;
  std::optional<std::uint64_t> burst;

  // Bucket capacity in packets: the burst, or ceil(rate per second) when unset.
  std::uint64_t capacity() const;
  std::string str() const;
  static std::optional<RateSpec> parse(std::string_view text);
  bool operator==(const RateSpec&) const = default;
};

struct Stats {
  std::optional<RateSpec> rate;
  std::optional<std::uint64_t> max_packets;
  std::optional<Duration> max_duration;

  bool empty() const { return !rate && !max_packets && !max_duration; }
  bool operator==(const Stats&) const = default;
};

enum class PolicyKind : std::uint8_t { OneOff, Transient, Periodic };

struct Policy {
  std::string name;
  PolicyKind kind = PolicyKind::OneOff;
  bool bidirectional = false;
  MatchSpec match;
  std::optional<Stats> stats;

  const RateSpec* rate() const { return stats && stats->rate ? &*stats->rate : nullptr; }
  bool operator==(const Policy&) const = default;
};

struct Interaction {
  std::string name;
  std::vector<Policy> policies;
  bool operator==(const Interaction&) const = default;
};

struct Profile {
  DeviceInfo device_info;
  std::vector<Interaction> interactions;
  std::map<std::string, std::string> patterns;

  std::size_t policy_count() const;
  const Interaction* find(std::string_view interaction) const;
  bool operator==(const Profile&) const = default;
};

// Returns one diagnostic per violated invariant, in document order.
std::vector<Diagnostic> validate_profile(const Profile& profile);

// Canonical profile text, fully inlined. Parsing it yields an equal Profile.
std::string to_yaml(const Profile& profile);

std::string_view to_string(PolicyKind kind);
std::string_view to_string(AppProto proto);
std::string_view to_string(ArpOp op);
std::string_view to_string(DnsQr qr);
std::string_view to_string(TransportProto proto);
std::string_view to_string(CoapType type);
std::string_view to_string(CoapMethod method);
std::string_view to_string(IcmpKind kind);

std::optional<PolicyKind> parse_policy_kind(std::string_view text);
std::optional<IcmpKind> parse_icmp_kind(std::string_view text);
std::optional<CoapType> parse_coap_type(std::string_view text);
std::optional<CoapMethod> parse_coap_method(std::string_view text);
// ICMP type code of `kind` for IPv4 (ICMP) or IPv6 (ICMPv6).
std::optional<std::uint8_t> icmp_code_for(IcmpKind kind, int ip_version);

// DNS record types by mnemonic (A, AAAA, PTR, ...) or decimal.
std::optional<std::uint16_t> parse_dns_type(std::string_view text);
std::string dns_type_name(std::uint16_t type);
// DHCP message types by name (discover, offer, ...) or decimal.
std::optional<std::uint8_t> parse_dhcp_type(std::string_view text);
std::string dhcp_type_name(std::uint8_t type);
// IGMP message types by name (membership-query, membership-report, leave-group, ...).
std::optional<std::uint8_t> parse_igmp_type(std::string_view text);
std::string igmp_type_name(std::uint8_t type);

std::string normalize_domain(std::string_view name);

}  // namespace profwall
