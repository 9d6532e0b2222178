#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "profwall/packet.hpp"
#include "profwall/profile.hpp"

namespace profwall {

// A host on the wire.
struct Host {
  MacAddr mac;
  IpAddr ip;
};

// Packet builders. Every result has gone through rebuild(), so its fields are
// exactly what dissect() reports for its bytes.
Packet make_tcp(Timestamp ts, const Host& src, const Host& dst, std::uint16_t sport, std::uint16_t dport,
                std::uint8_t flags = tcp_flags::kPsh | tcp_flags::kAck, Bytes payload = {});
Packet make_udp(Timestamp ts, const Host& src, const Host& dst, std::uint16_t sport, std::uint16_t dport,
                Bytes payload = {});
// Request: Ethernet broadcast with an all-zero target MAC. Reply: unicast.
Packet make_arp(Timestamp ts, ArpOp op, const Host& sender, const Host& target);
Packet make_dns_query(Timestamp ts, const Host& src, const Host& server, std::uint16_t sport, std::uint16_t id,
                      const std::string& name, std::uint16_t qtype = 1);
// Answers `name` with A/AAAA records for `addrs`.
Packet make_dns_response(Timestamp ts, const Host& server, const Host& dst, std::uint16_t dport, std::uint16_t id,
                         const std::string& name, const std::vector<IpAddr>& addrs);

// Concrete values for symbolic endpoints when turning a policy into a packet.
struct SynthHosts {
  DeviceInfo device;
  MacAddr phone_mac;
  IpAddr phone_v4;
  IpAddr phone_v6;
  MacAddr gateway_mac;
  IpAddr gateway_v4;
  IpAddr gateway_v6;
  IpAddr remote_v4;  // `any`
  IpAddr remote_v6;
  // Address a domain endpoint (or "*.suffix" pattern) resolves to.
  std::map<std::string, IpAddr> resolved;
};

// Defaults on the 192.168.1.0/24 LAN with gateway 192.168.1.1.
SynthHosts default_synth_hosts(const DeviceInfo& device);

// Builds a packet satisfying `spec` for `hosts.device`: literal values are
// used as given, symbols map to the hosts above, unconstrained fields get
// fixed defaults. A DNS response for a domain answers with its resolved
// address. Throws BadParams when a domain endpoint has no resolved address or
// a referent has no address of the needed IP version.
Packet synthesize(const MatchSpec& spec, const SynthHosts& hosts, Timestamp ts);

}  // namespace profwall
