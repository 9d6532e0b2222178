#include "profwall/packet.hpp"

#include "profwall/errors.hpp"

namespace profwall {

namespace {

using Span = std::span<const std::uint8_t>;

std::uint16_t rd16(Span s, std::size_t at) { return static_cast<std::uint16_t>(s[at] << 8 | s[at + 1]); }

std::uint32_t rd32(Span s, std::size_t at) {
  return static_cast<std::uint32_t>(rd16(s, at)) << 16 | rd16(s, at + 2);
}

MacAddr rd_mac(Span s, std::size_t at) {
  MacAddr m;
  for (std::size_t i = 0; i < 6; ++i) m.octets[i] = s[at + i];
  return m;
}

void put16(Bytes& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

void put32(Bytes& out, std::uint32_t v) {
  put16(out, static_cast<std::uint16_t>(v >> 16));
  put16(out, static_cast<std::uint16_t>(v));
}

void append(Bytes& out, Span s) { out.insert(out.end(), s.begin(), s.end()); }

void put_ip(Bytes& out, const IpAddr& a, int version) {
  if (a.version() == version) {
    append(out, a.bytes());
  } else {
    out.insert(out.end(), version == 4 ? 4 : 16, 0);
  }
}

bool either_port(const TransportLayer& t, std::uint16_t port) { return t.src_port == port || t.dst_port == port; }

void classify(Packet& pkt) {
  const auto& t = *pkt.transport;
  Span body = pkt.payload;
  if (body.empty()) return;
  if (t.proto == TransportProto::Udp) {
    if (either_port(t, 53) || either_port(t, 5353)) {
      if (auto m = decode_dns(body)) {
        pkt.app = AppLayer{either_port(t, 53) ? AppProto::Dns : AppProto::Mdns, std::move(*m)};
      }
    } else if (either_port(t, 67) || either_port(t, 68)) {
      if (auto m = decode_dhcp(body)) pkt.app = AppLayer{AppProto::Dhcp, std::move(*m)};
    } else if (either_port(t, 5683)) {
      if (auto m = decode_coap(body)) pkt.app = AppLayer{AppProto::Coap, std::move(*m)};
    } else if (either_port(t, 1900)) {
      if (auto m = decode_text(body)) pkt.app = AppLayer{AppProto::Ssdp, SsdpMessage{std::move(*m)}};
    }
    return;
  }
  if (either_port(t, 80) || looks_like_http(body)) {
    if (auto m = decode_text(body)) pkt.app = AppLayer{AppProto::Http, HttpMessage{std::move(*m)}};
  }
}

void dissect_l4(Packet& pkt, Span body) {
  const IpLayer& ip = *pkt.ip;
  std::uint8_t proto = ip.protocol;
  if ((ip.version == 4 && proto == kProtoIcmp) || (ip.version == 6 && proto == kProtoIcmpv6)) {
    if (body.size() >= 4) {
      pkt.icmp = IcmpLayer{body[0], body[1], rd16(body, 2)};
      body = body.subspan(4);
    }
  } else if (ip.version == 4 && proto == kProtoIgmp) {
    if (auto m = decode_igmp(body)) pkt.app = AppLayer{AppProto::Igmp, std::move(*m)};
  } else if (proto == kProtoTcp) {
    std::size_t off = body.size() >= 20 ? static_cast<std::size_t>(body[12] >> 4) * 4 : 0;
    if (off >= 20 && off <= body.size()) {
      TransportLayer t;
      t.proto = TransportProto::Tcp;
      t.src_port = rd16(body, 0);
      t.dst_port = rd16(body, 2);
      t.seq = rd32(body, 4);
      t.ack = rd32(body, 8);
      t.offset_flags = rd16(body, 12);
      t.window = rd16(body, 14);
      t.checksum = rd16(body, 16);
      t.urgent = rd16(body, 18);
      t.options.assign(body.begin() + 20, body.begin() + static_cast<std::ptrdiff_t>(off));
      pkt.transport = std::move(t);
      body = body.subspan(off);
    }
  } else if (proto == kProtoUdp) {
    if (body.size() >= 8) {
      TransportLayer t;
      t.proto = TransportProto::Udp;
      t.src_port = rd16(body, 0);
      t.dst_port = rd16(body, 2);
      t.length = rd16(body, 4);
      t.checksum = rd16(body, 6);
      pkt.transport = std::move(t);
      body = body.subspan(8);
    }
  }
  pkt.payload.assign(body.begin(), body.end());
  if (pkt.transport) classify(pkt);
}

void dissect_ipv4(Packet& pkt, Span rest) {
  if (rest.size() < 20 || (rest[0] >> 4) != 4) {
    pkt.payload.assign(rest.begin(), rest.end());
    return;
  }
  std::size_t hlen = static_cast<std::size_t>(rest[0] & 0xf) * 4;
  if (hlen < 20 || hlen > rest.size()) {
    pkt.payload.assign(rest.begin(), rest.end());
    return;
  }
  IpLayer ip;
  ip.version = 4;
  ip.tos = rest[1];
  ip.total_length = rd16(rest, 2);
  ip.id = rd16(rest, 4);
  ip.flags_fragment = rd16(rest, 6);
  ip.ttl = rest[8];
  ip.protocol = rest[9];
  ip.checksum = rd16(rest, 10);
  ip.src = *IpAddr::from_bytes(rest.subspan(12, 4));
  ip.dst = *IpAddr::from_bytes(rest.subspan(16, 4));
  ip.options.assign(rest.begin() + 20, rest.begin() + static_cast<std::ptrdiff_t>(hlen));
  std::size_t end = ip.total_length >= hlen && ip.total_length <= rest.size() ? ip.total_length : rest.size();
  pkt.trailer.assign(rest.begin() + static_cast<std::ptrdiff_t>(end), rest.end());
  Span body = rest.subspan(hlen, end - hlen);
  pkt.ip = std::move(ip);
  if (pkt.ip->is_fragment()) {
    pkt.payload.assign(body.begin(), body.end());
    return;
  }
  dissect_l4(pkt, body);
}

void dissect_ipv6(Packet& pkt, Span rest) {
  if (rest.size() < 40 || (rest[0] >> 4) != 6) {
    pkt.payload.assign(rest.begin(), rest.end());
    return;
  }
  IpLayer ip;
  ip.version = 6;
  std::uint32_t word = rd32(rest, 0);
  ip.tos = static_cast<std::uint8_t>(word >> 20);
  ip.flow_label = word & 0xfffff;
  ip.payload_length = rd16(rest, 4);
  ip.protocol = rest[6];
  ip.ttl = rest[7];
  ip.src = *IpAddr::from_bytes(rest.subspan(8, 16));
  ip.dst = *IpAddr::from_bytes(rest.subspan(24, 16));
  std::size_t end = 40 + static_cast<std::size_t>(ip.payload_length) <= rest.size() ? 40 + ip.payload_length : rest.size();
  pkt.trailer.assign(rest.begin() + static_cast<std::ptrdiff_t>(end), rest.end());
  pkt.ip = std::move(ip);
  dissect_l4(pkt, rest.subspan(40, end - 40));
}

std::size_t l4_header_size(const Packet& pkt) {
  if (pkt.icmp) return 4;
  if (!pkt.transport) return 0;
  if (pkt.transport->proto == TransportProto::Udp) return 8;
  return 20 + pkt.transport->options.size();
}

// Bytes of the IP payload as currently stored: L4 header plus payload.
Bytes l4_bytes(const Packet& pkt) {
  Bytes out;
  if (pkt.icmp) {
    out.push_back(pkt.icmp->type);
    out.push_back(pkt.icmp->code);
    put16(out, pkt.icmp->checksum);
  } else if (pkt.transport) {
    const auto& t = *pkt.transport;
    put16(out, t.src_port);
    put16(out, t.dst_port);
    if (t.proto == TransportProto::Tcp) {
      put32(out, t.seq);
      put32(out, t.ack);
      put16(out, t.offset_flags);
      put16(out, t.window);
      put16(out, t.checksum);
      put16(out, t.urgent);
      append(out, t.options);
    } else {
      put16(out, t.length);
      put16(out, t.checksum);
    }
  }
  append(out, pkt.payload);
  return out;
}

std::uint32_t pseudo_header_sum(const IpLayer& ip, std::uint8_t proto, std::size_t length) {
  Bytes ph;
  append(ph, ip.src.bytes());
  append(ph, ip.dst.bytes());
  if (ip.version == 4) {
    ph.push_back(0);
    ph.push_back(proto);
    put16(ph, static_cast<std::uint16_t>(length));
  } else {
    put32(ph, static_cast<std::uint32_t>(length));
    ph.insert(ph.end(), {0, 0, 0, proto});
  }
  return checksum_add(0, ph);
}

}  // namespace

bool Packet::same_fields(const Packet& o) const {
  return ts == o.ts && iface == o.iface && eth == o.eth && arp == o.arp && ip == o.ip && icmp == o.icmp &&
         transport == o.transport && app == o.app && payload == o.payload && trailer == o.trailer;
}

Packet dissect(std::span<const std::uint8_t> raw, int linktype, Timestamp ts) {
  if (linktype != kLinkTypeEthernet) throw FormatError("unsupported linktype " + std::to_string(linktype));
  if (raw.size() < 14) throw FormatError("truncated Ethernet header");
  Packet pkt;
  pkt.ts = ts;
  pkt.raw.assign(raw.begin(), raw.end());
  pkt.eth.dst = rd_mac(raw, 0);
  pkt.eth.src = rd_mac(raw, 6);
  pkt.eth.eth_type = rd16(raw, 12);
  Span rest = raw.subspan(14);
  switch (pkt.eth.eth_type) {
    case kEthArp:
      if (rest.size() >= 28 && rd16(rest, 0) == 1 && rd16(rest, 2) == kEthIpv4 && rest[4] == 6 && rest[5] == 4) {
        ArpLayer a;
        a.htype = 1;
        a.ptype = kEthIpv4;
        a.op = rd16(rest, 6);
        a.sender_hw = rd_mac(rest, 8);
        a.sender_ip = *IpAddr::from_bytes(rest.subspan(14, 4));
        a.target_hw = rd_mac(rest, 18);
        a.target_ip = *IpAddr::from_bytes(rest.subspan(24, 4));
        pkt.arp = a;
        pkt.trailer.assign(rest.begin() + 28, rest.end());
      } else {
        pkt.payload.assign(rest.begin(), rest.end());
      }
      break;
    case kEthIpv4:
      dissect_ipv4(pkt, rest);
      break;
    case kEthIpv6:
      dissect_ipv6(pkt, rest);
      break;
    default:
      pkt.payload.assign(rest.begin(), rest.end());
  }
  return pkt;
}

Bytes serialize(const Packet& pkt) {
  Bytes out;
  append(out, pkt.eth.dst.octets);
  append(out, pkt.eth.src.octets);
  put16(out, pkt.eth.eth_type);
  if (pkt.arp) {
    const auto& a = *pkt.arp;
    put16(out, a.htype);
    put16(out, a.ptype);
    out.push_back(6);
    out.push_back(4);
    put16(out, a.op);
    append(out, a.sender_hw.octets);
    put_ip(out, a.sender_ip, 4);
    append(out, a.target_hw.octets);
    put_ip(out, a.target_ip, 4);
  } else if (pkt.ip) {
    const auto& ip = *pkt.ip;
    if (ip.version == 4) {
      out.push_back(static_cast<std::uint8_t>(0x40 | ((20 + ip.options.size()) / 4 & 0xf)));
      out.push_back(ip.tos);
      put16(out, ip.total_length);
      put16(out, ip.id);
      put16(out, ip.flags_fragment);
      out.push_back(ip.ttl);
      out.push_back(ip.protocol);
      put16(out, ip.checksum);
      put_ip(out, ip.src, 4);
      put_ip(out, ip.dst, 4);
      append(out, ip.options);
    } else {
      put32(out, 0x60000000u | static_cast<std::uint32_t>(ip.tos) << 20 | (ip.flow_label & 0xfffff));
      put16(out, ip.payload_length);
      out.push_back(ip.protocol);
      out.push_back(ip.ttl);
      put_ip(out, ip.src, 6);
      put_ip(out, ip.dst, 6);
    }
    append(out, l4_bytes(pkt));
    append(out, pkt.trailer);
    return out;
  }
  if (!pkt.arp) append(out, pkt.payload);
  append(out, pkt.trailer);
  return out;
}

void encode_app(Packet& pkt) {
  if (!pkt.app) return;
  pkt.payload = std::visit(
      [](const auto& m) -> Bytes {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, DnsMessage>) return encode_dns(m);
        else if constexpr (std::is_same_v<T, DhcpMessage>) return encode_dhcp(m);
        else if constexpr (std::is_same_v<T, HttpMessage> || std::is_same_v<T, SsdpMessage>) return encode_text(m);
        else if constexpr (std::is_same_v<T, CoapMessage>) return encode_coap(m);
        else return encode_igmp(m);
      },
      pkt.app->message);
}

void finalize(Packet& pkt) {
  if (pkt.arp) {
    pkt.eth.eth_type = kEthArp;
    return;
  }
  if (!pkt.ip) return;
  IpLayer& ip = *pkt.ip;
  pkt.eth.eth_type = ip.version == 4 ? kEthIpv4 : kEthIpv6;
  if (pkt.icmp) {
    ip.protocol = ip.version == 4 ? kProtoIcmp : kProtoIcmpv6;
  } else if (pkt.transport) {
    ip.protocol = pkt.transport->proto == TransportProto::Tcp ? kProtoTcp : kProtoUdp;
  } else if (pkt.app && pkt.app->proto == AppProto::Igmp) {
    ip.protocol = kProtoIgmp;
  }
  std::size_t l4_len = l4_header_size(pkt) + pkt.payload.size();

  if (pkt.transport) {
    auto& t = *pkt.transport;
    if (t.proto == TransportProto::Tcp) {
      t.offset_flags = static_cast<std::uint16_t>(((20 + t.options.size()) / 4) << 12 | (t.offset_flags & 0x0fff));
    } else {
      t.length = static_cast<std::uint16_t>(l4_len);
    }
    t.checksum = 0;
    std::uint32_t sum = pseudo_header_sum(ip, ip.protocol, l4_len);
    std::uint16_t c = checksum_fold(checksum_add(sum, l4_bytes(pkt)));
    if (t.proto == TransportProto::Udp && c == 0) c = 0xffff;
    t.checksum = c;
  } else if (pkt.icmp) {
    pkt.icmp->checksum = 0;
    std::uint32_t sum = ip.version == 6 ? pseudo_header_sum(ip, kProtoIcmpv6, l4_len) : 0;
    pkt.icmp->checksum = checksum_fold(checksum_add(sum, l4_bytes(pkt)));
  }

  if (ip.version == 4) {
    ip.total_length = static_cast<std::uint16_t>(20 + ip.options.size() + l4_len);
    ip.checksum = 0;
    Packet header_only;
    header_only.ip = ip;
    Bytes hdr = serialize(header_only);
    ip.checksum = checksum_fold(checksum_add(0, Span(hdr).subspan(14, 20 + ip.options.size())));
  } else {
    ip.payload_length = static_cast<std::uint16_t>(l4_len);
  }
}

Packet rebuild(const Packet& pkt) {
  Packet copy = pkt;
  encode_app(copy);
  finalize(copy);
  Bytes raw = serialize(copy);
  Packet out = dissect(raw, kLinkTypeEthernet, pkt.ts);
  out.iface = pkt.iface;
  return out;
}

std::string_view highest_layer(const Packet& pkt) {
  if (pkt.app) return "app";
  if (pkt.transport) return "transport";
  if (pkt.icmp) return "icmp";
  if (pkt.ip) return "ip";
  if (pkt.arp) return "arp";
  return "ethernet";
}

const DnsMessage* dns_message(const Packet& pkt) {
  if (!pkt.app || (pkt.app->proto != AppProto::Dns && pkt.app->proto != AppProto::Mdns)) return nullptr;
  return std::get_if<DnsMessage>(&pkt.app->message);
}

}  // namespace profwall
