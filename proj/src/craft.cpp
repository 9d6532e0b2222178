#include "profwall/craft.hpp"

#include "profwall/errors.hpp"

namespace profwall {

namespace {

Packet ip_packet(Timestamp ts, const Host& src, const Host& dst) {
  Packet p;
  p.ts = ts;
  p.eth.src = src.mac;
  p.eth.dst = dst.mac;
  IpLayer ip;
  ip.version = src.ip.version();
  ip.src = src.ip;
  ip.dst = dst.ip;
  if (ip.version == 4) ip.flags_fragment = 0x4000;
  p.ip = ip;
  return p;
}

TransportLayer tcp_layer(std::uint16_t sport, std::uint16_t dport, std::uint8_t flags) {
  TransportLayer t;
  t.proto = TransportProto::Tcp;
  t.src_port = sport;
  t.dst_port = dport;
  t.offset_flags = static_cast<std::uint16_t>(0x5000 | flags);
  t.seq = 1000;
  t.ack = (flags & tcp_flags::kAck) ? 2000 : 0;
  t.window = 65535;
  return t;
}

TransportLayer udp_layer(std::uint16_t sport, std::uint16_t dport) {
  TransportLayer t;
  t.proto = TransportProto::Udp;
  t.src_port = sport;
  t.dst_port = dport;
  return t;
}

DnsRecord address_record(const std::string& name, const IpAddr& a) {
  DnsRecord rr;
  rr.name = name;
  rr.type = a.is_v4() ? 1 : 28;
  rr.ttl = 300;
  rr.address = a;
  return rr;
}

}  // namespace

Packet make_tcp(Timestamp ts, const Host& src, const Host& dst, std::uint16_t sport, std::uint16_t dport,
                std::uint8_t flags, Bytes payload) {
  Packet p = ip_packet(ts, src, dst);
  p.transport = tcp_layer(sport, dport, flags);
  p.payload = std::move(payload);
  return rebuild(p);
}

Packet make_udp(Timestamp ts, const Host& src, const Host& dst, std::uint16_t sport, std::uint16_t dport,
                Bytes payload) {
  Packet p = ip_packet(ts, src, dst);
  p.transport = udp_layer(sport, dport);
  p.payload = std::move(payload);
  return rebuild(p);
}

Packet make_arp(Timestamp ts, ArpOp op, const Host& sender, const Host& target) {
  Packet p;
  p.ts = ts;
  ArpLayer a;
  a.op = static_cast<std::uint16_t>(op);
  a.sender_hw = sender.mac;
  a.sender_ip = sender.ip;
  a.target_ip = target.ip;
  if (op == ArpOp::Reply) a.target_hw = target.mac;
  p.eth.src = sender.mac;
  p.eth.dst = op == ArpOp::Request ? MacAddr::broadcast() : target.mac;
  p.arp = a;
  return rebuild(p);
}

Packet make_dns_query(Timestamp ts, const Host& src, const Host& server, std::uint16_t sport, std::uint16_t id,
                      const std::string& name, std::uint16_t qtype) {
  Packet p = ip_packet(ts, src, server);
  p.transport = udp_layer(sport, 53);
  DnsMessage m;
  m.id = id;
  m.flags = 0x0100;
  m.questions.push_back({name, qtype, 1});
  p.app = AppLayer{AppProto::Dns, m};
  return rebuild(p);
}

Packet make_dns_response(Timestamp ts, const Host& server, const Host& dst, std::uint16_t dport, std::uint16_t id,
                         const std::string& name, const std::vector<IpAddr>& addrs) {
  Packet p = ip_packet(ts, server, dst);
  p.transport = udp_layer(53, dport);
  DnsMessage m;
  m.id = id;
  m.flags = 0x8180;
  std::uint16_t qtype = !addrs.empty() && !addrs.front().is_v4() ? 28 : 1;
  m.questions.push_back({name, qtype, 1});
  for (const auto& a : addrs) m.answers.push_back(address_record(name, a));
  p.app = AppLayer{AppProto::Dns, m};
  return rebuild(p);
}

// ---------------------------------------------------------------------------

SynthHosts default_synth_hosts(const DeviceInfo& device) {
  SynthHosts h;
  h.device = device;
  h.phone_mac = *MacAddr::parse("02:00:00:00:00:50");
  h.phone_v4 = *IpAddr::parse("192.168.1.50");
  h.phone_v6 = *IpAddr::parse("fd00::50");
  h.gateway_mac = *MacAddr::parse("02:00:00:00:00:01");
  h.gateway_v4 = *IpAddr::parse("192.168.1.1");
  h.gateway_v6 = *IpAddr::parse("fd00::1");
  h.remote_v4 = *IpAddr::parse("198.51.100.20");
  h.remote_v6 = *IpAddr::parse("2001:db8::20");
  return h;
}

namespace {

class Synth {
 public:
  Synth(const MatchSpec& spec, const SynthHosts& h) : spec_(spec), h_(h) {
    version_ = spec.ip ? spec.ip->version : 4;
  }

  Packet build(Timestamp ts) {
    Packet p;
    p.ts = ts;
    if (spec_.arp) {
      arp(p);
    } else {
      ip(p);
    }
    if (spec_.link) {
      if (spec_.link->src) p.eth.src = mac_of(*spec_.link->src, p.eth.src);
      if (spec_.link->dst) p.eth.dst = mac_of(*spec_.link->dst, p.eth.dst);
    }
    return rebuild(p);
  }

 private:
  IpAddr pick(const IpAddr& v4, const IpAddr& v6) const { return version_ == 4 ? v4 : v6; }

  IpAddr self_ip() const {
    const auto& a = version_ == 4 ? h_.device.ipv4 : h_.device.ipv6;
    if (!a) throw BadParams("device '" + h_.device.name + "' has no IPv" + std::to_string(version_) + " address");
    return *a;
  }

  IpAddr resolve(const EndpointExpr& e) const {
    switch (e.kind) {
      case EndpointExpr::Kind::Literal: return e.addr;
      case EndpointExpr::Kind::Domain: {
        auto it = h_.resolved.find(e.domain);
        if (it == h_.resolved.end()) throw BadParams("no address given for domain '" + e.domain + "'");
        return it->second;
      }
      case EndpointExpr::Kind::Self: return self_ip();
      case EndpointExpr::Kind::Local:
      case EndpointExpr::Kind::Phone: return pick(h_.phone_v4, h_.phone_v6);
      case EndpointExpr::Kind::Gateway: return pick(h_.gateway_v4, h_.gateway_v6);
      case EndpointExpr::Kind::Any: return pick(h_.remote_v4, h_.remote_v6);
    }
    return {};
  }

  static bool is_self(const std::optional<EndpointExpr>& e) {
    return e && e->kind == EndpointExpr::Kind::Self;
  }

  // Endpoint pair with defaults: the device on one side, a remote host on the other.
  std::pair<IpAddr, IpAddr> endpoints(const std::optional<EndpointExpr>& src,
                                      const std::optional<EndpointExpr>& dst, const IpAddr& other) const {
    IpAddr s = src ? resolve(*src) : (is_self(dst) ? other : self_ip());
    IpAddr d = dst ? resolve(*dst) : (src && !is_self(src) ? self_ip() : other);
    return {s, d};
  }

  MacAddr mac_for(const IpAddr& a) const {
    if (h_.device.has_ip(a)) return h_.device.mac;
    if (a == h_.phone_v4 || a == h_.phone_v6) return h_.phone_mac;
    auto b = a.bytes();
    if (a.is_v4() && a.is_multicast()) return MacAddr{{0x01, 0x00, 0x5e, static_cast<std::uint8_t>(b[1] & 0x7f), b[2], b[3]}};
    if (a.is_v4() && a.v4_value() == 0xffffffffu) return MacAddr::broadcast();
    if (!a.is_v4() && a.is_multicast()) return MacAddr{{0x33, 0x33, b[12], b[13], b[14], b[15]}};
    return h_.gateway_mac;
  }

  MacAddr mac_of(const MacExpr& e, const MacAddr& derived) const {
    switch (e.kind) {
      case MacExpr::Kind::Literal: return e.addr;
      case MacExpr::Kind::Self: return h_.device.mac;
      case MacExpr::Kind::Any: return derived;
    }
    return derived;
  }

  void arp(Packet& p) const {
    const ArpMatch& m = *spec_.arp;
    version_ = 4;
    ArpLayer a;
    ArpOp op = m.op.value_or(ArpOp::Request);
    a.op = static_cast<std::uint16_t>(op);
    auto [sip, tip] = endpoints(m.sender_ip, m.target_ip, h_.phone_v4);
    a.sender_ip = sip;
    a.target_ip = tip;
    a.sender_hw = m.sender_hw ? mac_of(*m.sender_hw, mac_for(sip)) : mac_for(sip);
    MacAddr target_derived = op == ArpOp::Request ? MacAddr{} : mac_for(tip);
    a.target_hw = m.target_hw ? mac_of(*m.target_hw, target_derived) : target_derived;
    p.eth.src = a.sender_hw;
    p.eth.dst = op == ArpOp::Request ? MacAddr::broadcast() : a.target_hw;
    p.arp = a;
  }

  bool app_is_response() const {
    if (!spec_.app) return false;
    return std::visit(
        [](const auto& m) -> bool {
          using T = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<T, DnsMatch>) {
            return m.qr == DnsQr::Response;
          } else if constexpr (std::is_same_v<T, DhcpMatch>) {
            auto t = m.message_type.value_or(1);
            return t == 2 || t == 5 || t == 6;
          } else if constexpr (std::is_same_v<T, IgmpMatch>) {
            return false;
          } else {
            return m.response.value_or(false);
          }
        },
        spec_.app->spec);
  }

  // (source, destination) default ports for the application protocol.
  std::pair<std::uint16_t, std::uint16_t> app_ports() const {
    constexpr std::uint16_t kEphemeral = 49153;
    std::uint16_t well_known = 443;
    if (spec_.app) {
      switch (spec_.app->proto) {
        case AppProto::Dns: well_known = 53; break;
        case AppProto::Mdns: return {5353, 5353};
        case AppProto::Dhcp: return app_is_response() ? std::pair<std::uint16_t, std::uint16_t>{67, 68}
                                                      : std::pair<std::uint16_t, std::uint16_t>{68, 67};
        case AppProto::Http: well_known = 80; break;
        case AppProto::Ssdp: well_known = 1900; break;
        case AppProto::Coap: well_known = 5683; break;
        case AppProto::Igmp: break;
      }
    }
    if (app_is_response()) return {well_known, kEphemeral};
    return {kEphemeral, well_known};
  }

  TransportProto transport_proto() const {
    if (spec_.transport) return spec_.transport->proto;
    if (spec_.app && spec_.app->proto == AppProto::Http) return TransportProto::Tcp;
    if (spec_.app) return TransportProto::Udp;
    return TransportProto::Tcp;
  }

  IpAddr igmp_default_dst(std::uint8_t type, const IpAddr& group) const {
    switch (type) {
      case 0x11: return *IpAddr::parse("224.0.0.1");
      case 0x17: return *IpAddr::parse("224.0.0.2");
      case 0x22: return *IpAddr::parse("224.0.0.22");
      default: return group;
    }
  }

  void ip(Packet& p) const {
    const bool igmp = spec_.app && spec_.app->proto == AppProto::Igmp;
    std::optional<EndpointExpr> src = spec_.ip ? spec_.ip->src : std::nullopt;
    std::optional<EndpointExpr> dst = spec_.ip ? spec_.ip->dst : std::nullopt;
    IpAddr other = pick(h_.remote_v4, h_.remote_v6);
    if (igmp) {
      const auto& m = std::get<IgmpMatch>(spec_.app->spec);
      IpAddr group = m.group.value_or(*IpAddr::parse("239.255.255.250"));
      other = igmp_default_dst(m.type.value_or(0x16), group);
    } else if (spec_.app && spec_.app->proto == AppProto::Mdns) {
      other = version_ == 4 ? *IpAddr::parse("224.0.0.251") : *IpAddr::parse("ff02::fb");
    } else if (spec_.app && spec_.app->proto == AppProto::Ssdp && !app_is_response()) {
      other = version_ == 4 ? *IpAddr::parse("239.255.255.250") : *IpAddr::parse("ff02::c");
    } else if (spec_.app && spec_.app->proto == AppProto::Dhcp) {
      other = version_ == 4 ? *IpAddr::parse("255.255.255.255") : other;
    }
    auto [s, d] = endpoints(src, dst, other);
    IpLayer ip;
    ip.version = version_;
    ip.src = s;
    ip.dst = d;
    if (version_ == 4) ip.flags_fragment = 0x4000;
    if (igmp) {
      ip.ttl = 1;
      ip.flags_fragment = 0;
    }
    p.ip = ip;
    p.eth.src = mac_for(s);
    p.eth.dst = mac_for(d);

    if (spec_.icmp) {
      IcmpKind kind = spec_.icmp->type.value_or(IcmpKind::EchoRequest);
      auto type = icmp_code_for(kind, version_);
      if (!type) throw BadParams("ICMP type " + std::string(to_string(kind)) + " has no IPv" + std::to_string(version_) + " code");
      p.icmp = IcmpLayer{*type, 0, 0};
      p.payload = {0x12, 0x34, 0x00, 0x01, 'p', 'i', 'n', 'g'};
      return;
    }
    if (igmp) {
      const auto& m = std::get<IgmpMatch>(spec_.app->spec);
      IgmpMessage msg;
      msg.type = m.type.value_or(0x16);
      msg.group = m.group.value_or(*IpAddr::parse("239.255.255.250"));
      if (msg.type == 0x22 && !m.group) msg.group = *IpAddr::parse("0.0.0.0");
      p.app = AppLayer{AppProto::Igmp, msg};
      return;
    }
    if (!spec_.transport && !spec_.app) return;

    auto [sport, dport] = app_ports();
    if (spec_.transport) {
      if (spec_.transport->src_port) sport = spec_.transport->src_port->lo;
      if (spec_.transport->dst_port) dport = spec_.transport->dst_port->lo;
    }
    p.transport = transport_proto() == TransportProto::Tcp ? tcp_layer(sport, dport, tcp_flags::kPsh | tcp_flags::kAck)
                                                           : udp_layer(sport, dport);
    if (spec_.app) p.app = app_message();
  }

  AppLayer app_message() const {
    const AppMatch& a = *spec_.app;
    return std::visit(
        [&](const auto& m) -> AppLayer {
          using T = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<T, DnsMatch>) {
            return AppLayer{a.proto, dns(m, a.proto == AppProto::Mdns)};
          } else if constexpr (std::is_same_v<T, DhcpMatch>) {
            DhcpMessage msg;
            std::uint8_t type = m.message_type.value_or(1);
            msg.op = type == 2 || type == 5 || type == 6 ? 2 : 1;
            msg.xid = 0x5eed1234;
            for (std::size_t i = 0; i < 6; ++i) msg.chaddr[i] = h_.device.mac.octets[i];
            msg.set_message_type(type);
            return AppLayer{AppProto::Dhcp, msg};
          } else if constexpr (std::is_same_v<T, HttpMatch>) {
            HttpMessage msg;
            fill_text(msg, m.response.value_or(false), m.method.value_or("GET"), m.uri_prefix.value_or("/"));
            msg.headers.push_back({"Host", "device.local"});
            return AppLayer{AppProto::Http, msg};
          } else if constexpr (std::is_same_v<T, SsdpMatch>) {
            SsdpMessage msg;
            std::string method = m.method.value_or("M-SEARCH");
            fill_text(msg, m.response.value_or(false), method, "*");
            std::string st = m.st.value_or("ssdp:all");
            if (msg.response) {
              msg.headers.push_back({"ST", st});
            } else if (method == "NOTIFY") {
              msg.headers.push_back({"HOST", "239.255.255.250:1900"});
              msg.headers.push_back({"NT", st});
              msg.headers.push_back({"NTS", "ssdp:alive"});
            } else {
              msg.headers.push_back({"HOST", "239.255.255.250:1900"});
              msg.headers.push_back({"MAN", "\"ssdp:discover\""});
              msg.headers.push_back({"ST", st});
            }
            return AppLayer{AppProto::Ssdp, msg};
          } else if constexpr (std::is_same_v<T, CoapMatch>) {
            CoapMessage msg;
            bool response = m.response.value_or(false);
            msg.type = static_cast<std::uint8_t>(m.type.value_or(response ? CoapType::Ack : CoapType::Con));
            msg.code = response ? 0x45 : static_cast<std::uint8_t>(m.method.value_or(CoapMethod::Get));
            msg.message_id = 0x1000;
            msg.token = {0x01};
            if (!response && m.uri_path) msg.set_uri_path(*m.uri_path);
            return AppLayer{AppProto::Coap, msg};
          } else {
            throw BadParams("IGMP needs no transport");
          }
        },
        a.spec);
  }

  template <typename Msg>
  static void fill_text(Msg& msg, bool response, const std::string& method, const std::string& uri) {
    msg.response = response;
    if (response) {
      msg.status = 200;
      msg.reason = "OK";
    } else {
      msg.method = method;
      msg.uri = uri;
    }
  }

  DnsMessage dns(const DnsMatch& m, bool mdns) const {
    DnsMessage msg;
    bool response = m.qr == DnsQr::Response;
    msg.id = mdns ? 0 : 0x4d2;
    msg.flags = response ? (mdns ? 0x8400 : 0x8180) : (mdns ? 0x0000 : 0x0100);
    std::string name = m.domain_name.value_or("example.com");
    std::string question = name.starts_with("*.") ? "a." + name.substr(2) : name;
    std::uint16_t qtype = m.qtype.value_or(1);
    msg.questions.push_back({question, qtype, 1});
    if (response && (qtype == 1 || qtype == 28)) {
      IpAddr addr;
      auto it = h_.resolved.find(name);
      if (it != h_.resolved.end() && it->second.is_v4() == (qtype == 1)) {
        addr = it->second;
      } else {
        addr = qtype == 1 ? *IpAddr::parse("203.0.113.7") : *IpAddr::parse("2001:db8::7");
      }
      msg.answers.push_back(address_record(question, addr));
    }
    return msg;
  }

  const MatchSpec& spec_;
  const SynthHosts& h_;
  mutable int version_ = 4;
};

}  // namespace

Packet synthesize(const MatchSpec& spec, const SynthHosts& hosts, Timestamp ts) { return Synth(spec, hosts).build(ts); }

}  // namespace profwall
