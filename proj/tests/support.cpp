#include "support.hpp"

#include "profwall/profile_parser.hpp"

namespace testing {

using namespace profwall;

std::filesystem::path source_path(const std::string& rel) { return std::filesystem::path(PROFWALL_SOURCE_DIR) / rel; }

std::filesystem::path fixture_path(const std::string& rel) { return source_path("tests/fixtures") / rel; }

Profile load_fixture(const std::string& rel) { return load_profile_file(fixture_path(rel)); }

EngineConfig fixture_config() { return load_engine_config(fixture_path("config.yaml")); }

std::vector<Fixture> base_fixtures() {
  return {
      {"dns-https", {load_fixture("dns-https.yaml")}},
      {"smart-lamp", {load_fixture("smart-lamp.yaml")}},
      {"sensor", {load_fixture("sensor.yaml")}},
      {"acl", {load_fixture("acl.yaml")}},
      {"plug", {load_profile_file(source_path("profiles/tplink-plug.yaml"))}},
      {"home", load_profile_dir(source_path("profiles"))},
  };
}

Trace happy_for(const std::vector<Profile>& profiles, std::size_t cycles) {
  std::vector<Trace> parts;
  for (const auto& p : profiles) {
    SynthHosts hosts = default_synth_hosts(p.device_info);
    auto_resolve(p, hosts);
    HappyOptions opts;
    opts.cycles = cycles;
    parts.push_back(happy_trace(p, hosts, opts));
  }
  return merge_traces(parts);
}

ReplayReport replay(const std::vector<Profile>& profiles, const EngineConfig& config, const Trace& trace) {
  Engine engine(config);
  for (const auto& p : profiles) engine.register_profile(p);
  return engine.run_replay(trace);
}

}  // namespace testing

namespace testing {

namespace {

std::uint64_t draw(std::mt19937_64& rng, std::uint64_t lo, std::uint64_t hi) {
  return std::uniform_int_distribution<std::uint64_t>(lo, hi)(rng);
}

MacAddr random_mac(std::mt19937_64& rng) {
  MacAddr m;
  for (auto& o : m.octets) o = static_cast<std::uint8_t>(draw(rng, 0, 255));
  m.octets[0] &= 0xfe;
  return m;
}

IpAddr random_ip(std::mt19937_64& rng, int version) {
  if (version == 4) return IpAddr::v4(static_cast<std::uint32_t>(draw(rng, 0, 0xffffffff)));
  std::array<std::uint8_t, 16> b{};
  for (auto& o : b) o = static_cast<std::uint8_t>(draw(rng, 0, 255));
  return IpAddr::v6(b);
}

Bytes random_bytes(std::mt19937_64& rng, std::size_t max) {
  Bytes b(draw(rng, 0, max));
  for (auto& o : b) o = static_cast<std::uint8_t>(draw(rng, 0, 255));
  return b;
}

std::string random_label(std::mt19937_64& rng) {
  std::string s(draw(rng, 1, 12), 'a');
  for (auto& c : s) c = static_cast<char>('a' + draw(rng, 0, 25));
  return s;
}

std::uint16_t plain_port(std::mt19937_64& rng) {
  for (;;) {
    auto p = static_cast<std::uint16_t>(draw(rng, 1, 65535));
    if (p != 53 && p != 67 && p != 68 && p != 80 && p != 1900 && p != 5353 && p != 5683) return p;
  }
}

TransportLayer transport(std::mt19937_64& rng, TransportProto proto, std::uint16_t sport, std::uint16_t dport) {
  TransportLayer t;
  t.proto = proto;
  t.src_port = sport;
  t.dst_port = dport;
  if (proto == TransportProto::Tcp) {
    t.seq = static_cast<std::uint32_t>(draw(rng, 0, 0xffffffff));
    t.ack = static_cast<std::uint32_t>(draw(rng, 0, 0xffffffff));
    t.offset_flags = static_cast<std::uint16_t>(0x5000 | draw(rng, 0, 0x3f));
    t.window = static_cast<std::uint16_t>(draw(rng, 0, 65535));
  }
  return t;
}

DnsMessage random_dns(std::mt19937_64& rng) {
  DnsMessage m;
  m.id = static_cast<std::uint16_t>(draw(rng, 0, 65535));
  bool response = draw(rng, 0, 1);
  m.set_response(response);
  std::string name = random_label(rng) + "." + random_label(rng);
  m.questions.push_back({name, static_cast<std::uint16_t>(draw(rng, 0, 1) ? 1 : 28), 1});
  if (response) {
    for (std::uint64_t i = 0, n = draw(rng, 0, 3); i < n; ++i) {
      DnsRecord r;
      r.name = name;
      r.ttl = static_cast<std::uint32_t>(draw(rng, 0, 86400));
      r.type = draw(rng, 0, 1) ? 1 : 28;
      r.address = random_ip(rng, r.type == 1 ? 4 : 6);
      m.answers.push_back(r);
    }
  }
  return m;
}

}  // namespace

Packet random_packet(std::mt19937_64& rng, Timestamp ts) {
  Packet p;
  p.ts = ts;
  p.eth.src = random_mac(rng);
  p.eth.dst = random_mac(rng);
  const auto kind = draw(rng, 0, 13);
  if (kind == 0) {
    p.eth.eth_type = kEthArp;
    ArpLayer a;
    a.op = static_cast<std::uint16_t>(draw(rng, 1, 2));
    a.sender_hw = random_mac(rng);
    a.sender_ip = random_ip(rng, 4);
    a.target_hw = random_mac(rng);
    a.target_ip = random_ip(rng, 4);
    p.arp = a;
    return rebuild(p);
  }
  const int version = (kind == 1 || kind == 13) ? 4 : (draw(rng, 0, 3) == 0 ? 6 : 4);
  p.eth.eth_type = version == 4 ? kEthIpv4 : kEthIpv6;
  IpLayer l3;
  l3.version = version;
  l3.src = random_ip(rng, version);
  l3.dst = random_ip(rng, version);
  l3.ttl = static_cast<std::uint8_t>(draw(rng, 1, 255));
  if (version == 4) {
    l3.tos = static_cast<std::uint8_t>(draw(rng, 0, 255));
    l3.id = static_cast<std::uint16_t>(draw(rng, 0, 65535));
  } else {
    l3.flow_label = static_cast<std::uint32_t>(draw(rng, 0, 0xfffff));
  }
  p.ip = l3;
  auto udp = [&](std::uint16_t s, std::uint16_t d) {
    p.ip->protocol = kProtoUdp;
    p.transport = transport(rng, TransportProto::Udp, s, d);
  };
  auto tcp = [&](std::uint16_t s, std::uint16_t d) {
    p.ip->protocol = kProtoTcp;
    p.transport = transport(rng, TransportProto::Tcp, s, d);
  };
  switch (kind) {
    case 1: {
      p.ip->protocol = kProtoIgmp;
      IgmpMessage g;
      const std::uint8_t types[] = {0x11, 0x12, 0x16, 0x17};
      g.type = types[draw(rng, 0, 3)];
      g.max_resp = static_cast<std::uint8_t>(draw(rng, 0, 255));
      g.group = IpAddr::v4({239, static_cast<std::uint8_t>(draw(rng, 0, 255)), 1, 1});
      p.app = AppLayer{AppProto::Igmp, g};
      break;
    }
    case 2: {
      p.ip->protocol = version == 4 ? kProtoIcmp : kProtoIcmpv6;
      p.icmp = IcmpLayer{static_cast<std::uint8_t>(draw(rng, 0, 255)), static_cast<std::uint8_t>(draw(rng, 0, 255)), 0};
      p.payload = random_bytes(rng, 32);
      break;
    }
    case 3:
      tcp(plain_port(rng), plain_port(rng));
      p.payload = random_bytes(rng, 64);
      if (!p.payload.empty()) p.payload[0] = 0;
      break;
    case 4:
      udp(plain_port(rng), plain_port(rng));
      p.payload = random_bytes(rng, 64);
      break;
    case 5:
      udp(plain_port(rng), 53);
      p.app = AppLayer{AppProto::Dns, random_dns(rng)};
      break;
    case 6:
      udp(5353, 5353);
      p.app = AppLayer{AppProto::Mdns, random_dns(rng)};
      break;
    case 7: {
      udp(68, 67);
      DhcpMessage d;
      d.xid = static_cast<std::uint32_t>(draw(rng, 0, 0xffffffff));
      auto mac = random_mac(rng);
      std::copy(mac.octets.begin(), mac.octets.end(), d.chaddr.begin());
      d.set_message_type(static_cast<std::uint8_t>(draw(rng, 1, 8)));
      p.app = AppLayer{AppProto::Dhcp, d};
      break;
    }
    case 8: {
      tcp(plain_port(rng), 80);
      HttpMessage m;
      const char* methods[] = {"GET", "POST", "PUT", "DELETE"};
      m.method = methods[draw(rng, 0, 3)];
      m.uri = "/" + random_label(rng);
      m.headers.emplace_back("Host", random_label(rng) + ".example");
      p.app = AppLayer{AppProto::Http, m};
      break;
    }
    case 9: {
      tcp(80, plain_port(rng));
      HttpMessage m;
      m.response = true;
      m.status = static_cast<int>(draw(rng, 100, 599));
      m.reason = "Status";
      m.body = random_bytes(rng, 16);
      m.headers.emplace_back("Content-Length", std::to_string(m.body.size()));
      p.app = AppLayer{AppProto::Http, m};
      break;
    }
    case 10: {
      udp(plain_port(rng), 1900);
      SsdpMessage m;
      m.method = draw(rng, 0, 1) ? "M-SEARCH" : "NOTIFY";
      m.uri = "*";
      m.headers.emplace_back("HOST", "239.255.255.250:1900");
      m.headers.emplace_back("ST", "urn:" + random_label(rng));
      p.app = AppLayer{AppProto::Ssdp, m};
      break;
    }
    case 11: {
      udp(plain_port(rng), 5683);
      CoapMessage c;
      c.type = static_cast<std::uint8_t>(draw(rng, 0, 3));
      c.code = static_cast<std::uint8_t>(draw(rng, 1, 4));
      c.message_id = static_cast<std::uint16_t>(draw(rng, 0, 65535));
      c.token = random_bytes(rng, 8);
      c.set_uri_path(random_label(rng) + "/" + random_label(rng));
      p.app = AppLayer{AppProto::Coap, c};
      break;
    }
    default:
      p.ip->protocol = static_cast<std::uint8_t>(draw(rng, 100, 140));
      p.payload = random_bytes(rng, 48);
      break;
  }
  return rebuild(p);
}

Bytes random_frame(std::mt19937_64& rng) {
  Bytes b = random_bytes(rng, 200);
  Bytes head(14);
  for (auto& o : head) o = static_cast<std::uint8_t>(draw(rng, 0, 255));
  const std::uint16_t types[] = {kEthIpv4, kEthIpv6, kEthArp, 0x8100};
  if (draw(rng, 0, 4) != 0) {
    auto t = types[draw(rng, 0, 3)];
    head[12] = static_cast<std::uint8_t>(t >> 8);
    head[13] = static_cast<std::uint8_t>(t);
    if (t == kEthIpv4 && !b.empty()) b[0] = static_cast<std::uint8_t>(0x40 | draw(rng, 0, 15));
    if (t == kEthIpv6 && !b.empty()) b[0] = 0x60;
  }
  head.insert(head.end(), b.begin(), b.end());
  return head;
}

}  // namespace testing
