#include <doctest.h>

#include <set>

#include "profwall/errors.hpp"
#include "profwall/trace.hpp"
#include "support.hpp"

using namespace profwall;

namespace {

// Minimal byte assembler for hand-built frames.
struct Wire {
  Bytes b;
  Wire& u8(std::uint8_t v) {
    b.push_back(v);
    return *this;
  }
  Wire& u16(std::uint16_t v) { return u8(static_cast<std::uint8_t>(v >> 8)).u8(static_cast<std::uint8_t>(v)); }
  Wire& u32(std::uint32_t v) { return u16(static_cast<std::uint16_t>(v >> 16)).u16(static_cast<std::uint16_t>(v)); }
  Wire& raw(std::initializer_list<std::uint8_t> v) {
    b.insert(b.end(), v);
    return *this;
  }
  Wire& text(std::string_view s) {
    b.insert(b.end(), s.begin(), s.end());
    return *this;
  }
};

Bytes eth(std::uint16_t type) {
  Wire w;
  w.raw({0x02, 0, 0, 0, 0, 0x01}).raw({0x02, 0, 0, 0, 0, 0x10}).u16(type);
  return w.b;
}

Bytes ipv4_udp(std::uint16_t sport, std::uint16_t dport, const Bytes& payload) {
  Wire w;
  w.b = eth(0x0800);
  w.u8(0x45).u8(0).u16(static_cast<std::uint16_t>(20 + 8 + payload.size())).u16(1).u16(0).u8(64).u8(17).u16(0);
  w.raw({192, 168, 1, 10}).raw({192, 168, 1, 1});
  w.u16(sport).u16(dport).u16(static_cast<std::uint16_t>(8 + payload.size())).u16(0);
  w.b.insert(w.b.end(), payload.begin(), payload.end());
  return w.b;
}

Bytes dns_query_example_com() {
  Wire w;
  w.u16(0x1234).u16(0x0100).u16(1).u16(0).u16(0).u16(0);
  w.u8(7).text("example").u8(3).text("com").u8(0);
  w.u16(1).u16(1);
  return w.b;
}

Bytes pcap_file(bool swapped, const std::vector<Bytes>& records) {
  Wire w;
  auto put32 = [&](std::uint32_t v) {
    if (swapped) w.u32(v);
    else w.u8(v & 0xff).u8((v >> 8) & 0xff).u8((v >> 16) & 0xff).u8(v >> 24);
  };
  auto put16 = [&](std::uint16_t v) {
    if (swapped) w.u16(v);
    else w.u8(v & 0xff).u8(v >> 8);
  };
  put32(0xa1b2c3d4);
  put16(2);
  put16(4);
  put32(0);
  put32(0);
  put32(65535);
  put32(1);
  std::uint32_t sec = 1700000000;
  for (const auto& r : records) {
    put32(sec++);
    put32(250000);
    put32(static_cast<std::uint32_t>(r.size()));
    put32(static_cast<std::uint32_t>(r.size()));
    w.b.insert(w.b.end(), r.begin(), r.end());
  }
  return w.b;
}

}  // namespace

TEST_SUITE("packet") {
  TEST_CASE("empty capture") {
    Trace t = read_pcap(pcap_file(false, {}));
    CHECK(t.packets.empty());
    CHECK(t.linktype == 1);
  }

  TEST_CASE("hand-built DNS query") {
    Bytes frame = ipv4_udp(40000, 53, dns_query_example_com());
    Trace t = read_pcap(pcap_file(false, {frame}));
    REQUIRE(t.packets.size() == 1);
    const Packet& p = t.packets[0];
    CHECK(p.ts == Timestamp{1700000000, 250000000});
    REQUIRE(p.ip);
    CHECK(p.ip->src.str() == "192.168.1.10");
    REQUIRE(p.transport);
    CHECK(p.transport->proto == TransportProto::Udp);
    CHECK(p.transport->dst_port == 53);
    REQUIRE(p.app);
    CHECK(p.app->proto == AppProto::Dns);
    const auto& m = std::get<DnsMessage>(p.app->message);
    CHECK_FALSE(m.is_response());
    CHECK(m.id == 0x1234);
    REQUIRE(m.questions.size() == 1);
    CHECK(m.questions[0].name == "example.com");
    CHECK(m.questions[0].qtype == 1);
    CHECK(p.raw == frame);
  }

  TEST_CASE("byte-swapped capture reads identically") {
    std::vector<Bytes> frames{ipv4_udp(40000, 53, dns_query_example_com()), ipv4_udp(5353, 5353, {})};
    Trace a = read_pcap(pcap_file(false, frames));
    Trace b = read_pcap(pcap_file(true, frames));
    REQUIRE(a.packets.size() == b.packets.size());
    for (std::size_t i = 0; i < a.packets.size(); ++i) {
      CHECK(a.packets[i].ts == b.packets[i].ts);
      CHECK(a.packets[i].raw == b.packets[i].raw);
      CHECK(a.packets[i].same_fields(b.packets[i]));
    }
  }

  TEST_CASE("bad capture headers") {
    Bytes file = pcap_file(false, {});
    Bytes bad_magic = file;
    bad_magic[0] = 0;
    CHECK_THROWS_AS(read_pcap(bad_magic), FormatError);
    CHECK_THROWS_AS(read_pcap(Bytes(file.begin(), file.begin() + 10)), FormatError);
    Bytes not_ether = file;
    not_ether[20] = 113;
    CHECK_THROWS_AS(read_pcap(not_ether), FormatError);
    Bytes truncated = pcap_file(false, {ipv4_udp(1, 2, {})});
    truncated.pop_back();
    CHECK_THROWS_AS(read_pcap(truncated), FormatError);
  }

  TEST_CASE("pcap write and read back") {
    std::mt19937_64 rng(11);
    Trace t;
    for (int i = 0; i < 50; ++i) t.packets.push_back(testing::random_packet(rng, Timestamp{1700000000 + i, 123456789}));
    Trace back = read_pcap(write_pcap(t));
    REQUIRE(back.packets.size() == t.packets.size());
    for (std::size_t i = 0; i < t.packets.size(); ++i) {
      CHECK(back.packets[i].ts == t.packets[i].ts);
      CHECK(back.packets[i].raw == t.packets[i].raw);
    }
  }

  TEST_CASE("ARP who-has") {
    Wire w;
    w.b = eth(0x0806);
    w.u16(1).u16(0x0800).u8(6).u8(4).u16(1);
    w.raw({0x02, 0, 0, 0, 0, 0x50}).raw({192, 168, 1, 50}).raw({0, 0, 0, 0, 0, 0}).raw({192, 168, 1, 30});
    Packet p = dissect(w.b);
    REQUIRE(p.arp);
    CHECK(p.arp->op == 1);
    CHECK(p.arp->sender_ip.str() == "192.168.1.50");
    CHECK(p.arp->target_ip.str() == "192.168.1.30");
    CHECK(highest_layer(p) == "arp");
  }

  TEST_CASE("TCP to 443 stops at the transport layer") {
    Wire w;
    w.b = eth(0x0800);
    w.u8(0x45).u8(0).u16(40).u16(0).u16(0).u8(64).u8(6).u16(0).raw({192, 168, 1, 50}).raw({192, 168, 1, 20});
    w.u16(50000).u16(443).u32(1).u32(0).u16(0x5002).u16(1024).u16(0).u16(0);
    Packet p = dissect(w.b);
    REQUIRE(p.transport);
    CHECK(p.transport->dst_port == 443);
    CHECK((p.transport->flags() & tcp_flags::kSyn) != 0);
    CHECK_FALSE(p.app);
    CHECK(highest_layer(p) == "transport");
  }

  TEST_CASE("CoAP GET with a uri path") {
    Wire c;
    // ver 1, CON, token length 1; GET; message id; token; Uri-Path (11) "status".
    c.u8(0x41).u8(0x01).u16(0x7d34).u8(0xaa).u8(0xb6).text("status");
    Packet p = dissect(ipv4_udp(40000, 5683, c.b));
    REQUIRE(p.app);
    CHECK(p.app->proto == AppProto::Coap);
    const auto& m = std::get<CoapMessage>(p.app->message);
    CHECK(m.type == 0);
    CHECK(m.method() == 1);
    CHECK(m.message_id == 0x7d34);
    CHECK(m.token == Bytes{0xaa});
    CHECK(m.uri_path() == "status");
  }

  TEST_CASE("JSONL lines") {
    Trace t = read_jsonl(
        R"({"ts":0,"eth":{"src":"02:00:00:00:00:10","dst":"01:00:5e:00:00:fb"},"ip":{"src":"192.168.1.10","dst":"224.0.0.251"},"udp":{"src":5353,"dst":5353},"mdns":{"qr":"query","qtype":"PTR","domain-name":"_hue._tcp.local"}})");
    REQUIRE(t.packets.size() == 1);
    const DnsMessage* m = dns_message(t.packets[0]);
    REQUIRE(m);
    CHECK(t.packets[0].app->proto == AppProto::Mdns);
    CHECK(m->questions[0].name == "_hue._tcp.local");
    CHECK(m->questions[0].qtype == 12);

    CHECK(read_jsonl("").packets.empty());
    try {
      read_jsonl("{\"ts\":2}\n{\"ts\":1}\n");
      FAIL("expected FormatError");
    } catch (const FormatError& e) {
      CHECK(std::string(e.what()).find("timestamps must be non-decreasing") != std::string::npos);
      CHECK(e.line() == 2);
    }
    CHECK_THROWS_AS(read_jsonl("not json\n"), FormatError);
  }

  TEST_CASE("JSONL write and read back") {
    std::mt19937_64 rng(5);
    Trace t;
    for (int i = 0; i < 200; ++i) t.packets.push_back(testing::random_packet(rng, Timestamp{1700000000, 0} + std::chrono::milliseconds(i)));
    Trace back = read_jsonl(write_jsonl(t));
    REQUIRE(back.packets.size() == t.packets.size());
    for (std::size_t i = 0; i < t.packets.size(); ++i) {
      CHECK(back.packets[i].raw == t.packets[i].raw);
      CHECK(back.packets[i].ts == t.packets[i].ts);
    }
  }

  TEST_CASE("dissect of serialize is the identity on fields") {
    std::mt19937_64 rng(2024);
    std::set<AppProto> seen;
    for (int i = 0; i < 2000; ++i) {
      Packet p = testing::random_packet(rng, Timestamp{1700000000, 0});
      if (p.app) seen.insert(p.app->proto);
      Bytes bytes = serialize(p);
      REQUIRE(bytes == p.raw);
      Packet d = dissect(bytes, kLinkTypeEthernet, p.ts);
      REQUIRE(d.same_fields(p));
    }
    CHECK(seen.size() == 7);
  }

  TEST_CASE("dissection is total") {
    std::mt19937_64 rng(99);
    for (int i = 0; i < 10000; ++i) {
      Bytes frame = testing::random_frame(rng);
      CHECK_NOTHROW(dissect(frame));
    }
    CHECK_THROWS_AS(dissect(Bytes(13, 0)), FormatError);
  }
}
