#include <doctest.h>

#include "profwall/craft.hpp"
#include "profwall/dns_table.hpp"
#include "profwall/errors.hpp"
#include "profwall/matcher.hpp"
#include "oracle.hpp"
#include "support.hpp"

using namespace profwall;
using testing::RationalBucket;

namespace {

Host host(const char* mac, const char* ip) { return {*MacAddr::parse(mac), *IpAddr::parse(ip)}; }

const Host kPhone = host("02:00:00:00:00:50", "192.168.1.50");
const Host kPlug = host("50:c7:bf:3a:45:01", "192.168.1.30");
const Host kGateway = host("02:00:00:00:00:01", "192.168.1.1");
const Timestamp kT0{1700000000, 0};

struct World {
  DeviceInfo plug{"plug", kPlug.mac, kPlug.ip, std::nullopt};
  Network net;
  DnsTable dns;
  World() {
    net.lan_prefixes = {*IpPrefix::parse("192.168.1.0/24")};
    net.gateway_addrs = {kGateway.ip};
    net.profiled_addrs = {kPlug.ip};
  }
  MatchEnv env(Timestamp now = kT0) const { return MatchEnv{&plug, &net, &dns, now, nullptr}; }
};

Policy tcp_policy(EndpointExpr src, EndpointExpr dst, std::uint16_t dport) {
  Policy p;
  p.name = "p";
  p.match.ip = IpMatch{4, src, dst};
  p.match.transport = TransportMatch{TransportProto::Tcp, std::nullopt, PortRange::single(dport)};
  return p;
}

MatchSpec random_spec(std::mt19937_64& rng) {
  auto coin = [&] { return std::uniform_int_distribution<int>(0, 1)(rng) == 1; };
  auto endpoint = [&] {
    const EndpointExpr choices[] = {EndpointExpr::symbol(EndpointExpr::Kind::Self),
                                    EndpointExpr::symbol(EndpointExpr::Kind::Phone),
                                    EndpointExpr::symbol(EndpointExpr::Kind::Gateway),
                                    EndpointExpr::of_domain("cloud.example.com"),
                                    EndpointExpr::literal(*IpAddr::parse("10.0.0.1"))};
    return choices[std::uniform_int_distribution<int>(0, 4)(rng)];
  };
  MatchSpec m;
  if (coin()) m.link = LinkMatch{MacExpr{MacExpr::Kind::Self, {}}, std::nullopt, std::nullopt};
  int shape = std::uniform_int_distribution<int>(0, 4)(rng);
  if (shape == 0) {
    m.arp = ArpMatch{coin() ? ArpOp::Request : ArpOp::Reply, std::nullopt, endpoint(), std::nullopt, endpoint()};
    return m;
  }
  m.ip = IpMatch{4, coin() ? std::optional(endpoint()) : std::nullopt, endpoint()};
  if (shape == 1) {
    m.icmp = IcmpMatch{coin() ? IcmpKind::EchoRequest : IcmpKind::EchoReply};
  } else if (shape == 2) {
    m.transport = TransportMatch{TransportProto::Udp, PortRange::single(5353), std::nullopt};
    m.app = AppMatch{AppProto::Dns, DnsMatch{coin() ? DnsQr::Query : DnsQr::Response, 1, "a.example"}};
  } else if (shape == 3) {
    m.transport = TransportMatch{TransportProto::Udp, std::nullopt, PortRange::single(5683)};
    m.app = AppMatch{AppProto::Coap, CoapMatch{coin(), coin() ? CoapType::Con : CoapType::Non, CoapMethod::Get, "x"}};
  } else {
    m.transport = TransportMatch{TransportProto::Tcp, PortRange{1000, 2000}, PortRange::single(80)};
    m.app = AppMatch{AppProto::Http, HttpMatch{coin(), "GET", "/a"}};
  }
  return m;
}

}  // namespace

TEST_SUITE("matcher") {
  TEST_CASE("phone to the plug's control port") {
    World w;
    Policy p = tcp_policy(EndpointExpr::symbol(EndpointExpr::Kind::Phone), EndpointExpr::symbol(EndpointExpr::Kind::Self),
                          9999);
    Packet fwd = make_tcp(kT0, kPhone, kPlug, 50000, 9999);
    Packet bwd = make_tcp(kT0, kPlug, kPhone, 9999, 50000);
    CHECK(match_policy(p, fwd, Direction::Forward, w.env()) == MatchResult::Match);
    CHECK(match_policy(p, bwd, Direction::Backward, w.env()) == MatchResult::Match);
    CHECK(match_policy(p, bwd, Direction::Forward, w.env()) == MatchResult::NoMatch);
    CHECK(match_policy(p, fwd, Direction::Backward, w.env()) == MatchResult::NoMatch);
    Packet from_gateway = make_tcp(kT0, kGateway, kPlug, 50000, 9999);
    CHECK(match_policy(p, from_gateway, Direction::Forward, w.env()) == MatchResult::NoMatch);
    Packet wrong_port = make_tcp(kT0, kPhone, kPlug, 50000, 9998);
    CHECK(match_policy(p, wrong_port, Direction::Forward, w.env()) == MatchResult::NoMatch);
  }

  TEST_CASE("domain endpoints consult the DNS table") {
    World w;
    Policy p = tcp_policy(EndpointExpr::symbol(EndpointExpr::Kind::Self), EndpointExpr::of_domain("cloud.example.com"),
                          443);
    Host cloud = host("02:00:00:00:00:01", "52.28.101.7");
    Packet pkt = make_tcp(kT0, kPlug, cloud, 50000, 443);
    CHECK(match_policy(p, pkt, Direction::Forward, w.env()) == MatchResult::Unresolved);
    w.dns.insert("cloud.example.com", *IpAddr::parse("52.28.101.8"), kT0);
    CHECK(match_policy(p, pkt, Direction::Forward, w.env()) == MatchResult::NoMatch);
    w.dns.insert("cloud.example.com", cloud.ip, kT0);
    CHECK(match_policy(p, pkt, Direction::Forward, w.env()) == MatchResult::Match);

    Policy wild = tcp_policy(EndpointExpr::symbol(EndpointExpr::Kind::Self), EndpointExpr::of_domain("*.example.com"), 443);
    CHECK(match_policy(wild, pkt, Direction::Forward, w.env()) == MatchResult::Match);
  }

  TEST_CASE("more DNS knowledge never turns a match into a non-match") {
    std::mt19937_64 rng(3);
    World w;
    Host cloud = host("02:00:00:00:00:01", "52.28.101.7");
    Policy p = tcp_policy(EndpointExpr::symbol(EndpointExpr::Kind::Self), EndpointExpr::of_domain("cloud.example.com"),
                          443);
    Packet pkt = make_tcp(kT0, kPlug, cloud, 50000, 443);
    bool matched = false;
    for (int i = 0; i < 200; ++i) {
      IpAddr a = std::uniform_int_distribution<int>(0, 9)(rng) == 0 ? cloud.ip
                                                                    : IpAddr::v4(static_cast<std::uint32_t>(rng()));
      w.dns.insert(std::uniform_int_distribution<int>(0, 1)(rng) ? "cloud.example.com" : "other.example.com", a, kT0);
      bool now = match_policy(p, pkt, Direction::Forward, w.env()) == MatchResult::Match;
      CHECK((!matched || now));
      matched = now;
    }
  }

  TEST_CASE("ARP inversion swaps sender and target") {
    MatchSpec m;
    m.arp = ArpMatch{ArpOp::Request, std::nullopt, EndpointExpr::literal(kPhone.ip), std::nullopt,
                     EndpointExpr::literal(kPlug.ip)};
    MatchSpec inv = invert_direction(m);
    CHECK(inv.arp->op == ArpOp::Reply);
    CHECK(inv.arp->sender_ip == EndpointExpr::literal(kPlug.ip));
    CHECK(inv.arp->target_ip == EndpointExpr::literal(kPhone.ip));
  }

  TEST_CASE("DNS inversion flips query and response only") {
    MatchSpec m;
    m.app = AppMatch{AppProto::Dns, DnsMatch{DnsQr::Query, 1, "n.example"}};
    MatchSpec inv = invert_direction(m);
    const auto& d = std::get<DnsMatch>(inv.app->spec);
    CHECK(d.qr == DnsQr::Response);
    CHECK(d.qtype == 1);
    CHECK(d.domain_name == "n.example");
  }

  TEST_CASE("inversion is an involution") {
    std::mt19937_64 rng(17);
    for (int i = 0; i < 1000; ++i) {
      MatchSpec m = random_spec(rng);
      CHECK(invert_direction(invert_direction(m)) == m);
    }
  }

  TEST_CASE("backward match on a swapped packet equals forward match") {
    std::mt19937_64 rng(23);
    World w;
    const Host hosts[] = {kPhone, kPlug, kGateway, host("02:00:00:00:00:99", "10.0.0.1")};
    for (int i = 0; i < 2000; ++i) {
      MatchSpec m;
      MatchSpec r = random_spec(rng);
      m.ip = r.ip ? r.ip : IpMatch{4, std::nullopt, EndpointExpr::symbol(EndpointExpr::Kind::Self)};
      auto port = [&]() -> std::optional<PortRange> {
        int k = std::uniform_int_distribution<int>(0, 2)(rng);
        if (k == 0) return std::nullopt;
        return PortRange::single(k == 1 ? 40000 : 9999);
      };
      m.transport = TransportMatch{TransportProto::Tcp, port(), port()};
      Policy p;
      p.match = m;
      const Host& a = hosts[std::uniform_int_distribution<int>(0, 3)(rng)];
      const Host& b = hosts[std::uniform_int_distribution<int>(0, 3)(rng)];
      Packet pkt = make_tcp(kT0, a, b, 40000, 9999);
      Packet swapped = make_tcp(kT0, b, a, 9999, 40000);
      CHECK(match_policy(p, pkt, Direction::Forward, w.env()) == match_policy(p, swapped, Direction::Backward, w.env()));
    }
  }

  TEST_CASE("request fields are not checked against responses") {
    World w;
    Policy p;
    p.match.ip = IpMatch{4, EndpointExpr::symbol(EndpointExpr::Kind::Phone), EndpointExpr::symbol(EndpointExpr::Kind::Self)};
    p.match.transport = TransportMatch{TransportProto::Tcp, std::nullopt, PortRange::single(80)};
    p.match.app = AppMatch{AppProto::Http, HttpMatch{false, "GET", "/info"}};
    SynthHosts hosts = default_synth_hosts(w.plug);
    Packet req = synthesize(p.match, hosts, kT0);
    Packet resp = synthesize(invert_direction(p.match), hosts, kT0);
    CHECK(match_policy(p, req, Direction::Forward, w.env()) == MatchResult::Match);
    CHECK(match_policy(p, resp, Direction::Forward, w.env()) == MatchResult::NoMatch);
    CHECK(match_policy(p, resp, Direction::Backward, w.env()) == MatchResult::Match);
  }

  TEST_CASE("1000 pps against 10/s burst 100 admits 110") {
    RateBucket bucket(*RateSpec::parse("10/s burst 100"));
    int admitted = 0;
    for (std::int64_t k = 0; k < 1000; ++k) {
      admitted += bucket.admit(kT0 + Duration(1'000'000'000LL * k / 999)) == RateBucket::Outcome::Admit;
    }
    CHECK(admitted == 110);
  }

  TEST_CASE("steady traffic at the limit is always admitted") {
    RateBucket bucket(*RateSpec::parse("20/s"));
    CHECK(bucket.capacity() == 20);
    for (int k = 0; k < 1000; ++k) {
      CHECK(bucket.admit(kT0 + std::chrono::milliseconds(50 * k)) == RateBucket::Outcome::Admit);
    }
  }

  TEST_CASE("first packet after a long idle period") {
    RateBucket bucket(*RateSpec::parse("1/h"));
    CHECK(bucket.admit(kT0) == RateBucket::Outcome::Admit);
    CHECK(bucket.admit(kT0 + std::chrono::seconds(1)) == RateBucket::Outcome::Exceed);
    CHECK(bucket.admit(kT0 + std::chrono::hours(1)) == RateBucket::Outcome::Admit);
  }

  TEST_CASE("clock regression") {
    RateBucket bucket(*RateSpec::parse("5/s"));
    bucket.admit(kT0 + std::chrono::seconds(1));
    CHECK_THROWS_AS(bucket.admit(kT0), ClockRegression);
    CHECK_NOTHROW(bucket.admit(kT0, true));
  }

  TEST_CASE("token bucket agrees with exact rational simulation") {
    std::mt19937_64 rng(7);
    const char* specs[] = {"10/s burst 100", "20/s", "2.5/min burst 3", "0.3/s", "1000/s burst 1", "7/h burst 2",
                           "33.3/s burst 50"};
    for (const char* text : specs) {
      CAPTURE(text);
      RateSpec spec = *RateSpec::parse(text);
      RateBucket bucket(spec);
      RationalBucket oracle(spec);
      Timestamp t = kT0;
      const double mean_gap_ns = 1e9 / spec.rate.per_second();
      std::exponential_distribution<double> gap(1.0 / mean_gap_ns * 1.5);
      for (int i = 0; i < 3000; ++i) {
        t = t + Duration(static_cast<std::int64_t>(gap(rng)));
        bool got = bucket.admit(t) == RateBucket::Outcome::Admit;
        REQUIRE(got == oracle.admit(t));
      }
    }
  }

  TEST_CASE("admissions in any window are bounded by capacity plus refill") {
    std::mt19937_64 rng(8);
    RateSpec spec = *RateSpec::parse("10/s burst 5");
    RateBucket bucket(spec);
    std::vector<Timestamp> admitted;
    Timestamp t = kT0;
    for (int i = 0; i < 4000; ++i) {
      t = t + Duration(std::uniform_int_distribution<std::int64_t>(0, 60'000'000)(rng));
      if (bucket.admit(t) == RateBucket::Outcome::Admit) admitted.push_back(t);
    }
    for (std::size_t i = 0; i < admitted.size(); ++i) {
      for (std::size_t j = i; j < admitted.size(); ++j) {
        Duration window = admitted[j] - admitted[i];
        if (window > std::chrono::seconds(3)) break;
        auto bound = 5 + static_cast<std::size_t>(std::ceil(10.0 * static_cast<double>(window.count()) / 1e9));
        REQUIRE(j - i + 1 <= bound);
      }
    }
  }

  TEST_CASE("transient limits") {
    Policy p;
    p.kind = PolicyKind::Transient;
    p.stats = Stats{std::nullopt, 5, std::nullopt};
    CHECK(transient_within(p, {5, kT0}, kT0) == Within::Expired);
    CHECK(transient_within(p, {4, kT0}, kT0) == Within::Within);

    p.stats = Stats{std::nullopt, std::nullopt, std::chrono::seconds(2)};
    Timestamp start{10, 0};
    CHECK(transient_within(p, {1, start}, Timestamp{11, 900000000}) == Within::Within);
    CHECK(transient_within(p, {1, start}, Timestamp{12, 0}) == Within::Within);
    CHECK(transient_within(p, {1, start}, Timestamp{12, 1}) == Within::Expired);

    p.stats = Stats{std::nullopt, 10, std::chrono::seconds(2)};
    CHECK(transient_within(p, {3, start}, Timestamp{12, 500000000}) == Within::Expired);
    CHECK(transient_within(p, {10, start}, Timestamp{10, 1}) == Within::Expired);
    CHECK(transient_within(p, {3, start}, Timestamp{11, 0}) == Within::Within);
  }
}
