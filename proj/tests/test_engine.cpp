#include <doctest.h>

#include <json.hpp>

#include "profwall/craft.hpp"
#include "profwall/engine.hpp"
#include "profwall/errors.hpp"
#include "profwall/harness.hpp"
#include "profwall/profile_parser.hpp"
#include "support.hpp"

using namespace profwall;

namespace {

const Timestamp kT0{1700000000, 0};

Host host(const char* mac, const char* ip) { return {*MacAddr::parse(mac), *IpAddr::parse(ip)}; }

const Host kPhone = host("02:00:00:00:00:50", "192.168.1.50");
const Host kPlug = host("50:c7:bf:3a:45:01", "192.168.1.30");
const Host kRouter = host("02:00:00:00:00:01", "192.168.1.1");

Profile plug() { return load_profile_file(testing::source_path("profiles/tplink-plug.yaml")); }

EngineConfig lan() {
  EngineConfig c;
  c.lan_prefixes = {*IpPrefix::parse("192.168.1.0/24")};
  c.gateway_addrs = {kRouter.ip};
  return c;
}

Packet with_cname(Packet p, const std::string& alias, const std::string& target, const IpAddr& addr) {
  auto& m = std::get<DnsMessage>(p.app->message);
  m.questions = {DnsQuestion{alias, 1, 1}};
  DnsRecord cname{alias, 5, 1, 60, std::nullopt, target, {}};
  DnsRecord a{target, 1, 1, 60, addr, std::nullopt, {}};
  m.answers = {cname, a};
  return rebuild(p);
}

}  // namespace

TEST_SUITE("engine") {
  TEST_CASE("traffic between unprofiled hosts follows the default") {
    Engine e(lan());
    e.register_profile(plug());
    Packet p = make_tcp(kT0, kPhone, kRouter, 40000, 80);
    Verdict v = e.process_packet(p);
    CHECK(v.decision == Decision::Accept);
    CHECK(v.reason == Reason::DefaultAccept);
    CHECK(v.device == "unprofiled");

    EngineConfig strict = lan();
    strict.default_unprofiled = Decision::Drop;
    Engine d(strict);
    CHECK(d.process_packet(p).decision == Decision::Drop);
  }

  TEST_CASE("registration") {
    Engine e(lan());
    e.register_profile(plug());
    CHECK(e.device_count() == 1);
    CHECK(e.runtime_count() == 13);
    CHECK_THROWS_AS(e.register_profile(plug()), DuplicateDevice);
    Profile same_ip = plug();
    same_ip.device_info.name = "other";
    same_ip.device_info.mac = *MacAddr::parse("02:00:00:00:00:99");
    CHECK_THROWS_AS(e.register_profile(same_ip), DuplicateDevice);
    CHECK(e.device_count() == 1);
  }

  TEST_CASE("a profile without interactions drops everything for its device") {
    Profile empty;
    empty.device_info = DeviceInfo{"silent", kPlug.mac, kPlug.ip, std::nullopt};
    Engine e(lan());
    e.register_profile(empty);
    Verdict v = e.process_packet(make_tcp(kT0, kPhone, kPlug, 40000, 9999));
    CHECK(v.decision == Decision::Drop);
    CHECK(v.device == "silent");
    CHECK(v.reason == Reason::NoPolicyMatch);
  }

  TEST_CASE("out-of-sequence control traffic") {
    AttackParams params = default_attack_params(Scenario::A3);
    AttackTrace a = gen_attack(Scenario::A3, params);
    ReplayReport r = testing::replay({plug()}, lan(), a.trace);
    CHECK(r.dropped == 5);
    CHECK(r.per_reason["WRONG_STATE"] == 5);
    CHECK(r.verdicts[0].interaction == std::optional<std::string>("local-control"));

    params.prelude = true;
    a = gen_attack(Scenario::A3, params);
    r = testing::replay({plug()}, lan(), a.trace);
    CHECK(r.accepted == 7);
  }

  TEST_CASE("DNS answers are learned only from accepted responses") {
    Engine e(lan());
    e.register_profile(plug());
    IpAddr cloud = *IpAddr::parse("52.28.101.7");
    Packet resp = make_dns_response(kT0, kRouter, kPlug, 41000, 7, "devs.tplinkcloud.com", {cloud});
    CHECK(e.process_packet(resp).decision == Decision::Drop);
    CHECK(e.dns().empty());

    Packet query = make_dns_query(kT0, kPlug, kRouter, 41000, 7, "devs.tplinkcloud.com");
    CHECK(e.process_packet(query).decision == Decision::Accept);
    CHECK(e.dns().empty());
    CHECK(e.process_packet(resp).decision == Decision::Accept);
    CHECK(e.dns().lookup("devs.tplinkcloud.com") == std::set<IpAddr>{cloud});
  }

  TEST_CASE("CNAME chains resolve to the queried name") {
    Engine e(lan());
    IpAddr addr = *IpAddr::parse("52.28.101.9");
    Packet resp = make_dns_response(kT0, kRouter, kPlug, 41000, 7, "devs.tplinkcloud.com", {addr});
    e.dns_observe(with_cname(resp, "devs.tplinkcloud.com", "edge.cdn.example", addr));
    CHECK(e.dns().lookup("devs.tplinkcloud.com").count(addr) == 1);
    CHECK(e.dns().lookup("edge.cdn.example").count(addr) == 1);

    e.dns_observe(make_dns_query(kT0, kPlug, kRouter, 41000, 8, "q.example"));
    CHECK(e.dns().lookup("q.example").empty());
  }

  TEST_CASE("timestamps going backwards") {
    Engine e(lan());
    e.register_profile(plug());
    e.process_packet(make_tcp(kT0 + std::chrono::seconds(1), kPhone, kRouter, 1, 2));
    CHECK_THROWS_AS(e.process_packet(make_tcp(kT0, kPhone, kRouter, 1, 2)), ClockRegression);

    Trace t;
    t.packets = {make_tcp(kT0 + std::chrono::seconds(1), kPhone, kRouter, 1, 2), make_tcp(kT0, kPhone, kRouter, 1, 2)};
    Engine r(lan());
    ReplayReport rep = r.run_replay(t);
    CHECK(rep.verdicts[1].decision == Decision::Drop);
    CHECK(rep.verdicts[1].reason == Reason::Error);
    CHECK_FALSE(rep.verdicts[1].error.empty());

    EngineConfig live = lan();
    live.clock_mode = ClockMode::Live;
    Engine l(live);
    CHECK(l.run_replay(t).verdicts[1].reason == Reason::DefaultAccept);
  }

  TEST_CASE("dropped packets leave the state unchanged") {
    for (const auto& f : testing::base_fixtures()) {
      CAPTURE(f.name);
      FuzzResult fz = fuzz_trace(testing::happy_for(f.profiles, 2), 3, 0.3);
      Engine e(testing::fixture_config());
      for (const auto& p : f.profiles) e.register_profile(p);
      for (const auto& pkt : fz.trace.packets) {
        Engine::Snapshot before = e.snapshot();
        if (e.process_packet(pkt).decision == Decision::Drop) REQUIRE(e.snapshot() == before);
      }
    }
  }

  TEST_CASE("replay is deterministic") {
    for (const auto& f : testing::base_fixtures()) {
      Trace t = fuzz_trace(testing::happy_for(f.profiles, 2), 9, 0.3).trace;
      ReplayReport a = testing::replay(f.profiles, testing::fixture_config(), t);
      ReplayReport b = testing::replay(f.profiles, testing::fixture_config(), t);
      CHECK(a.verdicts == b.verdicts);
    }
  }

  TEST_CASE("empty trace") {
    Engine e(lan());
    ReplayReport r = e.run_replay(Trace{});
    CHECK(r.verdicts.empty());
    CHECK(r.accepted == 0);
    CHECK(r.latency().mean == 0);
  }

  TEST_CASE("reports") {
    Trace t;
    t.packets = {make_tcp(kT0, kPhone, kPlug, 40000, 9999)};
    ReplayReport r = testing::replay({plug()}, lan(), t);
    auto line = nlohmann::json::parse(verdict_to_json(r.verdicts[0], 0, kT0));
    CHECK(line["v"] == 1);
    CHECK(line["ts"] == "1700000000.000000000");
    CHECK(line["decision"] == "DROP");
    CHECK(line["reason"] == "WRONG_STATE");
    CHECK(line["device"] == "tplink-hs110");
    auto rep = nlohmann::json::parse(report_to_json(r));
    CHECK(rep["dropped"] == 1);
    CHECK(rep["per_device"]["tplink-hs110"]["dropped"] == 1);
    CHECK(verdict_log(r, t).size() > 0);
  }

  TEST_CASE("latency percentiles") {
    LatencyStats s = latency_stats({4, 1, 3, 2});
    CHECK(s.mean == doctest::Approx(2.5));
    CHECK(s.p2_5 == doctest::Approx(1.075));
    CHECK(s.p97_5 == doctest::Approx(3.925));
  }

  TEST_CASE("configuration text") {
    EngineConfig c = parse_engine_config(
        "lan_prefixes: [192.168.1.0/24]\ngateway_addrs: [192.168.1.1]\ndefault_unprofiled: DROP\nclock_mode: "
        "LIVE\ndns_max_age: 300\n");
    CHECK(c.lan_prefixes.size() == 1);
    CHECK(c.default_unprofiled == Decision::Drop);
    CHECK(c.clock_mode == ClockMode::Live);
    CHECK(c.dns_max_age == std::optional<Duration>(std::chrono::seconds(300)));
    EngineConfig j = parse_engine_config(R"({"lan_prefixes":["10.0.0.0/8"],"gateway_addrs":[]})");
    CHECK(j.default_unprofiled == Decision::Accept);
    CHECK_THROWS_AS(parse_engine_config("lan: []\n"), std::invalid_argument);
    CHECK_THROWS_AS(parse_engine_config("default_unprofiled: MAYBE\n"), std::invalid_argument);
  }

  TEST_CASE("effort categories") {
    CHECK(categorize({false, false}) == EffortCategory::A);
    CHECK(categorize({true, false}) == EffortCategory::B);
    CHECK(categorize({false, true}) == EffortCategory::C);
    CHECK(categorize({true, true}) == EffortCategory::D);
  }
}
