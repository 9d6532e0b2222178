#include <doctest.h>

#include <json.hpp>
#include <set>
#include <tuple>

#include "profwall/craft.hpp"
#include "profwall/errors.hpp"
#include "profwall/fsm.hpp"
#include "support.hpp"

using namespace profwall;

namespace {

const Timestamp kT0{1700000000, 0};

struct Setup {
  Profile profile;
  Network net;
  DnsTable dns;
  SynthHosts hosts;

  explicit Setup(Profile p) : profile(std::move(p)), hosts(default_synth_hosts(profile.device_info)) {
    net.lan_prefixes = {*IpPrefix::parse("192.168.1.0/24")};
    net.gateway_addrs = {hosts.gateway_v4};
    net.profiled_addrs = {*profile.device_info.ipv4};
  }
  MatchEnv env() const { return MatchEnv{&profile.device_info, &net, &dns, {}, nullptr}; }
  Packet fwd(const InteractionFsm& m, std::size_t policy, Timestamp ts) const {
    return synthesize(m.spec(policy, Direction::Forward), hosts, ts);
  }
  Packet bwd(const InteractionFsm& m, std::size_t policy, Timestamp ts) const {
    return synthesize(m.spec(policy, Direction::Backward), hosts, ts);
  }
};

Policy policy(std::string name, PolicyKind kind, bool bidir, std::uint16_t port) {
  Policy p;
  p.name = std::move(name);
  p.kind = kind;
  p.bidirectional = bidir;
  p.match.ip = IpMatch{4, EndpointExpr::symbol(EndpointExpr::Kind::Self), EndpointExpr::symbol(EndpointExpr::Kind::Phone)};
  p.match.transport = TransportMatch{TransportProto::Udp, std::nullopt, PortRange::single(port)};
  if (kind == PolicyKind::Periodic) p.stats = Stats{RateSpec::parse("50/s burst 10"), std::nullopt, std::nullopt};
  if (kind == PolicyKind::Transient) p.stats = Stats{std::nullopt, 8, std::chrono::seconds(5)};
  return p;
}

Profile one_interaction(std::vector<Policy> policies) {
  Profile p;
  p.device_info = DeviceInfo{"dev", *MacAddr::parse("02:00:00:00:00:77"), IpAddr::parse("192.168.1.77"), std::nullopt};
  p.interactions.push_back(Interaction{"i", std::move(policies)});
  return p;
}

}  // namespace

TEST_SUITE("fsm") {
  TEST_CASE("interaction of one-off, periodic and transient policies") {
    Profile p = testing::load_fixture("smart-lamp.yaml");
    InteractionFsm m = compile_interaction(p.interactions[0]);
    REQUIRE(m.states().size() == 4);
    CHECK(m.states()[0] == FsmState{0, DirSel::Forward, PolicyKind::OneOff});
    CHECK(m.states()[1] == FsmState{0, DirSel::Backward, PolicyKind::OneOff});
    CHECK(m.states()[2] == FsmState{1, DirSel::Forward, PolicyKind::Periodic});
    CHECK(m.states()[3] == FsmState{2, DirSel::Both, PolicyKind::Transient});

    const std::set<FsmTransition> expected{
        {0, 0, DirSel::Forward, Guard::Match, 1},    {1, 0, DirSel::Backward, Guard::SecondDirection, 2},
        {2, 1, DirSel::Forward, Guard::Self, 2},     {2, 2, DirSel::Forward, Guard::NextMatch, 3},
        {3, 2, DirSel::Both, Guard::Self, 3},        {3, 0, DirSel::Forward, Guard::NextMatch, 1},
        {3, 2, DirSel::Any, Guard::Expiry, 0},       {3, 0, DirSel::Forward, Guard::Expiry, 1},
    };
    CHECK(m.transitions().size() == 8);
    CHECK(std::set<FsmTransition>(m.transitions().begin(), m.transitions().end()) == expected);

    // The drawn machine: one arrow per (from, to), with the expiry
    // shortcut folded into the expiry arrow.
    std::set<std::tuple<std::size_t, std::size_t>> arrows;
    for (const auto& t : m.transitions()) {
      if (t.guard == Guard::Expiry && t.dir != DirSel::Any) continue;
      arrows.insert({t.from, t.to});
    }
    const std::set<std::tuple<std::size_t, std::size_t>> drawn{{0, 1}, {1, 2}, {2, 2}, {2, 3},
                                                               {3, 3}, {3, 1}, {3, 0}};
    CHECK(arrows == drawn);

    for (std::size_t s = 0; s < m.states().size(); ++s) {
      const auto& out = m.outgoing(s);
      for (std::size_t k = 1; k < out.size(); ++k) {
        CHECK_FALSE((m.transitions()[out[k]].guard == Guard::NextMatch &&
                     m.transitions()[out[k - 1]].guard != Guard::NextMatch));
      }
    }
  }

  TEST_CASE("single one-off policy") {
    InteractionFsm m = compile_interaction({"i", {policy("p", PolicyKind::OneOff, false, 1000)}});
    CHECK(m.states().size() == 1);
    REQUIRE(m.transitions().size() == 1);
    CHECK(m.transitions()[0] == FsmTransition{0, 0, DirSel::Forward, Guard::Match, 0});
  }

  TEST_CASE("two bidirectional one-off policies") {
    InteractionFsm m = compile_interaction(
        {"i", {policy("a", PolicyKind::OneOff, true, 1000), policy("b", PolicyKind::OneOff, true, 1001)}});
    CHECK(m.states().size() == 4);
    CHECK(m.transitions().size() == 4);
    CHECK(m.entry(1) == 2);
  }

  TEST_CASE("empty interaction") { CHECK_THROWS_AS(compile_interaction({"i", {}}), CompileError); }

  TEST_CASE("walking the machine") {
    Setup s(testing::load_fixture("smart-lamp.yaml"));
    InteractionFsm m = compile_interaction(s.profile.interactions[0]);
    FsmRuntime rt(m);
    auto at = [](int ms) { return kT0 + std::chrono::milliseconds(ms); };

    StepResult r = step(rt, s.bwd(m, 0, at(0)), s.env());
    CHECK_FALSE(r.accepted);
    CHECK(r.reason == Reason::WrongState);
    CHECK(rt.current == 0);

    CHECK(step(rt, s.fwd(m, 0, at(10)), s.env()).state_after == 1);
    CHECK(step(rt, s.bwd(m, 0, at(20)), s.env()).state_after == 2);
    CHECK(step(rt, s.fwd(m, 1, at(30)), s.env()).state_after == 2);
    r = step(rt, s.fwd(m, 2, at(40)), s.env());
    CHECK(r.accepted);
    CHECK(r.state_after == 3);
    CHECK(rt.counters[3].packets == 1);
    CHECK(step(rt, s.bwd(m, 2, at(50)), s.env()).state_after == 3);
    CHECK(rt.counters[3].packets == 2);

    SUBCASE("a packet past the time limit leaves through the expiry edge") {
      Packet late_c = s.fwd(m, 2, at(2100));
      r = step(rt, late_c, s.env());
      CHECK_FALSE(r.accepted);
      CHECK(r.reason == Reason::WrongState);
      CHECK(rt.current == 3);
      r = step(rt, s.fwd(m, 0, at(2200)), s.env());
      CHECK(r.accepted);
      CHECK(r.state_before == 3);
      CHECK(r.state_after == 1);
    }
    SUBCASE("the packet limit") {
      for (int k = 0; k < 3; ++k) CHECK(step(rt, s.fwd(m, 2, at(60 + k)), s.env()).accepted);
      CHECK(rt.counters[3].packets == 5);
      CHECK_FALSE(step(rt, s.fwd(m, 2, at(70)), s.env()).accepted);
    }
    SUBCASE("next policy before expiry") {
      r = step(rt, s.fwd(m, 0, at(60)), s.env());
      CHECK(r.accepted);
      CHECK(r.state_after == 1);
    }
  }

  TEST_CASE("rate-limited packet leaves the runtime untouched") {
    Setup s(testing::load_fixture("smart-lamp.yaml"));
    InteractionFsm m = compile_interaction(s.profile.interactions[0]);
    FsmRuntime rt(m);
    step(rt, s.fwd(m, 0, kT0), s.env());
    step(rt, s.bwd(m, 0, kT0), s.env());
    for (int k = 0; k < 5; ++k) CHECK(step(rt, s.fwd(m, 1, kT0), s.env()).accepted);
    FsmRuntime before = rt;
    StepResult r = step(rt, s.fwd(m, 1, kT0), s.env());
    CHECK(r.reason == Reason::RateExceeded);
    CHECK(r.policy == std::optional<std::size_t>(1));
    CHECK(rt == before);
  }

  TEST_CASE("happy paths of random interactions are accepted") {
    std::mt19937_64 rng(41);
    const PolicyKind kinds[] = {PolicyKind::OneOff, PolicyKind::Transient, PolicyKind::Periodic};
    for (int round = 0; round < 300; ++round) {
      std::size_t n = std::uniform_int_distribution<std::size_t>(1, 4)(rng);
      std::vector<Policy> policies;
      for (std::size_t i = 0; i < n; ++i) {
        policies.push_back(policy("p" + std::to_string(i), kinds[std::uniform_int_distribution<int>(0, 2)(rng)],
                                  std::uniform_int_distribution<int>(0, 1)(rng) == 1,
                                  static_cast<std::uint16_t>(2000 + i)));
      }
      Setup s(one_interaction(policies));
      InteractionFsm m = compile_interaction(s.profile.interactions[0]);
      HappyOptions opts;
      opts.cycles = 3;
      Trace t = happy_trace(s.profile, s.hosts, opts);
      FsmRuntime rt(m);
      for (std::size_t k = 0; k < t.packets.size(); ++k) {
        StepResult r = step(rt, t.packets[k], s.env());
        CAPTURE(round);
        CAPTURE(k);
        REQUIRE(r.accepted);
      }
    }
  }

  TEST_CASE("graph output") {
    InteractionFsm m = compile_interaction(testing::load_fixture("smart-lamp.yaml").interactions[0]);
    auto j = nlohmann::json::parse(fsm_to_json(m));
    CHECK(j["v"] == 1);
    CHECK(j["interaction"] == "voice-command");
    CHECK(j["states"].size() == 4);
    CHECK(j["transitions"].size() == 8);
    CHECK(j["transitions"][1]["guard"] == "second-direction");
    std::string dot = fsm_to_dot(m);
    CHECK(dot.rfind("digraph", 0) == 0);
    CHECK(dot.find("s3 -> s1") != std::string::npos);
  }
}
