#include <doctest.h>

#include "profwall/errors.hpp"
#include "profwall/profile_parser.hpp"
#include "support.hpp"

using namespace profwall;

namespace {

std::string what_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const std::exception& e) {
    return e.what();
  }
  return {};
}

const char* kDevice = R"(device-info:
  name: d
  mac: 02:00:00:00:00:01
  ipv4: 192.168.1.9
)";

}  // namespace

TEST_SUITE("parser") {
  TEST_CASE("minimal profile with an in-file include") {
    Profile p = testing::load_fixture("dns-https.yaml");
    CHECK(p.device_info.name == "dns-https-server");
    REQUIRE(p.interactions.size() == 1);
    const Interaction& ia = p.interactions[0];
    CHECK(ia.name == "dns-https-server");
    REQUIRE(ia.policies.size() == 2);
    CHECK(ia.policies[0].name == "dns-server");
    CHECK(ia.policies[0].kind == PolicyKind::OneOff);
    CHECK(ia.policies[0].bidirectional);
    const auto& dns = std::get<DnsMatch>(ia.policies[0].match.app->spec);
    CHECK(dns.domain_name == "my.server.com");
    CHECK(dns.qtype == 1);
    CHECK(ia.policies[1].name == "https-server");
    CHECK(ia.policies[1].kind == PolicyKind::Periodic);
    CHECK(ia.policies[1].rate()->capacity() == 20);
    CHECK(ia.policies[1].match.ip->dst->kind == EndpointExpr::Kind::Domain);
  }

  TEST_CASE("include cycle is reported with its chain") {
    std::string msg = what_of([] { testing::load_fixture("includes/cycle-a.yaml"); });
    CHECK(msg.find("include cycle") != std::string::npos);
    CHECK(msg.find("cycle-a.yaml:patterns.p -> cycle-b.yaml:patterns.q -> cycle-a.yaml:patterns.p") !=
          std::string::npos);
    CHECK_THROWS_AS(testing::load_fixture("includes/cycle-a.yaml"), ResolutionError);
  }

  TEST_CASE("override fills a placeholder two include levels deep") {
    Profile nested = testing::load_fixture("includes/nested.yaml");
    Profile flat = testing::load_fixture("includes/flat.yaml");
    const auto& dns = std::get<DnsMatch>(nested.interactions[0].policies[0].match.app->spec);
    CHECK(dns.domain_name == "my.server.com");
    CHECK(nested == flat);
  }

  TEST_CASE("override of a missing path") {
    CHECK_THROWS_AS(testing::load_fixture("includes/bad-override.yaml"), ResolutionError);
    CHECK(what_of([] { testing::load_fixture("includes/bad-override.yaml"); }).find("foo.bar") != std::string::npos);
  }

  TEST_CASE("dangling include names the reference") {
    CHECK(what_of([] { testing::load_fixture("includes/dangling.yaml"); }).find("patterns.missing") !=
          std::string::npos);
  }

  TEST_CASE("missing include file") {
    std::string src = std::string(kDevice) + "interactions:\n  i:\n    p: !include nowhere.yaml:patterns.x\n";
    CHECK_THROWS_AS(parse_profile(src, [](const std::string&) { return std::nullopt; }), ResolutionError);
  }

  TEST_CASE("resolve_include copies the target verbatim") {
    DocumentSet docs;
    docs.add("lib", yaml::parse("patterns:\n  dns-p:\n    protocols:\n      dns: {qtype: A}\n", "lib"));
    auto ref = IncludeRef::parse("patterns.dns-p");
    REQUIRE(ref);
    yaml::Node n = resolve_include(*ref, "lib", docs);
    REQUIRE(n.is_mapping());
    const yaml::Node* q = n.find("protocols")->find("dns")->find("qtype");
    REQUIRE(q);
    CHECK(q->scalar == "A");
  }

  TEST_CASE("file-qualified include target") {
    auto ref = IncludeRef::parse("lib.yaml:patterns.dns-p");
    REQUIRE(ref);
    CHECK(ref->file == "lib.yaml");
    CHECK(ref->path == std::vector<std::string>{"patterns", "dns-p"});
    CHECK(ref->target() == "lib.yaml:patterns.dns-p");
    CHECK_FALSE(IncludeRef::parse("lib.yaml:"));
    CHECK_FALSE(IncludeRef::parse("patterns..x"));
  }

  TEST_CASE("duplicate keys are syntax errors with a position") {
    std::string src = std::string(kDevice) + "interactions:\n  i:\n    p:\n      protocols: {}\n    p:\n      protocols: {}\n";
    try {
      parse_profile(src);
      FAIL("expected SyntaxError");
    } catch (const SyntaxError& e) {
      CHECK(e.line() == 9);
      CHECK(e.column() == 5);
    }
  }

  TEST_CASE("anchors and aliases") {
    std::string src = std::string(kDevice) +
                      "interactions:\n  i:\n    a:\n      protocols: &udp\n        ipv4: {src: self}\n        "
                      "udp: {dst-port: 53}\n    b:\n      protocols: *udp\n";
    Profile p = parse_profile(src);
    CHECK(p.interactions[0].policies[0].match == p.interactions[0].policies[1].match);
  }

  TEST_CASE("validation diagnostics") {
    auto diags = [](const std::string& body) {
      try {
        parse_profile(std::string(kDevice) + body);
      } catch (const ValidationError& e) {
        return e.diagnostics();
      }
      return std::vector<Diagnostic>{};
    };
    auto one_off_stats =
        diags(
        "interactions:\n  i:\n    p:\n      type: one-off\n      protocols: {ipv4: {src: self}}\n      stats: "
        "{packet-count: 3}\n");
    REQUIRE(one_off_stats.size() == 1);
    CHECK(one_off_stats[0].message == "one-off policy must not carry stats");

    auto transient = diags("interactions:\n  i:\n    p:\n      type: transient\n      protocols: {ipv4: {src: self}}\n");
    REQUIRE(transient.size() == 1);
    CHECK(transient[0].message == "transient policy requires max_duration or max_packets");

    auto periodic = diags(
        "interactions:\n  i:\n    p:\n      type: periodic\n      protocols: {ipv4: {src: self}}\n      stats: "
        "{packet-count: 3}\n");
    REQUIRE_FALSE(periodic.empty());
    CHECK(periodic[0].message == "periodic policy requires a rate");

    auto empty = diags("interactions:\n  i:\n    p:\n      bidirectional: true\n      protocols: {}\n");
    REQUIRE(empty.size() == 1);
    CHECK(empty[0].message == "policy must match at least one protocol layer");
  }

  TEST_CASE("durations and rates") {
    auto transient = [](const std::string& d) {
      Profile p = parse_profile(std::string(kDevice) +
                                "interactions:\n  i:\n    p:\n      type: transient\n      protocols: {ipv4: {src: "
                                "self}}\n      stats: {duration: " +
                                d + "}\n");
      return *p.interactions[0].policies[0].stats->max_duration;
    };
    CHECK(transient("2") == std::chrono::seconds(2));
    CHECK(transient("2.5") == std::chrono::milliseconds(2500));
    CHECK(transient("2.5s") == std::chrono::milliseconds(2500));
    CHECK(transient("500ms") == std::chrono::milliseconds(500));
    CHECK_THROWS_AS(transient("0.0005"), SyntaxError);

    auto r = RateSpec::parse("10/second burst 100 packets");
    REQUIRE(r);
    CHECK(r->capacity() == 100);
    CHECK(r->rate.per_second() == doctest::Approx(10));
    auto bare = RateSpec::parse("20/s");
    REQUIRE(bare);
    CHECK(bare->capacity() == 20);
    auto slow = RateSpec::parse("2.5/min");
    REQUIRE(slow);
    CHECK(slow->capacity() == 1);
    CHECK_FALSE(RateSpec::parse("fast"));
  }

  TEST_CASE("canonical text parses back to the same profile") {
    for (const auto& f : testing::base_fixtures()) {
      for (const auto& p : f.profiles) {
        CAPTURE(p.device_info.name);
        CHECK(parse_profile(to_yaml(p)) == p);
      }
    }
  }

  TEST_CASE("shipped plug profile size") {
    Profile plug = load_profile_file(testing::source_path("profiles/tplink-plug.yaml"));
    CHECK(plug.interactions.size() == 13);
    CHECK(plug.policy_count() == 35);
  }

  TEST_CASE("directory loading skips include libraries") {
    auto profiles = load_profile_dir(testing::source_path("profiles"));
    REQUIRE(profiles.size() == 2);
    CHECK(profiles[0].device_info.name == "philips-hue-bridge");
    CHECK(profiles[1].device_info.name == "tplink-hs110");
  }
}
