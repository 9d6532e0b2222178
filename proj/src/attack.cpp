#include <cmath>

#include <json.hpp>

#include "profwall/errors.hpp"
#include "profwall/harness.hpp"

namespace profwall {

Gcra::Gcra(const RateSpec& spec)
    : numerator_(static_cast<std::int64_t>(spec.rate.numerator)),
      increment_(static_cast<__int128>(spec.rate.unit_duration().count()) * static_cast<__int128>(spec.rate.denominator)),
      tolerance_(static_cast<__int128>(spec.capacity() - 1) * increment_) {}

bool Gcra::conforms(Timestamp ts) {
  __int128 t = static_cast<__int128>(ts.ns()) * numerator_;
  if (!tat_) tat_ = t;
  if (*tat_ > t + tolerance_) return false;
  tat_ = std::max(*tat_, t) + increment_;
  return true;
}

std::optional<Scenario> parse_scenario(std::string_view text) {
  if (text == "A1" || text == "a1") return Scenario::A1;
  if (text == "A2" || text == "a2") return Scenario::A2;
  if (text == "A3" || text == "a3") return Scenario::A3;
  if (text == "A4" || text == "a4") return Scenario::A4;
  return std::nullopt;
}

std::string_view to_string(Scenario s) {
  switch (s) {
    case Scenario::A1: return "A1";
    case Scenario::A2: return "A2";
    case Scenario::A3: return "A3";
    case Scenario::A4: return "A4";
  }
  return "?";
}

namespace {

Host host(const char* mac, const char* ip) { return {*MacAddr::parse(mac), *IpAddr::parse(ip)}; }

}  // namespace

AttackParams default_attack_params(Scenario s) {
  AttackParams p;
  p.attacker = host("02:00:00:00:00:50", "192.168.1.50");
  p.dns_server = host("02:00:00:00:00:01", "192.168.1.1");
  p.cloud = host("02:00:00:00:00:01", "52.28.101.7");
  if (s == Scenario::A1) {
    p.target = host("00:17:88:6a:12:01", "192.168.1.20");
    p.limit = *RateSpec::parse("10/s burst 100");
  } else {
    p.target = host("50:c7:bf:3a:45:01", "192.168.1.30");
    p.limit = *RateSpec::parse("20/s");
  }
  return p;
}

AttackTrace gen_attack(Scenario s, const AttackParams& params) {
  if (params.attacker.ip.version() != params.target.ip.version()) {
    throw BadParams("attacker and target must use the same IP version");
  }
  AttackTrace out;
  Timestamp t = params.start;
  auto add = [&](Packet p, Decision d, Reason r) {
    out.trace.packets.push_back(std::move(p));
    out.expected.push_back(d);
    out.expected_reason.push_back(r);
  };
  auto arp_prelude = [&]() {
    add(make_arp(t, ArpOp::Request, params.attacker, params.target), Decision::Accept, Reason::Matched);
    add(make_arp(t + std::chrono::milliseconds(1), ArpOp::Reply, params.target, params.attacker), Decision::Accept,
        Reason::Matched);
    t = t + std::chrono::milliseconds(10);
  };

  switch (s) {
    case Scenario::A1:
    case Scenario::A2: {
      if (!(params.pps > 0) || !std::isfinite(params.pps)) throw BadParams("pps must be positive");
      if (!(params.duration > 0) || !std::isfinite(params.duration)) throw BadParams("duration must be positive");
      const auto n = static_cast<std::int64_t>(std::llround(params.pps * params.duration));
      if (n < 1) throw BadParams("pps * duration must be at least one packet");
      const std::uint16_t port = params.port ? params.port : (s == Scenario::A1 ? 443 : 9999);
      if (s == Scenario::A2 && params.prelude) arp_prelude();
      const auto span = static_cast<__int128>(std::llround(params.duration * 1e9));
      Gcra oracle(params.limit);
      for (std::int64_t k = 0; k < n; ++k) {
        auto offset = n == 1 ? __int128{0} : span * k / (n - 1);
        Timestamp ts = t + Duration(static_cast<std::int64_t>(offset));
        bool ok = oracle.conforms(ts);
        add(make_tcp(ts, params.attacker, params.target, s == Scenario::A1 ? 50000 : 50001, port),
            ok ? Decision::Accept : Decision::Drop, ok ? Reason::Matched : Reason::RateExceeded);
      }
      break;
    }
    case Scenario::A3: {
      if (params.count == 0) throw BadParams("count must be positive");
      if (params.prelude) arp_prelude();
      const std::uint16_t port = params.port ? params.port : 9999;
      for (std::size_t k = 0; k < params.count; ++k) {
        Timestamp ts = t + std::chrono::milliseconds(100 * static_cast<std::int64_t>(k));
        add(make_tcp(ts, params.attacker, params.target, 50002, port),
            params.prelude ? Decision::Accept : Decision::Drop,
            params.prelude ? Reason::Matched : Reason::WrongState);
      }
      break;
    }
    case Scenario::A4: {
      if (params.count == 0) throw BadParams("count must be positive");
      if (params.cloud.ip.version() != params.target.ip.version()) {
        throw BadParams("cloud and target must use the same IP version");
      }
      if (params.prelude) {
        add(make_dns_query(t, params.target, params.dns_server, 53000, 0x2a2a, params.domain), Decision::Accept,
            Reason::Matched);
        add(make_dns_response(t + std::chrono::milliseconds(5), params.dns_server, params.target, 53000, 0x2a2a,
                              params.domain, {params.cloud.ip}),
            Decision::Accept, Reason::Matched);
        t = t + std::chrono::milliseconds(10);
      }
      const std::uint16_t port = params.port ? params.port : 443;
      for (std::size_t k = 0; k < params.count; ++k) {
        Timestamp ts = t + std::chrono::milliseconds(100 * static_cast<std::int64_t>(k));
        add(make_tcp(ts, params.cloud, params.target, port, 50003),
            params.prelude ? Decision::Accept : Decision::Drop,
            params.prelude ? Reason::Matched : Reason::UnresolvedName);
      }
      break;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

std::string sidecar_to_json(const std::vector<Decision>& expected, const EditLog& edits) {
  nlohmann::json e = nlohmann::json::array();
  for (auto d : expected) e.push_back(to_string(d));
  nlohmann::json log = nlohmann::json::array();
  for (const auto& x : edits) {
    log.push_back({{"index", x.index},
                   {"layer", x.layer},
                   {"field", x.field},
                   {"old", x.old_value},
                   {"new", x.new_value},
                   {"seed", x.seed}});
  }
  return nlohmann::json{{"v", 1}, {"expected", e}, {"edits", log}}.dump();
}

Sidecar parse_sidecar(std::string_view text) {
  nlohmann::json doc = nlohmann::json::parse(text, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) throw FormatError("sidecar is not a JSON object");
  if (doc.contains("v") && doc["v"] != 1) throw FormatError("unsupported sidecar version");
  Sidecar out;
  if (!doc.contains("expected") || !doc["expected"].is_array()) throw FormatError("sidecar lacks \"expected\"");
  for (const auto& v : doc["expected"]) {
    if (v == "ACCEPT") out.expected.push_back(Decision::Accept);
    else if (v == "DROP") out.expected.push_back(Decision::Drop);
    else throw FormatError("expected verdicts must be ACCEPT or DROP");
  }
  if (doc.contains("edits")) {
    try {
      for (const auto& x : doc["edits"]) {
        out.edits.push_back({x.at("index").get<std::size_t>(), x.at("layer").get<std::string>(),
                             x.at("field").get<std::string>(), x.at("old").get<std::string>(),
                             x.at("new").get<std::string>(), x.at("seed").get<std::uint64_t>()});
      }
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(std::string("malformed edit: ") + e.what());
    }
  }
  return out;
}

}  // namespace profwall
