#include "profwall/matcher.hpp"

#include <algorithm>

#include "profwall/errors.hpp"

namespace profwall {

bool Network::is_local(const IpAddr& a) const {
  return std::any_of(lan_prefixes.begin(), lan_prefixes.end(), [&](const IpPrefix& p) { return p.contains(a); });
}

namespace {

// Three-valued conjunction: NoMatch dominates, then Unresolved.
class Verdict3 {
 public:
  bool fail() const { return no_; }
  void add(MatchResult r) {
    if (r == MatchResult::NoMatch) no_ = true;
    if (r == MatchResult::Unresolved) unresolved_ = true;
  }
  void require(bool ok) {
    if (!ok) no_ = true;
  }
  MatchResult result() const {
    if (no_) return MatchResult::NoMatch;
    return unresolved_ ? MatchResult::Unresolved : MatchResult::Match;
  }

 private:
  bool no_ = false;
  bool unresolved_ = false;
};

bool mac_matches(const MacExpr& e, const MacAddr& m, const MatchEnv& env) {
  switch (e.kind) {
    case MacExpr::Kind::Literal: return e.addr == m;
    case MacExpr::Kind::Self: return env.device && env.device->mac == m;
    case MacExpr::Kind::Any: return true;
  }
  return false;
}

MatchResult endpoint_matches(const EndpointExpr& e, const IpAddr& a, const MatchEnv& env) {
  auto b = [](bool v) { return v ? MatchResult::Match : MatchResult::NoMatch; };
  switch (e.kind) {
    case EndpointExpr::Kind::Literal: return b(e.addr == a);
    case EndpointExpr::Kind::Self: return b(env.device && env.device->has_ip(a));
    case EndpointExpr::Kind::Local: return b(env.net && env.net->is_local(a));
    case EndpointExpr::Kind::Gateway: return b(env.net && env.net->is_gateway(a));
    case EndpointExpr::Kind::Phone: return b(env.net && env.net->is_phone(a));
    case EndpointExpr::Kind::Any: return MatchResult::Match;
    case EndpointExpr::Kind::Domain: {
      if (env.effort) env.effort->dns_lookup = true;
      if (!env.dns) return MatchResult::Unresolved;
      switch (env.dns->check(e.domain, a)) {
        case DnsTable::Lookup::Unknown: return MatchResult::Unresolved;
        case DnsTable::Lookup::Resolves: return MatchResult::Match;
        case DnsTable::Lookup::Other: return MatchResult::NoMatch;
      }
    }
  }
  return MatchResult::NoMatch;
}

bool domain_matches(const std::string& pattern, const std::string& name) {
  std::string n = normalize_domain(name);
  if (pattern.size() > 2 && pattern.substr(0, 2) == "*.") {
    std::string_view suffix(pattern);
    suffix.remove_prefix(2);
    return n.size() > suffix.size() && n.compare(n.size() - suffix.size(), suffix.size(), suffix) == 0 &&
           n[n.size() - suffix.size() - 1] == '.';
  }
  return n == pattern;
}

bool dns_matches(const DnsMatch& m, const DnsMessage& msg) {
  if (m.qr && (*m.qr == DnsQr::Response) != msg.is_response()) return false;
  if (m.qtype || m.domain_name) {
    if (msg.questions.empty()) return false;
    const auto& q = msg.questions.front();
    if (m.qtype && q.qtype != *m.qtype) return false;
    if (m.domain_name && !domain_matches(*m.domain_name, q.name)) return false;
  }
  return true;
}

bool text_request_matches(const std::optional<bool>& response, const std::optional<std::string>& method,
                          const TextMessage& msg) {
  if (response && *response != msg.response) return false;
  if (method && !msg.response && msg.method != *method) return false;
  return true;
}

bool app_matches(const AppMatch& m, const Packet& pkt) {
  if (!pkt.app || pkt.app->proto != m.proto) return false;
  return std::visit(
      [&](const auto& spec) -> bool {
        using T = std::decay_t<decltype(spec)>;
        if constexpr (std::is_same_v<T, DnsMatch>) {
          const auto* msg = std::get_if<DnsMessage>(&pkt.app->message);
          return msg && dns_matches(spec, *msg);
        } else if constexpr (std::is_same_v<T, DhcpMatch>) {
          const auto* msg = std::get_if<DhcpMessage>(&pkt.app->message);
          return msg && (!spec.message_type || msg->message_type() == spec.message_type);
        } else if constexpr (std::is_same_v<T, HttpMatch>) {
          const auto* msg = std::get_if<HttpMessage>(&pkt.app->message);
          if (!msg || !text_request_matches(spec.response, spec.method, *msg)) return false;
          return !spec.uri_prefix || msg->response || msg->uri.starts_with(*spec.uri_prefix);
        } else if constexpr (std::is_same_v<T, SsdpMatch>) {
          const auto* msg = std::get_if<SsdpMessage>(&pkt.app->message);
          if (!msg || !text_request_matches(spec.response, spec.method, *msg)) return false;
          return !spec.st || msg->search_target() == spec.st;
        } else if constexpr (std::is_same_v<T, CoapMatch>) {
          const auto* msg = std::get_if<CoapMessage>(&pkt.app->message);
          if (!msg) return false;
          if (spec.response && *spec.response != msg->is_response()) return false;
          if (spec.type && static_cast<std::uint8_t>(*spec.type) != msg->type) return false;
          if (msg->is_response()) return true;
          if (spec.method && msg->method() != static_cast<std::uint8_t>(*spec.method)) return false;
          return !spec.uri_path || msg->uri_path() == *spec.uri_path;
        } else {
          const auto* msg = std::get_if<IgmpMessage>(&pkt.app->message);
          if (!msg) return false;
          if (spec.type && msg->type != *spec.type) return false;
          return !spec.group || msg->group == *spec.group;
        }
      },
      m.spec);
}

}  // namespace

MatchResult match_spec(const MatchSpec& spec, const Packet& pkt, const MatchEnv& env) {
  Verdict3 v;
  if (spec.link) {
    const auto& l = *spec.link;
    v.require(!l.src || mac_matches(*l.src, pkt.eth.src, env));
    v.require(!l.dst || mac_matches(*l.dst, pkt.eth.dst, env));
    v.require(!l.eth_type || *l.eth_type == pkt.eth.eth_type);
    if (v.fail()) return MatchResult::NoMatch;
  }
  if (spec.arp) {
    const auto& a = *spec.arp;
    if (!pkt.arp) return MatchResult::NoMatch;
    v.require(!a.op || static_cast<std::uint16_t>(*a.op) == pkt.arp->op);
    v.require(!a.sender_hw || mac_matches(*a.sender_hw, pkt.arp->sender_hw, env));
    v.require(!a.target_hw || mac_matches(*a.target_hw, pkt.arp->target_hw, env));
    if (v.fail()) return MatchResult::NoMatch;
    if (a.sender_ip) v.add(endpoint_matches(*a.sender_ip, pkt.arp->sender_ip, env));
    if (a.target_ip) v.add(endpoint_matches(*a.target_ip, pkt.arp->target_ip, env));
    if (v.fail()) return MatchResult::NoMatch;
  }
  if (spec.ip) {
    if (!pkt.ip || pkt.ip->version != spec.ip->version) return MatchResult::NoMatch;
  }
  if (spec.icmp) {
    if (!pkt.icmp || !pkt.ip) return MatchResult::NoMatch;
    if (spec.icmp->type && icmp_code_for(*spec.icmp->type, pkt.ip->version) != pkt.icmp->type) {
      return MatchResult::NoMatch;
    }
  }
  if (spec.transport) {
    const auto& t = *spec.transport;
    if (!pkt.transport || pkt.transport->proto != t.proto) return MatchResult::NoMatch;
    if (t.src_port && !t.src_port->contains(pkt.transport->src_port)) return MatchResult::NoMatch;
    if (t.dst_port && !t.dst_port->contains(pkt.transport->dst_port)) return MatchResult::NoMatch;
  }
  if (spec.app) {
    if (env.effort && pkt.app) env.effort->app_compare = true;
    if (!app_matches(*spec.app, pkt)) return MatchResult::NoMatch;
  }
  // Endpoint checks last: domain endpoints consult the DNS table.
  if (spec.ip) {
    if (spec.ip->src) v.add(endpoint_matches(*spec.ip->src, pkt.ip->src, env));
    if (v.fail()) return MatchResult::NoMatch;
    if (spec.ip->dst) v.add(endpoint_matches(*spec.ip->dst, pkt.ip->dst, env));
  }
  return v.result();
}

MatchResult match_policy(const Policy& policy, const Packet& pkt, Direction dir, const MatchEnv& env) {
  if (dir == Direction::Forward) return match_spec(policy.match, pkt, env);
  return match_spec(invert_direction(policy.match), pkt, env);
}

MatchSpec invert_direction(const MatchSpec& spec) {
  MatchSpec out = spec;
  if (out.link) std::swap(out.link->src, out.link->dst);
  if (out.arp) {
    auto& a = *out.arp;
    if (a.op) a.op = *a.op == ArpOp::Request ? ArpOp::Reply : ArpOp::Request;
    std::swap(a.sender_hw, a.target_hw);
    std::swap(a.sender_ip, a.target_ip);
  }
  if (out.ip) std::swap(out.ip->src, out.ip->dst);
  if (out.icmp && out.icmp->type) {
    if (*out.icmp->type == IcmpKind::EchoRequest) out.icmp->type = IcmpKind::EchoReply;
    else if (*out.icmp->type == IcmpKind::EchoReply) out.icmp->type = IcmpKind::EchoRequest;
  }
  if (out.transport) std::swap(out.transport->src_port, out.transport->dst_port);
  if (out.app) {
    std::visit(
        [](auto& m) {
          using T = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<T, DnsMatch>) {
            if (m.qr) m.qr = *m.qr == DnsQr::Query ? DnsQr::Response : DnsQr::Query;
          } else if constexpr (std::is_same_v<T, DhcpMatch>) {
            // discover <-> offer, request <-> ack
            if (m.message_type) {
              switch (*m.message_type) {
                case 1: m.message_type = 2; break;
                case 2: m.message_type = 1; break;
                case 3: m.message_type = 5; break;
                case 5: m.message_type = 3; break;
                default: break;
              }
            }
          } else if constexpr (std::is_same_v<T, HttpMatch> || std::is_same_v<T, SsdpMatch>) {
            if (m.response) m.response = !*m.response;
          } else if constexpr (std::is_same_v<T, CoapMatch>) {
            if (m.response) m.response = !*m.response;
            if (m.type == CoapType::Con) m.type = CoapType::Ack;
            else if (m.type == CoapType::Ack) m.type = CoapType::Con;
          }
        },
        out.app->spec);
  }
  return out;
}

// ---------------------------------------------------------------------------

RateBucket::RateBucket(const RateSpec& spec)
    : capacity_(spec.capacity()),
      numerator_(spec.rate.numerator),
      period_ns_(static_cast<unsigned __int128>(spec.rate.unit_duration().count()) * spec.rate.denominator) {}

unsigned __int128 RateBucket::refilled(Timestamp ts) const {
  const unsigned __int128 cap = static_cast<unsigned __int128>(capacity_) * period_ns_;
  if (!last_) return cap;
  auto dt = static_cast<unsigned __int128>(std::max<std::int64_t>(0, (ts - *last_).count()));
  unsigned __int128 gained = dt * numerator_;
  return cap - units_ <= gained ? cap : units_ + gained;
}

RateBucket::Outcome RateBucket::admit(Timestamp ts, bool clamp) {
  if (last_ && ts < *last_) {
    if (!clamp) {
      throw ClockRegression("timestamp " + ts.str() + " precedes last refill " + last_->str());
    }
    ts = *last_;
  }
  units_ = refilled(ts);
  last_ = ts;
  if (units_ < period_ns_) return Outcome::Exceed;
  units_ -= period_ns_;
  return Outcome::Admit;
}

unsigned __int128 RateBucket::units_at(Timestamp ts) const { return refilled(ts); }

double RateBucket::tokens_at(Timestamp ts) const {
  return static_cast<double>(refilled(ts)) / static_cast<double>(period_ns_);
}

Within transient_within(const Policy& policy, const TransientCounters& c, Timestamp ts) {
  if (!policy.stats) return Within::Within;
  const auto& s = *policy.stats;
  if (s.max_packets && c.packets >= *s.max_packets) return Within::Expired;
  if (s.max_duration && c.started_at && ts - *c.started_at > *s.max_duration) return Within::Expired;
  return Within::Within;
}

}  // namespace profwall
