#include "profwall/profile.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <set>
#include <sstream>

namespace profwall {

namespace {

template <typename T>
bool parse_uint(std::string_view text, T& out) {
  if (text.empty()) return false;
  auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && p == text.data() + text.size();
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

struct NamedCode {
  std::string_view name;
  std::uint16_t code;
};

constexpr std::array kDnsTypes{
    NamedCode{"A", 1},      NamedCode{"NS", 2},    NamedCode{"CNAME", 5}, NamedCode{"SOA", 6},
    NamedCode{"PTR", 12},   NamedCode{"HINFO", 13}, NamedCode{"MX", 15},  NamedCode{"TXT", 16},
    NamedCode{"AAAA", 28},  NamedCode{"SRV", 33},  NamedCode{"NSEC", 47}, NamedCode{"HTTPS", 65},
    NamedCode{"ANY", 255},
};

constexpr std::array kDhcpTypes{
    NamedCode{"discover", 1}, NamedCode{"offer", 2}, NamedCode{"request", 3},
    NamedCode{"decline", 4},  NamedCode{"ack", 5},   NamedCode{"nak", 6},
    NamedCode{"release", 7},  NamedCode{"inform", 8},
};

constexpr std::array kIgmpTypes{
    NamedCode{"membership-query", 0x11},     NamedCode{"membership-report-v1", 0x12},
    NamedCode{"membership-report", 0x16},    NamedCode{"leave-group", 0x17},
    NamedCode{"membership-report-v3", 0x22},
};

template <std::size_t N>
std::optional<std::uint16_t> lookup_code(const std::array<NamedCode, N>& table, std::string_view text,
                                         bool case_insensitive) {
  for (const auto& e : table) {
    if (case_insensitive ? lower(e.name) == lower(text) : e.name == text) return e.code;
  }
  std::uint16_t v = 0;
  if (parse_uint(text, v)) return v;
  return std::nullopt;
}

template <std::size_t N>
std::string lookup_name(const std::array<NamedCode, N>& table, std::uint16_t code) {
  for (const auto& e : table) {
    if (e.code == code) return std::string(e.name);
  }
  return std::to_string(code);
}

struct IcmpEntry {
  IcmpKind kind;
  std::string_view name;
  int v4;
  int v6;
};

constexpr std::array kIcmpKinds{
    IcmpEntry{IcmpKind::EchoReply, "echo-reply", 0, 129},
    IcmpEntry{IcmpKind::EchoRequest, "echo-request", 8, 128},
    IcmpEntry{IcmpKind::DestinationUnreachable, "destination-unreachable", 3, 1},
    IcmpEntry{IcmpKind::TimeExceeded, "time-exceeded", 11, 3},
    IcmpEntry{IcmpKind::ParameterProblem, "parameter-problem", 12, 4},
    IcmpEntry{IcmpKind::Redirect, "redirect", 5, 137},
    IcmpEntry{IcmpKind::RouterSolicitation, "router-solicitation", 10, 133},
    IcmpEntry{IcmpKind::RouterAdvertisement, "router-advertisement", 9, 134},
    IcmpEntry{IcmpKind::NeighborSolicitation, "neighbor-solicitation", -1, 135},
    IcmpEntry{IcmpKind::NeighborAdvertisement, "neighbor-advertisement", -1, 136},
};

}  // namespace

// ---------------------------------------------------------------------------
// Names

std::string_view to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::OneOff: return "one-off";
    case PolicyKind::Transient: return "transient";
    case PolicyKind::Periodic: return "periodic";
  }
  return "?";
}

std::optional<PolicyKind> parse_policy_kind(std::string_view text) {
  if (text == "one-off") return PolicyKind::OneOff;
  if (text == "transient") return PolicyKind::Transient;
  if (text == "periodic") return PolicyKind::Periodic;
  return std::nullopt;
}

std::string_view to_string(AppProto proto) {
  switch (proto) {
    case AppProto::Dns: return "dns";
    case AppProto::Mdns: return "mdns";
    case AppProto::Dhcp: return "dhcp";
    case AppProto::Http: return "http";
    case AppProto::Ssdp: return "ssdp";
    case AppProto::Coap: return "coap";
    case AppProto::Igmp: return "igmp";
  }
  return "?";
}

std::string_view to_string(ArpOp op) { return op == ArpOp::Request ? "request" : "reply"; }
std::string_view to_string(DnsQr qr) { return qr == DnsQr::Query ? "query" : "response"; }
std::string_view to_string(TransportProto proto) {
  return proto == TransportProto::Tcp ? "tcp" : "udp";
}

std::string_view to_string(CoapType type) {
  switch (type) {
    case CoapType::Con: return "CON";
    case CoapType::Non: return "NON";
    case CoapType::Ack: return "ACK";
    case CoapType::Rst: return "RST";
  }
  return "?";
}

std::string_view to_string(CoapMethod method) {
  switch (method) {
    case CoapMethod::Get: return "GET";
    case CoapMethod::Post: return "POST";
    case CoapMethod::Put: return "PUT";
    case CoapMethod::Delete: return "DELETE";
  }
  return "?";
}

std::optional<CoapType> parse_coap_type(std::string_view text) {
  auto t = lower(text);
  if (t == "con") return CoapType::Con;
  if (t == "non") return CoapType::Non;
  if (t == "ack") return CoapType::Ack;
  if (t == "rst") return CoapType::Rst;
  return std::nullopt;
}

std::optional<CoapMethod> parse_coap_method(std::string_view text) {
  auto t = lower(text);
  if (t == "get") return CoapMethod::Get;
  if (t == "post") return CoapMethod::Post;
  if (t == "put") return CoapMethod::Put;
  if (t == "delete") return CoapMethod::Delete;
  return std::nullopt;
}

std::string_view to_string(IcmpKind kind) {
  for (const auto& e : kIcmpKinds) {
    if (e.kind == kind) return e.name;
  }
  return "?";
}

std::optional<IcmpKind> parse_icmp_kind(std::string_view text) {
  for (const auto& e : kIcmpKinds) {
    if (e.name == text) return e.kind;
  }
  return std::nullopt;
}

std::optional<std::uint8_t> icmp_code_for(IcmpKind kind, int ip_version) {
  for (const auto& e : kIcmpKinds) {
    if (e.kind != kind) continue;
    int code = ip_version == 6 ? e.v6 : e.v4;
    if (code < 0) return std::nullopt;
    return static_cast<std::uint8_t>(code);
  }
  return std::nullopt;
}

std::optional<std::uint16_t> parse_dns_type(std::string_view text) {
  return lookup_code(kDnsTypes, text, true);
}
std::string dns_type_name(std::uint16_t type) { return lookup_name(kDnsTypes, type); }

std::optional<std::uint8_t> parse_dhcp_type(std::string_view text) {
  auto v = lookup_code(kDhcpTypes, text, true);
  if (!v || *v > 255) return std::nullopt;
  return static_cast<std::uint8_t>(*v);
}
std::string dhcp_type_name(std::uint8_t type) { return lookup_name(kDhcpTypes, type); }

std::optional<std::uint8_t> parse_igmp_type(std::string_view text) {
  std::optional<std::uint16_t> v;
  if (text.size() > 2 && text[0] == '0' && (text[1] == 'x' || text[1] == 'X')) {
    std::uint16_t hex = 0;
    auto digits = text.substr(2);
    auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), hex, 16);
    if (ec == std::errc() && p == digits.data() + digits.size()) v = hex;
  } else {
    v = lookup_code(kIgmpTypes, text, true);
  }
  if (!v || *v > 255) return std::nullopt;
  return static_cast<std::uint8_t>(*v);
}
std::string igmp_type_name(std::uint8_t type) { return lookup_name(kIgmpTypes, type); }

std::string normalize_domain(std::string_view name) {
  auto s = lower(trim(name));
  while (!s.empty() && s.back() == '.') s.pop_back();
  return s;
}

// ---------------------------------------------------------------------------
// Expressions

std::optional<MacExpr> MacExpr::parse(std::string_view text) {
  if (text == "self") return MacExpr{Kind::Self, {}};
  if (text == "any") return MacExpr{Kind::Any, {}};
  auto mac = MacAddr::parse(text);
  if (!mac) return std::nullopt;
  return MacExpr{Kind::Literal, *mac};
}

std::string MacExpr::str() const {
  switch (kind) {
    case Kind::Literal: return addr.str();
    case Kind::Self: return "self";
    case Kind::Any: return "any";
  }
  return "?";
}

EndpointExpr EndpointExpr::of_domain(std::string_view name) {
  return {Kind::Domain, {}, normalize_domain(name)};
}

std::optional<EndpointExpr> EndpointExpr::parse(std::string_view text) {
  text = trim(text);
  if (text.empty()) return std::nullopt;
  if (text == "self") return symbol(Kind::Self);
  if (text == "local") return symbol(Kind::Local);
  if (text == "gateway") return symbol(Kind::Gateway);
  if (text == "phone") return symbol(Kind::Phone);
  if (text == "any") return symbol(Kind::Any);
  if (auto ip = IpAddr::parse(text)) return literal(*ip);
  // Hostname: labels of letters, digits, '-', '_' and an optional '*.' wildcard prefix.
  std::string_view body = text;
  if (body.size() > 2 && body.substr(0, 2) == "*.") body.remove_prefix(2);
  for (char c : body) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.')) {
      return std::nullopt;
    }
  }
  return of_domain(text);
}

std::string EndpointExpr::str() const {
  switch (kind) {
    case Kind::Literal: return addr.str();
    case Kind::Domain: return domain;
    case Kind::Self: return "self";
    case Kind::Local: return "local";
    case Kind::Gateway: return "gateway";
    case Kind::Phone: return "phone";
    case Kind::Any: return "any";
  }
  return "?";
}

std::optional<PortRange> PortRange::parse(std::string_view text) {
  text = trim(text);
  auto dash = text.find('-');
  std::uint16_t lo = 0;
  std::uint16_t hi = 0;
  if (dash == std::string_view::npos) {
    if (!parse_uint(text, lo)) return std::nullopt;
    return PortRange{lo, lo};
  }
  if (!parse_uint(trim(text.substr(0, dash)), lo) || !parse_uint(trim(text.substr(dash + 1)), hi) ||
      lo > hi) {
    return std::nullopt;
  }
  return PortRange{lo, hi};
}

std::string PortRange::str() const {
  if (lo == hi) return std::to_string(lo);
  return std::to_string(lo) + "-" + std::to_string(hi);
}

// ---------------------------------------------------------------------------
// Stats

namespace {

// Parses a non-negative decimal into numerator / 10^k with k minimal.
bool parse_decimal(std::string_view text, std::uint64_t& num, std::uint64_t& den) {
  auto dot = text.find('.');
  auto int_part = text.substr(0, dot);
  std::string_view frac = dot == std::string_view::npos ? std::string_view{} : text.substr(dot + 1);
  while (!frac.empty() && frac.back() == '0') frac.remove_suffix(1);
  if (int_part.empty() && frac.empty()) return false;
  if (frac.size() > 9) return false;
  std::uint64_t whole = 0;
  if (!int_part.empty() && !parse_uint(int_part, whole)) return false;
  std::uint64_t f = 0;
  if (!frac.empty() && !parse_uint(frac, f)) return false;
  den = 1;
  for (std::size_t i = 0; i < frac.size(); ++i) den *= 10;
  if (whole > (UINT64_MAX - f) / den) return false;
  num = whole * den + f;
  return true;
}

std::string format_decimal(std::uint64_t num, std::uint64_t den) {
  std::string out = std::to_string(num / den);
  std::uint64_t rem = num % den;
  if (rem == 0) return out;
  std::string frac = std::to_string(rem);
  std::size_t digits = 0;
  for (std::uint64_t d = den; d > 1; d /= 10) ++digits;
  frac = std::string(digits - frac.size(), '0') + frac;
  while (!frac.empty() && frac.back() == '0') frac.pop_back();
  return out + "." + frac;
}

}  // namespace

std::optional<Rate> Rate::parse(std::string_view text) {
  text = trim(text);
  auto slash = text.find('/');
  if (slash == std::string_view::npos) return std::nullopt;
  Rate r;
  if (!parse_decimal(trim(text.substr(0, slash)), r.numerator, r.denominator) || r.numerator == 0) {
    return std::nullopt;
  }
  auto unit = lower(trim(text.substr(slash + 1)));
  if (unit == "second" || unit == "s") r.unit = Unit::Second;
  else if (unit == "minute" || unit == "min") r.unit = Unit::Minute;
  else if (unit == "hour" || unit == "h") r.unit = Unit::Hour;
  else if (unit == "day") r.unit = Unit::Day;
  else return std::nullopt;
  return r;
}

Duration Rate::unit_duration() const {
  switch (unit) {
    case Unit::Second: return std::chrono::seconds(1);
    case Unit::Minute: return std::chrono::minutes(1);
    case Unit::Hour: return std::chrono::hours(1);
    case Unit::Day: return std::chrono::hours(24);
  }
  return std::chrono::seconds(1);
}

double Rate::per_second() const {
  double per_unit = static_cast<double>(numerator) / static_cast<double>(denominator);
  return per_unit / (static_cast<double>(unit_duration().count()) * 1e-9);
}

std::string Rate::str() const {
  static constexpr std::array<std::string_view, 4> kUnits{"second", "minute", "hour", "day"};
  return format_decimal(numerator, denominator) + "/" +
         std::string(kUnits[static_cast<std::size_t>(unit)]);
}

std::uint64_t RateSpec::capacity() const {
  if (burst) return *burst;
  // ceil(numerator / (denominator * unit_seconds)) packets, at least one.
  auto unit_ns = static_cast<unsigned __int128>(rate.unit_duration().count());
  unsigned __int128 num = static_cast<unsigned __int128>(rate.numerator) * 1'000'000'000u;
  unsigned __int128 den = static_cast<unsigned __int128>(rate.denominator) * unit_ns;
  auto c = static_cast<std::uint64_t>((num + den - 1) / den);
  return std::max<std::uint64_t>(c, 1);
}

std::optional<RateSpec> RateSpec::parse(std::string_view text) {
  // "<N>/<unit>" optionally followed by ", burst <M> packets" / "burst <M> packets".
  text = trim(text);
  RateSpec spec;
  auto burst_at = text.find("burst");
  auto rate_text = trim(text.substr(0, burst_at));
  if (!rate_text.empty() && rate_text.back() == ',') rate_text = trim(rate_text.substr(0, rate_text.size() - 1));
  auto rate = Rate::parse(rate_text);
  if (!rate) return std::nullopt;
  spec.rate = *rate;
  if (burst_at != std::string_view::npos) {
    auto rest = trim(text.substr(burst_at + 5));
    auto space = rest.find(' ');
    auto count = rest.substr(0, space);
    std::uint64_t burst = 0;
    if (!parse_uint(count, burst) || burst == 0) return std::nullopt;
    if (space != std::string_view::npos) {
      auto unit = trim(rest.substr(space));
      if (unit != "packets" && unit != "packet") return std::nullopt;
    }
    spec.burst = burst;
  }
  return spec;
}

std::string RateSpec::str() const {
  std::string out = rate.str();
  if (burst) out += " burst " + std::to_string(*burst) + " packets";
  return out;
}

// ---------------------------------------------------------------------------
// Profile

std::size_t Profile::policy_count() const {
  std::size_t n = 0;
  for (const auto& i : interactions) n += i.policies.size();
  return n;
}

const Interaction* Profile::find(std::string_view interaction) const {
  for (const auto& i : interactions) {
    if (i.name == interaction) return &i;
  }
  return nullptr;
}

namespace {

void check_endpoint(const std::optional<EndpointExpr>& e, int version, const std::string& path,
                    std::vector<Diagnostic>& out) {
  if (e && e->kind == EndpointExpr::Kind::Literal && e->addr.version() != version) {
    out.push_back({path, "address family does not match ipv" + std::to_string(version) + " block"});
  }
}

void validate_match(const MatchSpec& m, const std::string& path, std::vector<Diagnostic>& out) {
  if (m.empty()) {
    out.push_back({path, "policy must match at least one protocol layer"});
    return;
  }
  if (m.ip) {
    check_endpoint(m.ip->src, m.ip->version, path + ".ip.src", out);
    check_endpoint(m.ip->dst, m.ip->version, path + ".ip.dst", out);
  }
  if (m.arp) {
    check_endpoint(m.arp->sender_ip, 4, path + ".arp.sender-ip", out);
    check_endpoint(m.arp->target_ip, 4, path + ".arp.target-ip", out);
    if (m.ip || m.transport || m.app || m.icmp) {
      out.push_back({path + ".arp", "arp cannot be combined with ip, icmp, transport or application blocks"});
    }
  }
  if (m.app && m.app->proto != AppProto::Igmp && !m.transport) {
    out.push_back({path + "." + std::string(to_string(m.app->proto)),
                   "application protocol requires a tcp or udp block"});
  }
  if (m.app && m.app->proto == AppProto::Igmp && m.transport) {
    out.push_back({path + ".igmp", "igmp is carried directly over ip, not tcp/udp"});
  }
  if (m.icmp && m.transport) {
    out.push_back({path + ".icmp", "icmp cannot be combined with a tcp/udp block"});
  }
  if (m.transport) {
    for (const auto* r : {&m.transport->src_port, &m.transport->dst_port}) {
      if (*r && (*r)->lo > (*r)->hi) out.push_back({path + ".transport", "empty port range"});
    }
  }
}

}  // namespace

std::vector<Diagnostic> validate_profile(const Profile& profile) {
  std::vector<Diagnostic> out;
  const auto& info = profile.device_info;
  if (info.name.empty()) out.push_back({"device-info.name", "device name must not be empty"});
  if (!info.ipv4 && !info.ipv6) {
    out.push_back({"device-info", "at least one of ipv4/ipv6 is required"});
  }
  if (info.ipv4 && !info.ipv4->is_v4()) out.push_back({"device-info.ipv4", "not an IPv4 address"});
  if (info.ipv6 && info.ipv6->is_v4()) out.push_back({"device-info.ipv6", "not an IPv6 address"});

  std::set<std::string> interaction_names;
  for (const auto& interaction : profile.interactions) {
    const std::string ipath = "interactions." + interaction.name;
    if (interaction.name.empty()) out.push_back({ipath, "interaction name must not be empty"});
    if (!interaction_names.insert(interaction.name).second) {
      out.push_back({ipath, "duplicate interaction name"});
    }
    if (interaction.policies.empty()) {
      out.push_back({ipath, "interaction requires at least one policy"});
    }
    std::set<std::string> policy_names;
    for (const auto& policy : interaction.policies) {
      const std::string ppath = ipath + "." + policy.name;
      if (!policy_names.insert(policy.name).second) {
        out.push_back({ppath, "duplicate policy name"});
      }
      const Stats* stats = policy.stats ? &*policy.stats : nullptr;
      switch (policy.kind) {
        case PolicyKind::OneOff:
          if (stats && !stats->empty()) {
            out.push_back({ppath + ".stats", "one-off policy must not carry stats"});
          }
          break;
        case PolicyKind::Transient:
          if (!stats || (!stats->max_duration && !stats->max_packets)) {
            out.push_back({ppath + ".stats", "transient policy requires max_duration or max_packets"});
          }
          break;
        case PolicyKind::Periodic:
          if (!stats || !stats->rate) {
            out.push_back({ppath + ".stats", "periodic policy requires a rate"});
          }
          break;
      }
      if (stats) {
        if (stats->rate && (stats->rate->rate.numerator == 0 || (stats->rate->burst && *stats->rate->burst == 0))) {
          out.push_back({ppath + ".stats.rate", "rate and burst must be positive"});
        }
        if (stats->max_packets && *stats->max_packets == 0) {
          out.push_back({ppath + ".stats.packet-count", "packet count must be positive"});
        }
        if (stats->max_duration && stats->max_duration->count() <= 0) {
          out.push_back({ppath + ".stats.duration", "duration must be positive"});
        }
      }
      validate_match(policy.match, ppath + ".protocols", out);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Canonical emitter

namespace {

bool needs_quotes(std::string_view s) {
  if (s.empty()) return true;
  static constexpr std::string_view kSpecialStart = "!&*[]{},#|>'\"%@`-?:~";
  if (kSpecialStart.find(s.front()) != std::string_view::npos) return true;
  if (std::isspace(static_cast<unsigned char>(s.front())) || std::isspace(static_cast<unsigned char>(s.back()))) {
    return true;
  }
  if (s.find(": ") != std::string_view::npos || s.find(" #") != std::string_view::npos) return true;
  if (s.back() == ':') return true;
  auto l = lower(s);
  if (l == "null" || l == "true" || l == "false") return true;
  for (char c : s) {
    if (static_cast<unsigned char>(c) < 0x20 || c == '"' || c == '\\') return true;
  }
  return false;
}

std::string scalar(std::string_view s) {
  if (!needs_quotes(s)) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof buf, "\\x%02x", static_cast<unsigned char>(c));
          out += buf;
        } else {
          out += c;
        }
    }
  }
  return out + "\"";
}

class Emitter {
 public:
  void key(int depth, std::string_view k) { line(depth) << scalar(k) << ":\n"; }
  template <typename V>
  void kv(int depth, std::string_view k, const V& v) {
    line(depth) << scalar(k) << ": " << v << "\n";
  }
  void kvs(int depth, std::string_view k, std::string_view v) { kv(depth, k, scalar(v)); }
  std::string str() const { return out_.str(); }

 private:
  std::ostream& line(int depth) { return out_ << std::string(static_cast<std::size_t>(depth) * 2, ' '); }
  std::ostringstream out_;
};

std::string format_duration(Duration d) {
  auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(d).count();
  return format_decimal(static_cast<std::uint64_t>(ms), 1000);
}

std::string hex16(std::uint16_t v) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "0x%04x", v);
  return buf;
}

void emit_match(Emitter& e, int d, const MatchSpec& m) {
  if (m.link) {
    e.key(d, "ethernet");
    if (m.link->src) e.kvs(d + 1, "src", m.link->src->str());
    if (m.link->dst) e.kvs(d + 1, "dst", m.link->dst->str());
    if (m.link->eth_type) e.kvs(d + 1, "type", hex16(*m.link->eth_type));
  }
  if (m.arp) {
    e.key(d, "arp");
    if (m.arp->op) e.kvs(d + 1, "type", to_string(*m.arp->op));
    if (m.arp->sender_hw) e.kvs(d + 1, "sender-mac", m.arp->sender_hw->str());
    if (m.arp->sender_ip) e.kvs(d + 1, "sender-ip", m.arp->sender_ip->str());
    if (m.arp->target_hw) e.kvs(d + 1, "target-mac", m.arp->target_hw->str());
    if (m.arp->target_ip) e.kvs(d + 1, "target-ip", m.arp->target_ip->str());
  }
  if (m.ip) {
    e.key(d, m.ip->version == 6 ? "ipv6" : "ipv4");
    if (m.ip->src) e.kvs(d + 1, "src", m.ip->src->str());
    if (m.ip->dst) e.kvs(d + 1, "dst", m.ip->dst->str());
  }
  if (m.icmp) {
    e.key(d, "icmp");
    if (m.icmp->type) e.kvs(d + 1, "type", to_string(*m.icmp->type));
  }
  if (m.transport) {
    e.key(d, to_string(m.transport->proto));
    if (m.transport->src_port) e.kvs(d + 1, "src-port", m.transport->src_port->str());
    if (m.transport->dst_port) e.kvs(d + 1, "dst-port", m.transport->dst_port->str());
  }
  if (!m.app) return;
  e.key(d, to_string(m.app->proto));
  std::visit(
      [&](const auto& a) {
        using T = std::decay_t<decltype(a)>;
        if constexpr (std::is_same_v<T, DnsMatch>) {
          if (a.qr) e.kvs(d + 1, "qr", to_string(*a.qr));
          if (a.qtype) e.kvs(d + 1, "qtype", dns_type_name(*a.qtype));
          if (a.domain_name) e.kvs(d + 1, "domain-name", *a.domain_name);
        } else if constexpr (std::is_same_v<T, DhcpMatch>) {
          if (a.message_type) e.kvs(d + 1, "type", dhcp_type_name(*a.message_type));
        } else if constexpr (std::is_same_v<T, HttpMatch>) {
          if (a.response) e.kv(d + 1, "response", *a.response ? "true" : "false");
          if (a.method) e.kvs(d + 1, "method", *a.method);
          if (a.uri_prefix) e.kvs(d + 1, "uri", *a.uri_prefix);
        } else if constexpr (std::is_same_v<T, SsdpMatch>) {
          if (a.response) e.kv(d + 1, "response", *a.response ? "true" : "false");
          if (a.method) e.kvs(d + 1, "method", *a.method);
          if (a.st) e.kvs(d + 1, "st", *a.st);
        } else if constexpr (std::is_same_v<T, CoapMatch>) {
          if (a.response) e.kv(d + 1, "response", *a.response ? "true" : "false");
          if (a.type) e.kvs(d + 1, "type", to_string(*a.type));
          if (a.method) e.kvs(d + 1, "method", to_string(*a.method));
          if (a.uri_path) e.kvs(d + 1, "uri", *a.uri_path);
        } else if constexpr (std::is_same_v<T, IgmpMatch>) {
          if (a.type) e.kvs(d + 1, "type", igmp_type_name(*a.type));
          if (a.group) e.kvs(d + 1, "group", a.group->str());
        }
      },
      m.app->spec);
}

}  // namespace

std::string to_yaml(const Profile& profile) {
  Emitter e;
  const auto& info = profile.device_info;
  e.key(0, "device-info");
  e.kvs(1, "name", info.name);
  e.kvs(1, "mac", info.mac.str());
  if (info.ipv4) e.kvs(1, "ipv4", info.ipv4->str());
  if (info.ipv6) e.kvs(1, "ipv6", info.ipv6->str());
  if (profile.interactions.empty()) {
    e.kv(0, "interactions", "{}");
    return e.str();
  }
  e.key(0, "interactions");
  for (const auto& interaction : profile.interactions) {
    e.key(1, interaction.name);
    for (const auto& p : interaction.policies) {
      e.key(2, p.name);
      e.kvs(3, "type", to_string(p.kind));
      if (p.bidirectional) e.kv(3, "bidirectional", "true");
      e.key(3, "protocols");
      emit_match(e, 4, p.match);
      if (p.stats && !p.stats->empty()) {
        e.key(3, "stats");
        if (p.stats->rate) e.kvs(4, "rate", p.stats->rate->str());
        if (p.stats->max_packets) e.kv(4, "packet-count", *p.stats->max_packets);
        if (p.stats->max_duration) e.kv(4, "duration", format_duration(*p.stats->max_duration));
      }
    }
  }
  return e.str();
}

}  // namespace profwall
