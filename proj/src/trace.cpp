#include "profwall/trace.hpp"

#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "profwall/errors.hpp"

namespace profwall {

using nlohmann::json;

std::string to_hex(std::span<const std::uint8_t> bytes) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (auto b : bytes) {
    out += kDigits[b >> 4];
    out += kDigits[b & 0xf];
  }
  return out;
}

std::optional<Bytes> from_hex(std::string_view text) {
  if (text.size() % 2) return std::nullopt;
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
  };
  Bytes out;
  out.reserve(text.size() / 2);
  for (std::size_t i = 0; i < text.size(); i += 2) {
    int hi = nibble(text[i]);
    int lo = nibble(text[i + 1]);
    if (hi < 0 || lo < 0) return std::nullopt;
    out.push_back(static_cast<std::uint8_t>(hi << 4 | lo));
  }
  return out;
}

// ---------------------------------------------------------------------------
// pcap

namespace {

constexpr std::uint32_t kMagicUsec = 0xa1b2c3d4;
constexpr std::uint32_t kMagicNsec = 0xa1b23c4d;

std::uint32_t load32(std::span<const std::uint8_t> s, std::size_t at, bool swap) {
  std::uint32_t v = static_cast<std::uint32_t>(s[at]) | static_cast<std::uint32_t>(s[at + 1]) << 8 |
                    static_cast<std::uint32_t>(s[at + 2]) << 16 | static_cast<std::uint32_t>(s[at + 3]) << 24;
  if (swap) v = __builtin_bswap32(v);
  return v;
}

void store32(Bytes& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void store16(Bytes& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

}  // namespace

Trace read_pcap(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 24) throw FormatError("truncated pcap header");
  std::uint32_t magic = load32(bytes, 0, false);
  bool swap = false;
  bool nanos = false;
  if (magic == kMagicUsec || magic == kMagicNsec) {
    nanos = magic == kMagicNsec;
  } else if (__builtin_bswap32(magic) == kMagicUsec || __builtin_bswap32(magic) == kMagicNsec) {
    swap = true;
    nanos = __builtin_bswap32(magic) == kMagicNsec;
  } else {
    throw FormatError("bad pcap magic");
  }
  Trace trace;
  trace.linktype = static_cast<int>(load32(bytes, 20, swap) & 0x0fffffff);
  if (trace.linktype != kLinkTypeEthernet) {
    throw FormatError("unsupported linktype " + std::to_string(trace.linktype) + " (only Ethernet)");
  }
  std::size_t pos = 24;
  std::size_t index = 0;
  while (pos < bytes.size()) {
    if (bytes.size() - pos < 16) throw FormatError("truncated record header at packet " + std::to_string(index));
    std::uint32_t sec = load32(bytes, pos, swap);
    std::uint32_t frac = load32(bytes, pos + 4, swap);
    std::uint32_t incl = load32(bytes, pos + 8, swap);
    pos += 16;
    if (bytes.size() - pos < incl) throw FormatError("truncated record at packet " + std::to_string(index));
    if (frac >= (nanos ? 1'000'000'000u : 1'000'000u)) {
      throw FormatError("bad sub-second timestamp at packet " + std::to_string(index));
    }
    Timestamp ts{static_cast<std::int64_t>(sec), nanos ? frac : frac * 1000};
    if (!trace.packets.empty() && ts < trace.packets.back().ts) {
      throw FormatError("timestamps must be non-decreasing (packet " + std::to_string(index) + ")");
    }
    auto record = bytes.subspan(pos, incl);
    pos += incl;
    if (record.size() < 14) throw FormatError("truncated Ethernet header at packet " + std::to_string(index));
    trace.packets.push_back(dissect(record, trace.linktype, ts));
    ++index;
  }
  return trace;
}

Bytes write_pcap(const Trace& trace) {
  Bytes out;
  store32(out, kMagicNsec);
  store16(out, 2);
  store16(out, 4);
  store32(out, 0);
  store32(out, 0);
  store32(out, 262144);
  store32(out, static_cast<std::uint32_t>(trace.linktype));
  for (const auto& pkt : trace.packets) {
    Bytes raw = pkt.raw.empty() ? serialize(pkt) : pkt.raw;
    store32(out, static_cast<std::uint32_t>(pkt.ts.sec));
    store32(out, pkt.ts.nsec);
    store32(out, static_cast<std::uint32_t>(raw.size()));
    store32(out, static_cast<std::uint32_t>(raw.size()));
    out.insert(out.end(), raw.begin(), raw.end());
  }
  return out;
}

// ---------------------------------------------------------------------------
// JSONL

namespace {

struct FieldError {
  std::string what;
};

std::string tcp_flag_letters(std::uint8_t flags) {
  static constexpr std::pair<std::uint8_t, char> kLetters[] = {
      {0x01, 'F'}, {0x02, 'S'}, {0x04, 'R'}, {0x08, 'P'}, {0x10, 'A'}, {0x20, 'U'}, {0x40, 'E'}, {0x80, 'C'}};
  std::string out;
  for (auto [bit, c] : kLetters) {
    if (flags & bit) out += c;
  }
  return out;
}

std::uint8_t tcp_flags_from(const json& j) {
  if (j.is_number_unsigned()) return j.get<std::uint8_t>();
  if (!j.is_string()) throw FieldError{"tcp.flags must be a string or number"};
  std::uint8_t out = 0;
  for (char c : j.get<std::string>()) {
    switch (c) {
      case 'F': out |= 0x01; break;
      case 'S': out |= 0x02; break;
      case 'R': out |= 0x04; break;
      case 'P': out |= 0x08; break;
      case 'A': out |= 0x10; break;
      case 'U': out |= 0x20; break;
      case 'E': out |= 0x40; break;
      case 'C': out |= 0x80; break;
      default: throw FieldError{std::string("unknown tcp flag '") + c + "'"};
    }
  }
  return out;
}

json dns_json(const DnsMessage& m) {
  json j;
  j["id"] = m.id;
  j["qr"] = m.is_response() ? "response" : "query";
  if (!m.questions.empty()) {
    j["qtype"] = dns_type_name(m.questions.front().qtype);
    j["domain-name"] = m.questions.front().name;
  }
  json answers = json::array();
  for (const auto& r : m.answers) {
    json a{{"name", r.name}, {"type", dns_type_name(r.type)}, {"ttl", r.ttl}};
    if (r.address) a["data"] = r.address->str();
    else if (r.target) a["data"] = *r.target;
    else a["data"] = to_hex(r.rdata);
    answers.push_back(std::move(a));
  }
  if (!answers.empty()) j["answers"] = std::move(answers);
  return j;
}

json text_json(const TextMessage& m) {
  json j;
  if (m.response) {
    j["status"] = m.status;
    j["reason"] = m.reason;
  } else {
    j["method"] = m.method;
    j["uri"] = m.uri;
  }
  json headers = json::array();
  for (const auto& [k, v] : m.headers) headers.push_back({k, v});
  if (!headers.empty()) j["headers"] = std::move(headers);
  if (!m.body.empty()) j["body"] = to_hex(m.body);
  return j;
}

std::string coap_code_str(std::uint8_t code) {
  if (code >= 1 && code <= 4) return std::string(to_string(static_cast<CoapMethod>(code)));
  char buf[8];
  std::snprintf(buf, sizeof buf, "%d.%02d", code >> 5, code & 0x1f);
  return buf;
}

json packet_json(const Packet& pkt, std::size_t idx) {
  json j;
  j["v"] = 1;
  j["idx"] = idx;
  j["ts"] = pkt.ts.str();
  if (pkt.iface) j["iface"] = *pkt.iface;
  j["raw"] = to_hex(pkt.raw.empty() ? serialize(pkt) : pkt.raw);
  char type[8];
  std::snprintf(type, sizeof type, "0x%04x", pkt.eth.eth_type);
  j["eth"] = {{"src", pkt.eth.src.str()}, {"dst", pkt.eth.dst.str()}, {"type", type}};
  if (pkt.arp) {
    const auto& a = *pkt.arp;
    json aj;
    if (a.op == 1 || a.op == 2) aj["op"] = to_string(static_cast<ArpOp>(a.op));
    else aj["op"] = a.op;
    aj["sender-mac"] = a.sender_hw.str();
    aj["sender-ip"] = a.sender_ip.str();
    aj["target-mac"] = a.target_hw.str();
    aj["target-ip"] = a.target_ip.str();
    j["arp"] = std::move(aj);
  }
  if (pkt.ip) {
    j["ip"] = {{"version", pkt.ip->version},
               {"src", pkt.ip->src.str()},
               {"dst", pkt.ip->dst.str()},
               {"proto", pkt.ip->protocol},
               {"ttl", pkt.ip->ttl}};
  }
  if (pkt.icmp) j["icmp"] = {{"type", pkt.icmp->type}, {"code", pkt.icmp->code}};
  if (pkt.transport) {
    const auto& t = *pkt.transport;
    if (t.proto == TransportProto::Tcp) {
      j["tcp"] = {{"src", t.src_port}, {"dst", t.dst_port}, {"seq", t.seq}, {"ack", t.ack},
                  {"flags", tcp_flag_letters(t.flags())}, {"window", t.window}};
    } else {
      j["udp"] = {{"src", t.src_port}, {"dst", t.dst_port}};
    }
  }
  if (pkt.app) {
    std::string key(to_string(pkt.app->proto));
    std::visit(
        [&](const auto& m) {
          using T = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<T, DnsMessage>) {
            j[key] = dns_json(m);
          } else if constexpr (std::is_same_v<T, DhcpMessage>) {
            json d;
            if (auto t = m.message_type()) d["type"] = dhcp_type_name(*t);
            d["xid"] = m.xid;
            MacAddr ch;
            std::copy_n(m.chaddr.begin(), 6, ch.octets.begin());
            d["chaddr"] = ch.str();
            d["yiaddr"] = IpAddr::v4(m.yiaddr).str();
            j[key] = std::move(d);
          } else if constexpr (std::is_same_v<T, HttpMessage> || std::is_same_v<T, SsdpMessage>) {
            j[key] = text_json(m);
          } else if constexpr (std::is_same_v<T, CoapMessage>) {
            json c{{"type", to_string(static_cast<CoapType>(m.type))},
                   {"code", coap_code_str(m.code)},
                   {"mid", m.message_id},
                   {"token", to_hex(m.token)}};
            if (!m.uri_path().empty()) c["uri"] = m.uri_path();
            if (!m.payload.empty()) c["payload"] = to_hex(m.payload);
            j[key] = std::move(c);
          } else {
            j[key] = {{"type", igmp_type_name(m.type)}, {"group", m.group.str()}};
          }
        },
        pkt.app->message);
  } else if (!pkt.payload.empty()) {
    j["payload"] = to_hex(pkt.payload);
  }
  return j;
}

// --- synthesis from fields

const json* opt(const json& j, const char* key) {
  auto it = j.find(key);
  return it == j.end() || it->is_null() ? nullptr : &*it;
}

template <typename T>
T num(const json& j, const char* key, T fallback) {
  const json* v = opt(j, key);
  if (!v) return fallback;
  if (!v->is_number_unsigned()) throw FieldError{std::string("'") + key + "' must be a non-negative integer"};
  auto raw = v->get<std::uint64_t>();
  if (raw > std::numeric_limits<T>::max()) throw FieldError{std::string("'") + key + "' out of range"};
  return static_cast<T>(raw);
}

std::string str(const json& j, const char* key, std::string fallback = {}) {
  const json* v = opt(j, key);
  if (!v) return fallback;
  if (!v->is_string()) throw FieldError{std::string("'") + key + "' must be a string"};
  return v->get<std::string>();
}

MacAddr mac(const json& j, const char* key) {
  const json* v = opt(j, key);
  if (!v) return MacAddr{};
  auto m = v->is_string() ? MacAddr::parse(v->get<std::string>()) : std::nullopt;
  if (!m) throw FieldError{std::string("'") + key + "' is not a MAC address"};
  return *m;
}

IpAddr ip(const json& j, const char* key) {
  const json* v = opt(j, key);
  if (!v) throw FieldError{std::string("missing '") + key + "'"};
  auto a = v->is_string() ? IpAddr::parse(v->get<std::string>()) : std::nullopt;
  if (!a) throw FieldError{std::string("'") + key + "' is not an IP address"};
  return *a;
}

Bytes hex_field(const json& j, const char* key) {
  auto text = str(j, key);
  auto b = from_hex(text);
  if (!b) throw FieldError{std::string("'") + key + "' is not hex"};
  return *b;
}

std::uint16_t dns_type_field(const json& j, const char* key, std::uint16_t fallback) {
  const json* v = opt(j, key);
  if (!v) return fallback;
  if (v->is_number_unsigned()) return v->get<std::uint16_t>();
  auto t = v->is_string() ? parse_dns_type(v->get<std::string>()) : std::nullopt;
  if (!t) throw FieldError{std::string("unknown record type in '") + key + "'"};
  return *t;
}

DnsMessage dns_from(const json& j) {
  DnsMessage m;
  m.id = num<std::uint16_t>(j, "id", 0);
  auto qr = str(j, "qr", "query");
  if (qr != "query" && qr != "response") throw FieldError{"qr must be query or response"};
  m.set_response(qr == "response");
  if (opt(j, "domain-name")) {
    m.questions.push_back({normalize_domain(str(j, "domain-name")), dns_type_field(j, "qtype", 1), 1});
  }
  if (const json* answers = opt(j, "answers")) {
    if (!answers->is_array()) throw FieldError{"answers must be an array"};
    for (const auto& a : *answers) {
      DnsRecord r;
      r.name = normalize_domain(str(a, "name"));
      r.type = dns_type_field(a, "type", 1);
      r.ttl = num<std::uint32_t>(a, "ttl", 0);
      auto data = str(a, "data");
      if (r.type == 1 || r.type == 28) {
        r.address = ip(a, "data");
      } else if (r.type == 5 || r.type == 12 || r.type == 2) {
        r.target = normalize_domain(data);
      } else {
        r.rdata = hex_field(a, "data");
      }
      m.answers.push_back(std::move(r));
    }
  }
  return m;
}

TextMessage text_from(const json& j) {
  TextMessage m;
  if (opt(j, "status")) {
    m.response = true;
    m.status = num<int>(j, "status", 200);
    m.reason = str(j, "reason");
  } else {
    m.method = str(j, "method", "GET");
    m.uri = str(j, "uri", "/");
  }
  if (const json* headers = opt(j, "headers")) {
    if (headers->is_object()) {
      for (const auto& [k, v] : headers->items()) m.headers.emplace_back(k, v.get<std::string>());
    } else {
      for (const auto& kv : *headers) m.headers.emplace_back(kv.at(0).get<std::string>(), kv.at(1).get<std::string>());
    }
  }
  if (opt(j, "body")) m.body = hex_field(j, "body");
  return m;
}

std::uint8_t coap_code_from(const json& j) {
  auto text = str(j, "code", "GET");
  if (auto m = parse_coap_method(text)) return static_cast<std::uint8_t>(*m);
  auto dot = text.find('.');
  if (dot == std::string::npos) throw FieldError{"bad coap code '" + text + "'"};
  try {
    int cls = std::stoi(text.substr(0, dot));
    int detail = std::stoi(text.substr(dot + 1));
    if (cls < 0 || cls > 7 || detail < 0 || detail > 31) throw FieldError{"bad coap code '" + text + "'"};
    return static_cast<std::uint8_t>(cls << 5 | detail);
  } catch (const std::logic_error&) {
    throw FieldError{"bad coap code '" + text + "'"};
  }
}

Packet packet_from_fields(const json& j) {
  Packet pkt;
  if (const json* eth = opt(j, "eth")) {
    pkt.eth.src = mac(*eth, "src");
    pkt.eth.dst = mac(*eth, "dst");
  }
  if (const json* a = opt(j, "arp")) {
    ArpLayer arp;
    const json* op = opt(*a, "op");
    if (op && op->is_string()) {
      auto s = op->get<std::string>();
      if (s == "request") arp.op = 1;
      else if (s == "reply") arp.op = 2;
      else throw FieldError{"arp op must be request or reply"};
    } else {
      arp.op = num<std::uint16_t>(*a, "op", 1);
    }
    arp.sender_hw = mac(*a, "sender-mac");
    arp.sender_ip = ip(*a, "sender-ip");
    arp.target_hw = mac(*a, "target-mac");
    arp.target_ip = ip(*a, "target-ip");
    pkt.arp = arp;
    return pkt;
  }
  const json* ipj = opt(j, "ip");
  if (!ipj) {
    if (opt(j, "tcp") || opt(j, "udp") || opt(j, "icmp")) throw FieldError{"transport block requires an ip block"};
    if (opt(j, "payload")) pkt.payload = hex_field(j, "payload");
    if (const json* eth = opt(j, "eth")) {
      if (const json* t = opt(*eth, "type")) {
        if (t->is_string()) pkt.eth.eth_type = static_cast<std::uint16_t>(std::stoul(t->get<std::string>(), nullptr, 0));
        else pkt.eth.eth_type = t->get<std::uint16_t>();
      }
    }
    return pkt;
  }
  IpLayer l3;
  l3.src = ip(*ipj, "src");
  l3.dst = ip(*ipj, "dst");
  l3.version = num<int>(*ipj, "version", l3.src.version());
  if (l3.src.version() != l3.version || l3.dst.version() != l3.version) {
    throw FieldError{"ip addresses do not match the ip version"};
  }
  l3.ttl = num<std::uint8_t>(*ipj, "ttl", 64);
  l3.protocol = num<std::uint8_t>(*ipj, "proto", 0);
  pkt.ip = l3;
  if (const json* ic = opt(j, "icmp")) {
    pkt.icmp = IcmpLayer{num<std::uint8_t>(*ic, "type", 8), num<std::uint8_t>(*ic, "code", 0), 0};
  }
  for (const char* key : {"tcp", "udp"}) {
    if (const json* t = opt(j, key)) {
      if (pkt.transport) throw FieldError{"both tcp and udp blocks present"};
      TransportLayer tl;
      tl.proto = std::string_view(key) == "tcp" ? TransportProto::Tcp : TransportProto::Udp;
      tl.src_port = num<std::uint16_t>(*t, "src", 0);
      tl.dst_port = num<std::uint16_t>(*t, "dst", 0);
      if (tl.proto == TransportProto::Tcp) {
        tl.seq = num<std::uint32_t>(*t, "seq", 0);
        tl.ack = num<std::uint32_t>(*t, "ack", 0);
        tl.window = num<std::uint16_t>(*t, "window", 65535);
        std::uint8_t flags = opt(*t, "flags") ? tcp_flags_from((*t)["flags"]) : tcp_flags::kAck;
        tl.offset_flags = static_cast<std::uint16_t>(0x5000 | flags);
      }
      pkt.transport = tl;
    }
  }
  if (pkt.icmp && pkt.transport) throw FieldError{"icmp cannot be combined with tcp/udp"};
  int app_blocks = 0;
  for (const char* key : {"dns", "mdns", "dhcp", "http", "ssdp", "coap", "igmp"}) {
    const json* a = opt(j, key);
    if (!a) continue;
    if (++app_blocks > 1) throw FieldError{"more than one application block"};
    std::string_view k(key);
    if (k != "igmp" && !pkt.transport) throw FieldError{std::string(key) + " block requires tcp or udp"};
    if (k == "dns" || k == "mdns") {
      pkt.app = AppLayer{k == "dns" ? AppProto::Dns : AppProto::Mdns, dns_from(*a)};
    } else if (k == "dhcp") {
      DhcpMessage d;
      auto type = parse_dhcp_type(str(*a, "type", "discover"));
      if (!type) throw FieldError{"unknown dhcp type"};
      d.set_message_type(*type);
      d.op = (*type == 2 || *type == 5 || *type == 6) ? 2 : 1;
      d.xid = num<std::uint32_t>(*a, "xid", 0);
      auto ch = mac(*a, "chaddr");
      std::copy(ch.octets.begin(), ch.octets.end(), d.chaddr.begin());
      if (opt(*a, "yiaddr")) {
        auto y = ip(*a, "yiaddr");
        std::copy(y.bytes().begin(), y.bytes().end(), d.yiaddr.begin());
      }
      pkt.app = AppLayer{AppProto::Dhcp, d};
    } else if (k == "http") {
      pkt.app = AppLayer{AppProto::Http, HttpMessage{text_from(*a)}};
    } else if (k == "ssdp") {
      pkt.app = AppLayer{AppProto::Ssdp, SsdpMessage{text_from(*a)}};
    } else if (k == "coap") {
      CoapMessage c;
      auto type = parse_coap_type(str(*a, "type", "CON"));
      if (!type) throw FieldError{"unknown coap type"};
      c.type = static_cast<std::uint8_t>(*type);
      c.code = coap_code_from(*a);
      c.message_id = num<std::uint16_t>(*a, "mid", 0);
      if (opt(*a, "token")) c.token = hex_field(*a, "token");
      if (c.token.size() > 8) throw FieldError{"coap token longer than 8 bytes"};
      if (opt(*a, "uri")) c.set_uri_path(str(*a, "uri"));
      if (opt(*a, "payload")) c.payload = hex_field(*a, "payload");
      pkt.app = AppLayer{AppProto::Coap, c};
    } else {
      IgmpMessage g;
      auto type = parse_igmp_type(str(*a, "type", "membership-report"));
      if (!type) throw FieldError{"unknown igmp type"};
      g.type = *type;
      g.group = opt(*a, "group") ? ip(*a, "group") : IpAddr::v4(0);
      if (!g.group.is_v4()) throw FieldError{"igmp group must be IPv4"};
      pkt.app = AppLayer{AppProto::Igmp, g};
    }
  }
  if (!pkt.app && opt(j, "payload")) pkt.payload = hex_field(j, "payload");
  return pkt;
}

Timestamp ts_from(const json& j) {
  const json* v = opt(j, "ts");
  if (!v) throw FieldError{"missing 'ts'"};
  std::optional<Timestamp> ts;
  if (v->is_string()) ts = Timestamp::parse(v->get<std::string>());
  else if (v->is_number()) ts = Timestamp::parse(v->dump());
  if (!ts) throw FieldError{"'ts' must be non-negative seconds"};
  return *ts;
}

}  // namespace

Trace read_jsonl(std::string_view text) {
  Trace trace;
  std::size_t lineno = 0;
  while (!text.empty()) {
    auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw FormatError(std::string("invalid JSON: ") + e.what(), lineno);
    }
    try {
      if (!j.is_object()) throw FieldError{"expected a JSON object"};
      if (const json* v = opt(j, "v"); v && *v != 1) throw FieldError{"unsupported schema version"};
      Timestamp ts = ts_from(j);
      Packet pkt;
      if (opt(j, "raw")) {
        auto raw = hex_field(j, "raw");
        pkt = dissect(raw, kLinkTypeEthernet, ts);
      } else {
        Packet fields = packet_from_fields(j);
        fields.ts = ts;
        pkt = rebuild(fields);
      }
      if (opt(j, "iface")) pkt.iface = str(j, "iface");
      if (!trace.packets.empty() && pkt.ts < trace.packets.back().ts) {
        throw FieldError{"timestamps must be non-decreasing"};
      }
      trace.packets.push_back(std::move(pkt));
    } catch (const FieldError& e) {
      throw FormatError(e.what, lineno);
    } catch (const FormatError& e) {
      throw FormatError(e.what(), lineno);
    } catch (const json::exception& e) {
      throw FormatError(std::string("bad field: ") + e.what(), lineno);
    } catch (const std::invalid_argument& e) {
      throw FormatError(e.what(), lineno);
    }
  }
  return trace;
}

std::string write_jsonl(const Trace& trace) {
  std::string out;
  for (std::size_t i = 0; i < trace.packets.size(); ++i) {
    out += packet_json(trace.packets[i], i).dump();
    out += '\n';
  }
  return out;
}

namespace {
bool is_pcap_path(const std::filesystem::path& p) {
  auto ext = p.extension().string();
  return ext == ".pcap" || ext == ".cap";
}
}  // namespace

Trace load_trace(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read trace '" + path.string() + "'");
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (is_pcap_path(path)) {
    return read_pcap(std::span(reinterpret_cast<const std::uint8_t*>(data.data()), data.size()));
  }
  return read_jsonl(data);
}

void save_trace(const Trace& trace, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write trace '" + path.string() + "'");
  if (is_pcap_path(path)) {
    Bytes b = write_pcap(trace);
    out.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
  } else {
    out << write_jsonl(trace);
  }
  if (!out) throw std::runtime_error("cannot write trace '" + path.string() + "'");
}

}  // namespace profwall
