#include "profwall/proto.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>

namespace profwall {

namespace {

struct Malformed {};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> data, std::size_t pos = 0) : data_(data), pos_(pos) {}

  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return data_.size() - pos_; }
  void seek(std::size_t pos) {
    if (pos > data_.size()) throw Malformed{};
    pos_ = pos;
  }
  std::uint8_t u8() {
    need(1);
    return data_[pos_++];
  }
  std::uint16_t u16() {
    need(2);
    auto v = static_cast<std::uint16_t>(data_[pos_] << 8 | data_[pos_ + 1]);
    pos_ += 2;
    return v;
  }
  std::uint32_t u32() {
    std::uint32_t hi = u16();
    return hi << 16 | u16();
  }
  std::span<const std::uint8_t> take(std::size_t n) {
    need(n);
    auto s = data_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  template <std::size_t N>
  std::array<std::uint8_t, N> array() {
    std::array<std::uint8_t, N> out{};
    auto s = take(N);
    std::copy(s.begin(), s.end(), out.begin());
    return out;
  }
  std::span<const std::uint8_t> data() const { return data_; }

 private:
  void need(std::size_t n) const {
    if (remaining() < n) throw Malformed{};
  }
  std::span<const std::uint8_t> data_;
  std::size_t pos_;
};

void put16(Bytes& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

void put32(Bytes& out, std::uint32_t v) {
  put16(out, static_cast<std::uint16_t>(v >> 16));
  put16(out, static_cast<std::uint16_t>(v));
}

void append(Bytes& out, std::span<const std::uint8_t> s) { out.insert(out.end(), s.begin(), s.end()); }

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) == std::tolower(static_cast<unsigned char>(y));
         });
}

// ---------------------------------------------------------------------------
// DNS

constexpr std::uint16_t kTypeA = 1;
constexpr std::uint16_t kTypeNs = 2;
constexpr std::uint16_t kTypeCname = 5;
constexpr std::uint16_t kTypePtr = 12;
constexpr std::uint16_t kTypeAaaa = 28;

std::string read_name(Reader& r) {
  std::string name;
  std::size_t pos = r.pos();
  std::optional<std::size_t> resume;
  int jumps = 0;
  Reader cursor(r.data(), pos);
  while (true) {
    std::uint8_t len = cursor.u8();
    if ((len & 0xc0) == 0xc0) {
      std::size_t target = static_cast<std::size_t>(len & 0x3f) << 8 | cursor.u8();
      if (!resume) resume = cursor.pos();
      if (++jumps > 32 || target >= r.data().size()) throw Malformed{};
      cursor.seek(target);
      continue;
    }
    if (len & 0xc0) throw Malformed{};
    if (len == 0) break;
    auto label = cursor.take(len);
    if (!name.empty()) name += '.';
    name.append(label.begin(), label.end());
    if (name.size() > 255) throw Malformed{};
  }
  r.seek(resume ? *resume : cursor.pos());
  return name;
}

void write_name(Bytes& out, std::string_view name) {
  while (!name.empty()) {
    auto dot = name.find('.');
    auto label = name.substr(0, dot);
    if (label.empty() || label.size() > 63) throw std::invalid_argument("invalid DNS label in '" + std::string(name) + "'");
    out.push_back(static_cast<std::uint8_t>(label.size()));
    out.insert(out.end(), label.begin(), label.end());
    if (dot == std::string_view::npos) break;
    name.remove_prefix(dot + 1);
  }
  out.push_back(0);
}

DnsRecord read_record(Reader& r) {
  DnsRecord rec;
  rec.name = read_name(r);
  rec.type = r.u16();
  rec.rclass = r.u16();
  rec.ttl = r.u32();
  std::uint16_t rdlen = r.u16();
  std::size_t end = r.pos() + rdlen;
  if (end > r.data().size()) throw Malformed{};
  if (rec.type == kTypeA && rdlen == 4) {
    rec.address = IpAddr::from_bytes(r.take(4));
  } else if (rec.type == kTypeAaaa && rdlen == 16) {
    rec.address = IpAddr::from_bytes(r.take(16));
  } else if (rec.type == kTypeCname || rec.type == kTypePtr || rec.type == kTypeNs) {
    rec.target = read_name(r);
    if (r.pos() != end) throw Malformed{};
  } else {
    auto s = r.take(rdlen);
    rec.rdata.assign(s.begin(), s.end());
  }
  r.seek(end);
  return rec;
}

void write_record(Bytes& out, const DnsRecord& rec) {
  write_name(out, rec.name);
  put16(out, rec.type);
  put16(out, rec.rclass);
  put32(out, rec.ttl);
  Bytes rdata;
  if (rec.address) {
    append(rdata, rec.address->bytes());
  } else if (rec.target) {
    write_name(rdata, *rec.target);
  } else {
    rdata = rec.rdata;
  }
  put16(out, static_cast<std::uint16_t>(rdata.size()));
  append(out, rdata);
}

}  // namespace

std::optional<DnsMessage> decode_dns(std::span<const std::uint8_t> bytes) {
  try {
    Reader r(bytes);
    DnsMessage m;
    m.id = r.u16();
    m.flags = r.u16();
    std::uint16_t qd = r.u16();
    std::uint16_t an = r.u16();
    std::uint16_t ns = r.u16();
    std::uint16_t ar = r.u16();
    for (int i = 0; i < qd; ++i) {
      DnsQuestion q;
      q.name = read_name(r);
      q.qtype = r.u16();
      q.qclass = r.u16();
      m.questions.push_back(std::move(q));
    }
    for (int i = 0; i < an; ++i) m.answers.push_back(read_record(r));
    for (int i = 0; i < ns; ++i) m.authorities.push_back(read_record(r));
    for (int i = 0; i < ar; ++i) m.additionals.push_back(read_record(r));
    return m;
  } catch (const Malformed&) {
    return std::nullopt;
  }
}

Bytes encode_dns(const DnsMessage& m) {
  Bytes out;
  put16(out, m.id);
  put16(out, m.flags);
  put16(out, static_cast<std::uint16_t>(m.questions.size()));
  put16(out, static_cast<std::uint16_t>(m.answers.size()));
  put16(out, static_cast<std::uint16_t>(m.authorities.size()));
  put16(out, static_cast<std::uint16_t>(m.additionals.size()));
  for (const auto& q : m.questions) {
    write_name(out, q.name);
    put16(out, q.qtype);
    put16(out, q.qclass);
  }
  for (const auto* section : {&m.answers, &m.authorities, &m.additionals}) {
    for (const auto& rec : *section) write_record(out, rec);
  }
  return out;
}

// ---------------------------------------------------------------------------
// DHCP

namespace {
constexpr std::uint32_t kDhcpCookie = 0x63825363;
constexpr std::uint8_t kOptMessageType = 53;
}  // namespace

std::optional<std::uint8_t> DhcpMessage::message_type() const {
  for (const auto& [code, data] : options) {
    if (code == kOptMessageType && data.size() == 1) return data[0];
  }
  return std::nullopt;
}

void DhcpMessage::set_message_type(std::uint8_t type) {
  for (auto& [code, data] : options) {
    if (code == kOptMessageType) {
      data = {type};
      return;
    }
  }
  options.insert(options.begin(), {kOptMessageType, Bytes{type}});
}

std::optional<DhcpMessage> decode_dhcp(std::span<const std::uint8_t> bytes) {
  try {
    Reader r(bytes);
    DhcpMessage m;
    m.op = r.u8();
    m.htype = r.u8();
    m.hlen = r.u8();
    m.hops = r.u8();
    m.xid = r.u32();
    m.secs = r.u16();
    m.flags = r.u16();
    m.ciaddr = r.array<4>();
    m.yiaddr = r.array<4>();
    m.siaddr = r.array<4>();
    m.giaddr = r.array<4>();
    m.chaddr = r.array<16>();
    m.sname = r.array<64>();
    m.file = r.array<128>();
    if (r.u32() != kDhcpCookie) return std::nullopt;
    while (r.remaining() > 0) {
      std::uint8_t code = r.u8();
      if (code == 0) continue;
      if (code == 255) break;
      std::uint8_t len = r.u8();
      auto data = r.take(len);
      m.options.emplace_back(code, Bytes(data.begin(), data.end()));
    }
    return m;
  } catch (const Malformed&) {
    return std::nullopt;
  }
}

Bytes encode_dhcp(const DhcpMessage& m) {
  Bytes out;
  out.push_back(m.op);
  out.push_back(m.htype);
  out.push_back(m.hlen);
  out.push_back(m.hops);
  put32(out, m.xid);
  put16(out, m.secs);
  put16(out, m.flags);
  append(out, m.ciaddr);
  append(out, m.yiaddr);
  append(out, m.siaddr);
  append(out, m.giaddr);
  append(out, m.chaddr);
  append(out, m.sname);
  append(out, m.file);
  put32(out, kDhcpCookie);
  for (const auto& [code, data] : m.options) {
    if (data.size() > 255) throw std::invalid_argument("DHCP option too long");
    out.push_back(code);
    out.push_back(static_cast<std::uint8_t>(data.size()));
    append(out, data);
  }
  out.push_back(255);
  return out;
}

// ---------------------------------------------------------------------------
// HTTP / SSDP

namespace {

constexpr std::array<std::string_view, 13> kMethods{"GET",    "POST",   "PUT",       "DELETE",      "HEAD",
                                                    "OPTIONS", "PATCH", "CONNECT",   "TRACE",       "NOTIFY",
                                                    "M-SEARCH", "SUBSCRIBE", "UNSUBSCRIBE"};

bool is_method(std::string_view s) { return std::find(kMethods.begin(), kMethods.end(), s) != kMethods.end(); }

bool printable(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](char c) {
    auto u = static_cast<unsigned char>(c);
    return u >= 0x20 && u != 0x7f;
  });
}

}  // namespace

bool looks_like_http(std::span<const std::uint8_t> bytes) {
  std::string_view s(reinterpret_cast<const char*>(bytes.data()), std::min<std::size_t>(bytes.size(), 16));
  if (s.substr(0, 5) == "HTTP/") return true;
  auto sp = s.find(' ');
  return sp != std::string_view::npos && is_method(s.substr(0, sp));
}

std::optional<std::string> TextMessage::header(std::string_view name) const {
  for (const auto& [k, v] : headers) {
    if (iequals(k, name)) return v;
  }
  return std::nullopt;
}

std::optional<std::string> SsdpMessage::search_target() const {
  if (auto st = header("ST")) return st;
  return header("NT");
}

std::optional<TextMessage> decode_text(std::span<const std::uint8_t> bytes) {
  std::string_view text(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  TextMessage m;
  std::size_t body_at = text.size();
  auto blank = text.find("\r\n\r\n");
  std::string_view head = text;
  if (blank != std::string_view::npos) {
    head = text.substr(0, blank);
    body_at = blank + 4;
  } else if (text.size() >= 2 && text.substr(text.size() - 2) == "\r\n") {
    head = text.substr(0, text.size() - 2);
  }
  std::vector<std::string_view> lines;
  while (true) {
    auto eol = head.find("\r\n");
    lines.push_back(head.substr(0, eol));
    if (eol == std::string_view::npos) break;
    head.remove_prefix(eol + 2);
  }
  std::string_view start = lines.front();
  if (!printable(start)) return std::nullopt;
  auto sp1 = start.find(' ');
  if (sp1 == std::string_view::npos) return std::nullopt;
  auto sp2 = start.find(' ', sp1 + 1);
  std::string_view first = start.substr(0, sp1);
  if (first.substr(0, 5) == "HTTP/") {
    m.response = true;
    m.version = std::string(first);
    std::string_view code = start.substr(sp1 + 1, sp2 == std::string_view::npos ? std::string_view::npos : sp2 - sp1 - 1);
    if (code.size() != 3 || !std::all_of(code.begin(), code.end(), [](char c) { return c >= '0' && c <= '9'; })) {
      return std::nullopt;
    }
    m.status = (code[0] - '0') * 100 + (code[1] - '0') * 10 + (code[2] - '0');
    if (sp2 != std::string_view::npos) m.reason = std::string(start.substr(sp2 + 1));
  } else {
    if (!is_method(first) || sp2 == std::string_view::npos) return std::nullopt;
    m.method = std::string(first);
    m.uri = std::string(start.substr(sp1 + 1, sp2 - sp1 - 1));
    m.version = std::string(start.substr(sp2 + 1));
    if (m.uri.empty() || m.version.substr(0, 5) != "HTTP/") return std::nullopt;
  }
  for (std::size_t i = 1; i < lines.size(); ++i) {
    auto line = lines[i];
    if (!printable(line)) return std::nullopt;
    auto colon = line.find(':');
    if (colon == std::string_view::npos || colon == 0) return std::nullopt;
    auto value = line.substr(colon + 1);
    while (!value.empty() && value.front() == ' ') value.remove_prefix(1);
    while (!value.empty() && value.back() == ' ') value.remove_suffix(1);
    m.headers.emplace_back(std::string(line.substr(0, colon)), std::string(value));
  }
  if (body_at < text.size()) m.body.assign(bytes.begin() + static_cast<std::ptrdiff_t>(body_at), bytes.end());
  return m;
}

Bytes encode_text(const TextMessage& m) {
  std::string s;
  if (m.response) {
    s = m.version + " " + std::to_string(m.status);
    if (!m.reason.empty()) s += " " + m.reason;
  } else {
    s = m.method + " " + m.uri + " " + m.version;
  }
  s += "\r\n";
  for (const auto& [k, v] : m.headers) s += k + ": " + v + "\r\n";
  s += "\r\n";
  Bytes out(s.begin(), s.end());
  append(out, m.body);
  return out;
}

// ---------------------------------------------------------------------------
// CoAP

namespace {
constexpr std::uint16_t kOptUriPath = 11;

void put_coap_nibble_ext(Bytes& ext, std::uint32_t v, std::uint8_t& nibble) {
  if (v < 13) {
    nibble = static_cast<std::uint8_t>(v);
  } else if (v < 269) {
    nibble = 13;
    ext.push_back(static_cast<std::uint8_t>(v - 13));
  } else {
    nibble = 14;
    put16(ext, static_cast<std::uint16_t>(v - 269));
  }
}

std::uint32_t read_coap_ext(Reader& r, std::uint8_t nibble) {
  if (nibble < 13) return nibble;
  if (nibble == 13) return 13u + r.u8();
  if (nibble == 14) return 269u + r.u16();
  throw Malformed{};
}
}  // namespace

std::optional<std::uint8_t> CoapMessage::method() const {
  if ((code >> 5) == 0 && code >= 1 && code <= 4) return code;
  return std::nullopt;
}

std::string CoapMessage::uri_path() const {
  std::string out;
  bool first = true;
  for (const auto& [num, value] : options) {
    if (num != kOptUriPath) continue;
    if (!first) out += '/';
    out.append(value.begin(), value.end());
    first = false;
  }
  return out;
}

void CoapMessage::set_uri_path(std::string_view path) {
  std::erase_if(options, [](const auto& o) { return o.first == kOptUriPath; });
  std::vector<std::pair<std::uint16_t, Bytes>> segments;
  while (!path.empty()) {
    auto slash = path.find('/');
    auto seg = path.substr(0, slash);
    if (!seg.empty()) segments.emplace_back(kOptUriPath, Bytes(seg.begin(), seg.end()));
    if (slash == std::string_view::npos) break;
    path.remove_prefix(slash + 1);
  }
  auto at = std::find_if(options.begin(), options.end(), [](const auto& o) { return o.first > kOptUriPath; });
  options.insert(at, segments.begin(), segments.end());
}

std::optional<CoapMessage> decode_coap(std::span<const std::uint8_t> bytes) {
  try {
    Reader r(bytes);
    CoapMessage m;
    std::uint8_t b0 = r.u8();
    if ((b0 >> 6) != 1) return std::nullopt;
    m.type = (b0 >> 4) & 0x3;
    std::uint8_t tkl = b0 & 0xf;
    if (tkl > 8) return std::nullopt;
    m.code = r.u8();
    m.message_id = r.u16();
    auto token = r.take(tkl);
    m.token.assign(token.begin(), token.end());
    std::uint32_t number = 0;
    while (r.remaining() > 0) {
      std::uint8_t head = r.u8();
      if (head == 0xff) {
        if (r.remaining() == 0) return std::nullopt;
        auto p = r.take(r.remaining());
        m.payload.assign(p.begin(), p.end());
        break;
      }
      std::uint32_t delta = read_coap_ext(r, head >> 4);
      std::uint32_t len = read_coap_ext(r, head & 0xf);
      number += delta;
      if (number > 0xffff) return std::nullopt;
      auto value = r.take(len);
      m.options.emplace_back(static_cast<std::uint16_t>(number), Bytes(value.begin(), value.end()));
    }
    return m;
  } catch (const Malformed&) {
    return std::nullopt;
  }
}

Bytes encode_coap(const CoapMessage& m) {
  if (m.token.size() > 8) throw std::invalid_argument("CoAP token longer than 8 bytes");
  Bytes out;
  out.push_back(static_cast<std::uint8_t>(0x40 | (m.type & 0x3) << 4 | m.token.size()));
  out.push_back(m.code);
  put16(out, m.message_id);
  append(out, m.token);
  std::uint32_t prev = 0;
  for (const auto& [num, value] : m.options) {
    if (num < prev) throw std::invalid_argument("CoAP options must be sorted by number");
    Bytes ext;
    std::uint8_t dn = 0;
    std::uint8_t ln = 0;
    put_coap_nibble_ext(ext, num - prev, dn);
    Bytes len_ext;
    put_coap_nibble_ext(len_ext, static_cast<std::uint32_t>(value.size()), ln);
    out.push_back(static_cast<std::uint8_t>(dn << 4 | ln));
    append(out, ext);
    append(out, len_ext);
    append(out, value);
    prev = num;
  }
  if (!m.payload.empty()) {
    out.push_back(0xff);
    append(out, m.payload);
  }
  return out;
}

// ---------------------------------------------------------------------------
// IGMP

std::optional<IgmpMessage> decode_igmp(std::span<const std::uint8_t> bytes) {
  try {
    Reader r(bytes);
    IgmpMessage m;
    m.type = r.u8();
    m.max_resp = r.u8();
    m.checksum = r.u16();
    m.group = *IpAddr::from_bytes(r.take(4));
    auto extra = r.take(r.remaining());
    m.extra.assign(extra.begin(), extra.end());
    return m;
  } catch (const Malformed&) {
    return std::nullopt;
  }
}

Bytes encode_igmp(const IgmpMessage& m) {
  Bytes out;
  out.push_back(m.type);
  out.push_back(m.max_resp);
  put16(out, 0);
  append(out, m.group.is_v4() ? m.group.bytes() : std::span<const std::uint8_t>(IpAddr().bytes()));
  append(out, m.extra);
  std::uint16_t sum = checksum_fold(checksum_add(0, out));
  out[2] = static_cast<std::uint8_t>(sum >> 8);
  out[3] = static_cast<std::uint8_t>(sum);
  return out;
}

// ---------------------------------------------------------------------------

std::uint32_t checksum_add(std::uint32_t sum, std::span<const std::uint8_t> bytes) {
  std::size_t i = 0;
  for (; i + 1 < bytes.size(); i += 2) sum += static_cast<std::uint32_t>(bytes[i] << 8 | bytes[i + 1]);
  if (i < bytes.size()) sum += static_cast<std::uint32_t>(bytes[i] << 8);
  while (sum >> 16) sum = (sum & 0xffff) + (sum >> 16);
  return sum;
}

std::uint16_t checksum_fold(std::uint32_t sum) {
  while (sum >> 16) sum = (sum & 0xffff) + (sum >> 16);
  return static_cast<std::uint16_t>(~sum);
}

}  // namespace profwall
