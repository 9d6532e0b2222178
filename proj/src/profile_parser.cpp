#include "profwall/profile_parser.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "profwall/errors.hpp"

namespace profwall {

using yaml::Entry;
using yaml::Mark;
using yaml::Node;

FileLoader directory_loader(std::filesystem::path dir) {
  return [dir = std::move(dir)](const std::string& name) -> std::optional<std::string> {
    std::ifstream in(dir / name, std::ios::binary);
    if (!in) return std::nullopt;
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
}

namespace {

std::vector<std::string> split(std::string_view text, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto pos = text.find(sep, start);
    out.emplace_back(text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

[[noreturn]] void fail(const Mark& m, const std::string& what) { throw SyntaxError(m.file, m.line, m.column, what); }

}  // namespace

std::optional<IncludeRef> IncludeRef::parse(std::string_view target) {
  while (!target.empty() && target.front() == ' ') target.remove_prefix(1);
  while (!target.empty() && target.back() == ' ') target.remove_suffix(1);
  IncludeRef ref;
  auto colon = target.find(':');
  if (colon != std::string_view::npos) {
    ref.file = std::string(target.substr(0, colon));
    if (ref.file.empty()) return std::nullopt;
    target.remove_prefix(colon + 1);
  }
  if (target.empty()) return std::nullopt;
  ref.path = split(target, '.');
  for (const auto& seg : ref.path) {
    if (seg.empty()) return std::nullopt;
  }
  return ref;
}

std::string IncludeRef::target() const {
  std::string p = join(path, ".");
  return file.empty() ? p : file + ":" + p;
}

void DocumentSet::add(const std::string& name, Node root) { docs_[name] = std::move(root); }

const Node& DocumentSet::get(const std::string& name) {
  auto it = docs_.find(name);
  if (it != docs_.end()) return it->second;
  std::optional<std::string> text;
  if (loader_) text = loader_(name);
  if (!text) throw ResolutionError("cannot load included file '" + name + "'");
  return docs_.emplace(name, yaml::parse(*text, name)).first->second;
}

std::vector<std::string> DocumentSet::names() const {
  std::vector<std::string> out;
  for (const auto& [name, doc] : docs_) out.push_back(name);
  return out;
}

namespace {

class Resolver {
 public:
  explicit Resolver(DocumentSet& docs) : docs_(docs) {}

  Node expand(const Node& n, const std::string& file) {
    if (n.tag == "!include") {
      if (!n.is_scalar()) fail(n.mark, "!include takes a scalar target");
      auto ref = IncludeRef::parse(n.scalar);
      if (!ref) fail(n.mark, "malformed include target '" + n.scalar + "'");
      return resolve(*ref, file, n.mark);
    }
    if (n.is_mapping()) {
      if (const Node* target = n.find("!include")) {
        if (!target->is_scalar()) fail(target->mark, "!include takes a scalar target");
        auto ref = IncludeRef::parse(target->scalar);
        if (!ref) fail(target->mark, "malformed include target '" + target->scalar + "'");
        for (const auto& e : n.entries) {
          if (e.key != "!include") ref->overrides.emplace_back(e.key, e.value);
        }
        return resolve(*ref, file, target->mark);
      }
      Node out = n;
      for (auto& e : out.entries) e.value = expand(e.value, file);
      return out;
    }
    if (n.is_sequence()) {
      Node out = n;
      for (auto& item : out.items) item = expand(item, file);
      return out;
    }
    return n;
  }

  Node resolve(const IncludeRef& ref, const std::string& current, const Mark& mark) {
    const std::string file = ref.file.empty() ? current : ref.file;
    const std::string key = file + ":" + join(ref.path, ".");
    if (std::find(stack_.begin(), stack_.end(), key) != stack_.end()) {
      std::vector<std::string> chain(std::find(stack_.begin(), stack_.end(), key), stack_.end());
      chain.push_back(key);
      throw ResolutionError(mark.str() + ": include cycle: " + join(chain, " -> "));
    }
    const Node* node = nullptr;
    try {
      node = &docs_.get(file);
    } catch (const ResolutionError& e) {
      throw ResolutionError(mark.str() + ": " + e.what());
    }
    for (const auto& seg : ref.path) {
      node = node->is_mapping() ? node->find(seg) : nullptr;
      if (!node) throw ResolutionError(mark.str() + ": include target '" + ref.target() + "' not found");
    }
    if (!node->is_mapping()) {
      throw ResolutionError(mark.str() + ": include target '" + ref.target() + "' is not a mapping");
    }
    stack_.push_back(key);
    Node fragment = expand(*node, file);
    stack_.pop_back();

    for (const auto& [path, value] : ref.overrides) {
      Node* slot = &fragment;
      for (const auto& seg : split(path, '.')) {
        slot = slot->is_mapping() ? slot->find(seg) : nullptr;
        if (!slot) {
          throw ResolutionError(mark.str() + ": override path '" + path + "' does not exist in '" +
                                ref.target() + "'");
        }
      }
      *slot = expand(value, current);
    }
    return fragment;
  }

 private:
  DocumentSet& docs_;
  std::vector<std::string> stack_;
};

// ---------------------------------------------------------------------------
// Schema conversion

const std::string& scalar_of(const Entry& e) {
  if (e.value.is_null()) {
    throw ResolutionError(e.key_mark.str() + ": '" + e.key + "' has no value (unfilled include placeholder?)");
  }
  if (!e.value.is_scalar()) fail(e.value.mark, "'" + e.key + "' must be a scalar");
  return e.value.scalar;
}

void require_mapping(const Node& n, const std::string& what) {
  if (!n.is_mapping()) fail(n.mark, what + " must be a mapping");
}

[[noreturn]] void unknown_key(const Entry& e, std::string_view section) {
  fail(e.key_mark, "unknown key '" + e.key + "' in " + std::string(section));
}

bool parse_bool(const Entry& e) {
  const auto& s = scalar_of(e);
  if (s == "true" || s == "True" || s == "yes") return true;
  if (s == "false" || s == "False" || s == "no") return false;
  fail(e.value.mark, "'" + e.key + "' must be true or false");
}

template <typename T>
T parse_or_fail(const Entry& e, std::optional<T> v, std::string_view what) {
  if (!v) fail(e.value.mark, "invalid " + std::string(what) + " '" + scalar_of(e) + "'");
  return *v;
}

MacExpr mac_expr(const Entry& e) { return parse_or_fail(e, MacExpr::parse(scalar_of(e)), "MAC address"); }

EndpointExpr endpoint(const Entry& e) { return parse_or_fail(e, EndpointExpr::parse(scalar_of(e)), "endpoint"); }

PortRange port_range(const Entry& e) { return parse_or_fail(e, PortRange::parse(scalar_of(e)), "port"); }

std::uint64_t positive_int(const Entry& e) {
  const auto& s = scalar_of(e);
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) fail(e.value.mark, "'" + e.key + "' must be an integer");
  return v;
}

// Seconds with up to millisecond precision: "2", "2.5", "2.5s", "500ms".
Duration duration(const Entry& e) {
  std::string_view s = scalar_of(e);
  std::int64_t scale_ms = 1000;
  if (s.size() > 2 && s.substr(s.size() - 2) == "ms") {
    scale_ms = 1;
    s.remove_suffix(2);
  } else if (s.size() > 1 && s.back() == 's') {
    s.remove_suffix(1);
  }
  auto dot = s.find('.');
  std::string_view whole = s.substr(0, dot);
  std::string_view frac = dot == std::string_view::npos ? std::string_view{} : s.substr(dot + 1);
  while (!frac.empty() && frac.back() == '0') frac.remove_suffix(1);
  std::int64_t w = 0;
  std::int64_t f = 0;
  auto ok = [](std::string_view t, std::int64_t& out) {
    if (t.empty()) {
      out = 0;
      return true;
    }
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
    return ec == std::errc() && ptr == t.data() + t.size() && out >= 0;
  };
  if ((whole.empty() && frac.empty()) || !ok(whole, w) || !ok(frac, f)) {
    fail(e.value.mark, "invalid duration '" + scalar_of(e) + "'");
  }
  // Fractional digits in units of `scale_ms` milliseconds must resolve to whole milliseconds.
  std::int64_t frac_den = 1;
  for (std::size_t i = 0; i < frac.size(); ++i) frac_den *= 10;
  if ((f * scale_ms) % frac_den != 0) fail(e.value.mark, "duration resolution is one millisecond");
  std::int64_t ms = w * scale_ms + f * scale_ms / frac_den;
  return std::chrono::milliseconds(ms);
}

LinkMatch link_block(const Node& n) {
  LinkMatch m;
  for (const auto& e : n.entries) {
    if (e.key == "src") m.src = mac_expr(e);
    else if (e.key == "dst") m.dst = mac_expr(e);
    else if (e.key == "type") {
      const auto& s = scalar_of(e);
      unsigned v = 0;
      bool hex = s.size() > 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X');
      const char* begin = s.data() + (hex ? 2 : 0);
      auto [ptr, ec] = std::from_chars(begin, s.data() + s.size(), v, hex ? 16 : 10);
      if (ec != std::errc() || ptr != s.data() + s.size() || v > 0xffff) fail(e.value.mark, "invalid ethertype");
      m.eth_type = static_cast<std::uint16_t>(v);
    } else {
      unknown_key(e, "ethernet");
    }
  }
  return m;
}

ArpMatch arp_block(const Node& n) {
  ArpMatch m;
  for (const auto& e : n.entries) {
    if (e.key == "type") {
      const auto& s = scalar_of(e);
      if (s == "request") m.op = ArpOp::Request;
      else if (s == "reply" || s == "response") m.op = ArpOp::Reply;
      else fail(e.value.mark, "arp type must be request or reply");
    } else if (e.key == "sender-mac") {
      m.sender_hw = mac_expr(e);
    } else if (e.key == "sender-ip") {
      m.sender_ip = endpoint(e);
    } else if (e.key == "target-mac") {
      m.target_hw = mac_expr(e);
    } else if (e.key == "target-ip") {
      m.target_ip = endpoint(e);
    } else {
      unknown_key(e, "arp");
    }
  }
  return m;
}

IpMatch ip_block(const Node& n, int version) {
  IpMatch m;
  m.version = version;
  for (const auto& e : n.entries) {
    if (e.key == "src") m.src = endpoint(e);
    else if (e.key == "dst") m.dst = endpoint(e);
    else unknown_key(e, version == 6 ? "ipv6" : "ipv4");
  }
  return m;
}

IcmpMatch icmp_block(const Node& n) {
  IcmpMatch m;
  for (const auto& e : n.entries) {
    if (e.key == "type") m.type = parse_or_fail(e, parse_icmp_kind(scalar_of(e)), "icmp type");
    else unknown_key(e, "icmp");
  }
  return m;
}

TransportMatch transport_block(const Node& n, TransportProto proto) {
  TransportMatch m;
  m.proto = proto;
  for (const auto& e : n.entries) {
    if (e.key == "src-port") m.src_port = port_range(e);
    else if (e.key == "dst-port") m.dst_port = port_range(e);
    else unknown_key(e, std::string(to_string(proto)));
  }
  return m;
}

DnsMatch dns_block(const Node& n, std::string_view section) {
  DnsMatch m;
  for (const auto& e : n.entries) {
    if (e.key == "qr") {
      const auto& s = scalar_of(e);
      if (s == "query") m.qr = DnsQr::Query;
      else if (s == "response") m.qr = DnsQr::Response;
      else fail(e.value.mark, "qr must be query or response");
    } else if (e.key == "qtype") {
      m.qtype = parse_or_fail(e, parse_dns_type(scalar_of(e)), "record type");
    } else if (e.key == "domain-name") {
      m.domain_name = normalize_domain(scalar_of(e));
      if (m.domain_name->empty()) fail(e.value.mark, "empty domain name");
    } else {
      unknown_key(e, section);
    }
  }
  return m;
}

DhcpMatch dhcp_block(const Node& n) {
  DhcpMatch m;
  for (const auto& e : n.entries) {
    if (e.key == "type") m.message_type = parse_or_fail(e, parse_dhcp_type(scalar_of(e)), "dhcp message type");
    else unknown_key(e, "dhcp");
  }
  return m;
}

HttpMatch http_block(const Node& n) {
  HttpMatch m;
  for (const auto& e : n.entries) {
    if (e.key == "response") m.response = parse_bool(e);
    else if (e.key == "method") m.method = scalar_of(e);
    else if (e.key == "uri") m.uri_prefix = scalar_of(e);
    else unknown_key(e, "http");
  }
  if (!m.response && (m.method || m.uri_prefix)) m.response = false;
  return m;
}

SsdpMatch ssdp_block(const Node& n) {
  SsdpMatch m;
  for (const auto& e : n.entries) {
    if (e.key == "response") m.response = parse_bool(e);
    else if (e.key == "method") m.method = scalar_of(e);
    else if (e.key == "st") m.st = scalar_of(e);
    else unknown_key(e, "ssdp");
  }
  if (!m.response && m.method) m.response = false;
  return m;
}

CoapMatch coap_block(const Node& n) {
  CoapMatch m;
  for (const auto& e : n.entries) {
    if (e.key == "response") m.response = parse_bool(e);
    else if (e.key == "type") m.type = parse_or_fail(e, parse_coap_type(scalar_of(e)), "coap type");
    else if (e.key == "method") m.method = parse_or_fail(e, parse_coap_method(scalar_of(e)), "coap method");
    else if (e.key == "uri") m.uri_path = scalar_of(e);
    else unknown_key(e, "coap");
  }
  if (!m.response && (m.method || m.uri_path)) m.response = false;
  return m;
}

IgmpMatch igmp_block(const Node& n) {
  IgmpMatch m;
  for (const auto& e : n.entries) {
    if (e.key == "type") {
      m.type = parse_or_fail(e, parse_igmp_type(scalar_of(e)), "igmp type");
    } else if (e.key == "group") {
      m.group = parse_or_fail(e, IpAddr::parse(scalar_of(e)), "group address");
    } else {
      unknown_key(e, "igmp");
    }
  }
  return m;
}

MatchSpec protocols_block(const Node& n) {
  MatchSpec m;
  if (n.is_null()) return m;
  require_mapping(n, "protocols");
  auto set_app = [&](const Entry& e, AppProto proto, auto spec) {
    if (m.app) fail(e.key_mark, "a policy matches at most one application protocol");
    m.app = AppMatch{proto, spec};
  };
  for (const auto& e : n.entries) {
    Node block = e.value;
    if (block.is_null()) block = Node::make_mapping(e.value.mark);
    require_mapping(block, "'" + e.key + "'");
    auto once = [&](bool present) {
      if (present) fail(e.key_mark, "duplicate protocol layer '" + e.key + "'");
    };
    if (e.key == "ethernet") {
      once(m.link.has_value());
      m.link = link_block(block);
    } else if (e.key == "arp") {
      once(m.arp.has_value());
      m.arp = arp_block(block);
    } else if (e.key == "ipv4" || e.key == "ipv6") {
      once(m.ip.has_value());
      m.ip = ip_block(block, e.key == "ipv6" ? 6 : 4);
    } else if (e.key == "icmp" || e.key == "icmpv6") {
      once(m.icmp.has_value());
      m.icmp = icmp_block(block);
    } else if (e.key == "tcp" || e.key == "udp") {
      once(m.transport.has_value());
      m.transport = transport_block(block, e.key == "tcp" ? TransportProto::Tcp : TransportProto::Udp);
    } else if (e.key == "dns") {
      set_app(e, AppProto::Dns, dns_block(block, "dns"));
    } else if (e.key == "mdns") {
      set_app(e, AppProto::Mdns, dns_block(block, "mdns"));
    } else if (e.key == "dhcp") {
      set_app(e, AppProto::Dhcp, dhcp_block(block));
    } else if (e.key == "http") {
      set_app(e, AppProto::Http, http_block(block));
    } else if (e.key == "ssdp") {
      set_app(e, AppProto::Ssdp, ssdp_block(block));
    } else if (e.key == "coap") {
      set_app(e, AppProto::Coap, coap_block(block));
    } else if (e.key == "igmp") {
      set_app(e, AppProto::Igmp, igmp_block(block));
    } else {
      unknown_key(e, "protocols");
    }
  }
  return m;
}

Stats stats_block(const Node& n) {
  Stats s;
  require_mapping(n, "stats");
  for (const auto& e : n.entries) {
    if (e.key == "rate") {
      s.rate = parse_or_fail(e, RateSpec::parse(scalar_of(e)), "rate");
    } else if (e.key == "packet-count") {
      s.max_packets = positive_int(e);
    } else if (e.key == "duration") {
      s.max_duration = duration(e);
    } else {
      unknown_key(e, "stats");
    }
  }
  return s;
}

Policy policy_of(const Entry& pe) {
  Policy p;
  p.name = pe.key;
  require_mapping(pe.value, "policy '" + pe.key + "'");
  std::optional<PolicyKind> kind;
  bool saw_protocols = false;
  for (const auto& e : pe.value.entries) {
    if (e.key == "type") {
      kind = parse_or_fail(e, parse_policy_kind(scalar_of(e)), "policy type");
    } else if (e.key == "bidirectional") {
      p.bidirectional = parse_bool(e);
    } else if (e.key == "protocols") {
      saw_protocols = true;
      p.match = protocols_block(e.value);
    } else if (e.key == "stats") {
      if (!e.value.is_null()) p.stats = stats_block(e.value);
    } else {
      unknown_key(e, "policy '" + pe.key + "'");
    }
  }
  if (!saw_protocols) fail(pe.key_mark, "policy '" + pe.key + "' has no protocols section");
  if (kind) {
    p.kind = *kind;
  } else if (p.stats && (p.stats->max_packets || p.stats->max_duration)) {
    p.kind = PolicyKind::Transient;
  } else if (p.stats && p.stats->rate) {
    p.kind = PolicyKind::Periodic;
  } else {
    p.kind = PolicyKind::OneOff;
  }
  return p;
}

DeviceInfo device_info_of(const Entry& de) {
  require_mapping(de.value, "device-info");
  DeviceInfo info;
  bool saw_mac = false;
  for (const auto& e : de.value.entries) {
    if (e.key == "name") {
      info.name = scalar_of(e);
    } else if (e.key == "mac") {
      info.mac = parse_or_fail(e, MacAddr::parse(scalar_of(e)), "MAC address");
      saw_mac = true;
    } else if (e.key == "ipv4") {
      info.ipv4 = parse_or_fail(e, IpAddr::parse(scalar_of(e)), "IPv4 address");
    } else if (e.key == "ipv6") {
      info.ipv6 = parse_or_fail(e, IpAddr::parse(scalar_of(e)), "IPv6 address");
    } else {
      unknown_key(e, "device-info");
    }
  }
  if (!saw_mac) fail(de.key_mark, "device-info requires a mac");
  return info;
}

Profile profile_of(const Node& root) {
  if (!root.is_mapping()) fail(root.mark, "profile must be a mapping");
  Profile profile;
  bool saw_device = false;
  bool saw_interactions = false;
  for (const auto& e : root.entries) {
    if (e.key == "device-info") {
      profile.device_info = device_info_of(e);
      saw_device = true;
    } else if (e.key == "interactions") {
      saw_interactions = true;
      if (e.value.is_null()) continue;
      require_mapping(e.value, "interactions");
      for (const auto& ie : e.value.entries) {
        Interaction interaction;
        interaction.name = ie.key;
        if (!ie.value.is_null()) {
          require_mapping(ie.value, "interaction '" + ie.key + "'");
          for (const auto& pe : ie.value.entries) interaction.policies.push_back(policy_of(pe));
        }
        profile.interactions.push_back(std::move(interaction));
      }
    } else if (e.key == "patterns") {
      if (!e.value.is_null()) require_mapping(e.value, "patterns");
    } else {
      unknown_key(e, "profile");
    }
  }
  if (!saw_device) fail(root.mark, "profile requires a device-info section");
  if (!saw_interactions) fail(root.mark, "profile requires an interactions section");
  return profile;
}

}  // namespace

Node resolve_include(const IncludeRef& ref, const std::string& current, DocumentSet& docs) {
  Resolver r(docs);
  return r.resolve(ref, current, Mark{current, 0, 0});
}

Node expand_includes(const Node& node, const std::string& file, DocumentSet& docs) {
  Resolver r(docs);
  return r.expand(node, file);
}

Profile parse_profile(std::string_view source, const FileLoader& loader, const std::string& file_name) {
  DocumentSet docs(loader);
  docs.add(file_name, yaml::parse(source, file_name));
  Node root = docs.get(file_name);
  if (root.is_mapping()) {
    Resolver r(docs);
    for (auto& e : root.entries) {
      if (e.key != "patterns") e.value = r.expand(e.value, file_name);
    }
  }
  Profile profile = profile_of(root);
  auto diagnostics = validate_profile(profile);
  if (!diagnostics.empty()) throw ValidationError(std::move(diagnostics));
  return profile;
}

Profile load_profile_file(const std::filesystem::path& path) {
  auto loader = directory_loader(path.parent_path());
  auto text = loader(path.filename().string());
  if (!text) throw ResolutionError("cannot read profile '" + path.string() + "'");
  return parse_profile(*text, loader, path.filename().string());
}

std::vector<Profile> load_profile_dir(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    auto ext = entry.path().extension();
    if (entry.is_regular_file() && (ext == ".yaml" || ext == ".yml")) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  auto loader = directory_loader(dir);
  std::vector<Profile> out;
  for (const auto& f : files) {
    auto name = f.filename().string();
    auto text = loader(name);
    if (!text) throw ResolutionError("cannot read profile '" + f.string() + "'");
    Node root = yaml::parse(*text, name);
    if (!root.is_mapping() || !root.find("device-info")) continue;
    out.push_back(parse_profile(*text, loader, name));
  }
  return out;
}

}  // namespace profwall
