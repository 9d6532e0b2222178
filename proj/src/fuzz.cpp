#include <algorithm>
#include <cmath>
#include <random>

#include "profwall/errors.hpp"
#include "profwall/harness.hpp"

namespace profwall {

namespace {

class Mutator {
 public:
  Mutator(std::uint64_t seed, std::size_t index) : seed_(seed), rng_(seed ^ (0x9e3779b97f4a7c15ull * (index + 1))) {}

  Edit mutate(Packet& pkt, std::size_t index) {
    Edit e;
    e.index = index;
    e.seed = seed_;
    if (pkt.app) {
      e.layer = std::string(to_string(pkt.app->proto));
      std::visit([&](auto& msg) { app(msg, e); }, pkt.app->message);
    } else if (pkt.transport) {
      e.layer = pkt.transport->proto == TransportProto::Tcp ? "tcp" : "udp";
      transport(*pkt.transport, e);
    } else if (pkt.icmp) {
      e.layer = "icmp";
      icmp(*pkt.icmp, pkt.ip->version, e);
    } else if (pkt.ip) {
      e.layer = "ip";
      ip(*pkt.ip, e);
    } else if (pkt.arp) {
      e.layer = "arp";
      arp(*pkt.arp, e);
    } else {
      e.layer = "ethernet";
      ethernet(pkt.eth, e);
    }
    return e;
  }

 private:
  std::size_t below(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_); }

  template <typename T>
  T other_of(const std::vector<T>& choices, const T& old) {
    std::vector<T> pool;
    for (const auto& c : choices) {
      if (c != old) pool.push_back(c);
    }
    return pool[below(pool.size())];
  }

  std::string label(std::size_t len) {
    std::string s;
    for (std::size_t i = 0; i < len; ++i) s += static_cast<char>('a' + below(26));
    return s;
  }

  std::uint16_t port(std::uint16_t old) {
    static constexpr std::uint16_t kClassified[] = {53, 67, 68, 80, 1900, 5353, 5683};
    for (;;) {
      auto p = static_cast<std::uint16_t>(std::uniform_int_distribution<int>(1024, 65535)(rng_));
      if (p != old && std::find(std::begin(kClassified), std::end(kClassified), p) == std::end(kClassified)) return p;
    }
  }

  IpAddr address(const IpAddr& old) {
    for (;;) {
      IpAddr a;
      if (old.is_v4()) {
        a = IpAddr::v4({10, static_cast<std::uint8_t>(below(256)), static_cast<std::uint8_t>(below(256)),
                        static_cast<std::uint8_t>(1 + below(254))});
      } else {
        std::array<std::uint8_t, 16> b{0xfd, 0x00, 0xf0, 0x22};
        for (std::size_t i = 8; i < 16; ++i) b[i] = static_cast<std::uint8_t>(below(256));
        a = IpAddr::v6(b);
      }
      if (a != old) return a;
    }
  }

  MacAddr mac(const MacAddr& old) {
    for (;;) {
      MacAddr m{{0x02, 0xf0}};
      for (std::size_t i = 2; i < 6; ++i) m.octets[i] = static_cast<std::uint8_t>(below(256));
      if (m != old) return m;
    }
  }

  void set(Edit& e, std::string field, std::string old_value, std::string new_value) {
    e.field = std::move(field);
    e.old_value = std::move(old_value);
    e.new_value = std::move(new_value);
  }

  void app(DnsMessage& m, Edit& e) {
    if (m.questions.empty()) {
      std::uint16_t old = m.id;
      m.id = static_cast<std::uint16_t>(old + 1 + below(0xfffe));
      set(e, "id", std::to_string(old), std::to_string(m.id));
      return;
    }
    auto& q = m.questions.front();
    if (below(2) == 0) {
      std::string old = q.name;
      auto dot = old.find('.');
      std::string fresh;
      do {
        fresh = label(8) + (dot == std::string::npos ? "" : old.substr(dot));
      } while (fresh == old);
      q.name = fresh;
      set(e, "qname", old, fresh);
    } else {
      std::uint16_t old = q.qtype;
      q.qtype = other_of<std::uint16_t>({1, 28, 16, 33, 12, 15, 5}, old);
      set(e, "qtype", dns_type_name(old), dns_type_name(q.qtype));
    }
  }

  void app(DhcpMessage& m, Edit& e) {
    std::uint8_t old = m.message_type().value_or(0);
    std::uint8_t fresh = other_of<std::uint8_t>({1, 2, 3, 4, 5, 6, 7, 8}, old);
    m.set_message_type(fresh);
    set(e, "message_type", dhcp_type_name(old), dhcp_type_name(fresh));
  }

  void app(HttpMessage& m, Edit& e) {
    if (m.response) {
      m.response = false;
      m.method = "GET";
      m.uri = "/" + label(6);
      set(e, "response", "true", "false");
    } else if (below(2) == 0) {
      std::string old = m.method;
      m.method = other_of<std::string>({"GET", "POST", "PUT", "DELETE", "HEAD"}, old);
      set(e, "method", old, m.method);
    } else {
      std::string old = m.uri;
      do {
        m.uri = "/" + label(6);
      } while (m.uri == old);
      set(e, "uri", old, m.uri);
    }
  }

  void app(SsdpMessage& m, Edit& e) {
    if (!m.response && below(2) == 0) {
      std::string old = m.method;
      m.method = other_of<std::string>({"M-SEARCH", "NOTIFY"}, old);
      set(e, "method", old, m.method);
      return;
    }
    std::string old = m.search_target().value_or("");
    std::string fresh = "urn:fuzz:" + label(8);
    const std::string wanted = m.header("ST") || !m.header("NT") ? "ST" : "NT";
    bool replaced = false;
    for (auto& [k, v] : m.headers) {
      std::string upper = k;
      std::transform(upper.begin(), upper.end(), upper.begin(), [](unsigned char c) { return std::toupper(c); });
      if (upper == wanted) {
        v = fresh;
        replaced = true;
        break;
      }
    }
    if (!replaced) m.headers.push_back({"ST", fresh});
    set(e, "st", old, fresh);
  }

  void app(CoapMessage& m, Edit& e) {
    std::size_t choice = below(m.is_response() ? 2 : 3);
    if (choice == 0) {
      std::uint8_t old = m.code;
      m.code = m.is_response() ? other_of<std::uint8_t>({0x41, 0x44, 0x45, 0x84, 0xa0}, old)
                               : other_of<std::uint8_t>({1, 2, 3, 4}, old);
      set(e, "code", std::to_string(old), std::to_string(m.code));
    } else if (choice == 1) {
      std::uint8_t old = m.type;
      m.type = other_of<std::uint8_t>({0, 1, 2, 3}, old);
      set(e, "type", std::to_string(old), std::to_string(m.type));
    } else {
      std::string old = m.uri_path();
      std::string fresh;
      do {
        fresh = label(6);
      } while (fresh == old);
      m.set_uri_path(fresh);
      set(e, "uri_path", old, fresh);
    }
  }

  void app(IgmpMessage& m, Edit& e) {
    if (below(2) == 0) {
      std::uint8_t old = m.type;
      m.type = other_of<std::uint8_t>({0x11, 0x12, 0x16, 0x17}, old);
      set(e, "type", igmp_type_name(old), igmp_type_name(m.type));
    } else {
      IpAddr old = m.group;
      do {
        m.group = IpAddr::v4({239, static_cast<std::uint8_t>(below(256)), static_cast<std::uint8_t>(below(256)),
                              static_cast<std::uint8_t>(1 + below(254))});
      } while (m.group == old);
      set(e, "group", old.str(), m.group.str());
    }
  }

  void transport(TransportLayer& t, Edit& e) {
    if (below(2) == 0) {
      std::uint16_t old = t.src_port;
      t.src_port = port(old);
      set(e, "src_port", std::to_string(old), std::to_string(t.src_port));
    } else {
      std::uint16_t old = t.dst_port;
      t.dst_port = port(old);
      set(e, "dst_port", std::to_string(old), std::to_string(t.dst_port));
    }
  }

  void icmp(IcmpLayer& c, int version, Edit& e) {
    std::uint8_t old = c.type;
    c.type = version == 4 ? other_of<std::uint8_t>({0, 3, 8, 11}, old) : other_of<std::uint8_t>({1, 3, 128, 129}, old);
    c.code = 0;
    set(e, "type", std::to_string(old), std::to_string(c.type));
  }

  void ip(IpLayer& l, Edit& e) {
    IpAddr& target = below(2) == 0 ? l.src : l.dst;
    IpAddr old = target;
    target = address(old);
    set(e, &target == &l.src ? "src" : "dst", old.str(), target.str());
  }

  void arp(ArpLayer& a, Edit& e) {
    switch (below(3)) {
      case 0: {
        std::uint16_t old = a.op;
        a.op = old == 1 ? 2 : 1;
        set(e, "op", std::to_string(old), std::to_string(a.op));
        break;
      }
      case 1: {
        IpAddr old = a.sender_ip;
        a.sender_ip = address(old);
        set(e, "sender_ip", old.str(), a.sender_ip.str());
        break;
      }
      default: {
        IpAddr old = a.target_ip;
        a.target_ip = address(old);
        set(e, "target_ip", old.str(), a.target_ip.str());
        break;
      }
    }
  }

  void ethernet(EthernetHeader& h, Edit& e) {
    MacAddr& target = below(2) == 0 ? h.src : h.dst;
    MacAddr old = target;
    target = mac(old);
    set(e, &target == &h.src ? "src" : "dst", old.str(), target.str());
  }

  std::uint64_t seed_;
  std::mt19937_64 rng_;
};

}  // namespace

FuzzResult fuzz_trace(const Trace& trace, std::uint64_t seed, double edit_fraction) {
  if (!(edit_fraction > 0 && edit_fraction <= 1)) throw BadParams("edit fraction must be in (0, 1]");
  FuzzResult out;
  out.trace = trace;
  const std::size_t n = trace.packets.size();
  if (n == 0) return out;
  auto k = static_cast<std::size_t>(std::ceil(edit_fraction * static_cast<double>(n) - 1e-9));
  k = std::clamp<std::size_t>(k, 1, n);

  // Partial Fisher-Yates: the first k slots are a uniform k-subset.
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  for (std::size_t i = 0; i < k; ++i) {
    std::size_t j = std::uniform_int_distribution<std::size_t>(i, n - 1)(rng);
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  std::sort(idx.begin(), idx.end());

  for (std::size_t i : idx) {
    Packet& pkt = out.trace.packets[i];
    Mutator m(seed, i);
    out.edits.push_back(m.mutate(pkt, i));
    pkt = rebuild(pkt);
  }
  return out;
}

}  // namespace profwall
