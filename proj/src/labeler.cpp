// Reference interpreter for expected verdicts. It walks Interaction
// definitions directly and keeps its own position, name table and rate state;
// it shares only the profile model and the stateless matcher predicates with
// the engine.

#include <map>
#include <set>
#include <unordered_map>

#include "profwall/harness.hpp"

namespace profwall {

namespace {

enum class Slot : std::uint8_t { IpSrc, IpDst, ArpSender, ArpTarget };

struct NameRequirement {
  Slot slot;
  std::string pattern;
};

// A policy specification with domain endpoints taken out; those are checked
// against the interpreter's own table.
struct Signature {
  MatchSpec rest;
  std::vector<NameRequirement> names;
};

Signature split(const MatchSpec& spec) {
  Signature s;
  s.rest = spec;
  auto take = [&](std::optional<EndpointExpr>& e, Slot slot) {
    if (e && e->kind == EndpointExpr::Kind::Domain) {
      s.names.push_back({slot, e->domain});
      e.reset();
    }
  };
  if (s.rest.ip) {
    take(s.rest.ip->src, Slot::IpSrc);
    take(s.rest.ip->dst, Slot::IpDst);
  }
  if (s.rest.arp) {
    take(s.rest.arp->sender_ip, Slot::ArpSender);
    take(s.rest.arp->target_ip, Slot::ArpTarget);
  }
  return s;
}

class Names {
 public:
  void learn(const std::string& name, const IpAddr& a) { table_[normalize_domain(name)].insert(a); }

  bool resolves(const std::string& pattern, const IpAddr& a) const {
    if (pattern.rfind("*.", 0) == 0) {
      std::string suffix = "." + pattern.substr(2);
      for (const auto& [name, addrs] : table_) {
        if (name.size() > suffix.size() && name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0 &&
            addrs.count(a)) {
          return true;
        }
      }
      return false;
    }
    auto it = table_.find(pattern);
    return it != table_.end() && it->second.count(a);
  }

  void observe(const DnsMessage& m) {
    std::map<std::string, std::vector<IpAddr>> direct;
    std::map<std::string, std::string> alias;
    for (const auto& rr : m.answers) {
      std::string n = normalize_domain(rr.name);
      if (n.empty()) continue;
      if ((rr.type == 1 || rr.type == 28) && rr.address) direct[n].push_back(*rr.address);
      if (rr.type == 5 && rr.target) alias[n] = normalize_domain(*rr.target);
    }
    for (const auto& [n, list] : direct) {
      for (const auto& a : list) learn(n, a);
    }
    for (const auto& [from, to] : alias) {
      std::set<std::string> seen{from};
      std::string cur = to;
      while (seen.insert(cur).second) {
        if (auto it = direct.find(cur); it != direct.end()) {
          for (const auto& a : it->second) learn(from, a);
        }
        auto next = alias.find(cur);
        if (next == alias.end()) break;
        cur = next->second;
      }
    }
  }

 private:
  std::map<std::string, std::set<IpAddr>> table_;
};

struct PolicyRef {
  const Policy* def;
  Signature forward;
  Signature backward;
};

enum class Phase : std::uint8_t { AwaitForward, AwaitBackward, Active };

struct Position {
  std::size_t policy = 0;
  Phase phase = Phase::AwaitForward;
  std::uint64_t seen = 0;  // transient packets
  std::optional<Timestamp> since;
  std::vector<std::optional<Gcra>> limits;
};

struct DeviceRef {
  DeviceInfo info;
  std::vector<std::vector<PolicyRef>> interactions;
  std::vector<Position> positions;
};

class Interpreter {
 public:
  Interpreter(const std::vector<Profile>& profiles, const EngineConfig& cfg) : cfg_(cfg) {
    net_.lan_prefixes = cfg.lan_prefixes;
    net_.gateway_addrs.insert(cfg.gateway_addrs.begin(), cfg.gateway_addrs.end());
    for (const auto& p : profiles) {
      DeviceRef d;
      d.info = p.device_info;
      for (const auto& ia : p.interactions) {
        std::vector<PolicyRef> refs;
        Position pos;
        for (const auto& pol : ia.policies) {
          refs.push_back({&pol, split(pol.match), split(invert_direction(pol.match))});
          pos.limits.push_back(pol.rate() ? std::optional<Gcra>(Gcra(*pol.rate())) : std::nullopt);
        }
        if (!refs.empty() && refs.front().def->kind != PolicyKind::OneOff) pos.phase = Phase::Active;
        d.interactions.push_back(std::move(refs));
        d.positions.push_back(std::move(pos));
      }
      for (const auto& a : {p.device_info.ipv4, p.device_info.ipv6}) {
        if (a) net_.profiled_addrs.insert(*a);
      }
      devices_.push_back(std::move(d));
    }
  }

  Decision judge(const Packet& pkt) {
    if (last_ && pkt.ts < *last_) return Decision::Drop;
    last_ = pkt.ts;
    std::vector<std::size_t> involved;
    for (std::size_t i = 0; i < devices_.size(); ++i) {
      if (touches(devices_[i].info, pkt)) involved.push_back(i);
    }
    if (involved.empty()) return cfg_.default_unprofiled;

    std::vector<std::vector<Position>> next;
    for (std::size_t i : involved) {
      DeviceRef& d = devices_[i];
      std::vector<Position> moved = d.positions;
      bool any = false;
      for (std::size_t k = 0; k < d.interactions.size(); ++k) {
        if (advance(d, d.interactions[k], moved[k], pkt)) any = true;
      }
      if (!any) return Decision::Drop;
      next.push_back(std::move(moved));
    }
    for (std::size_t j = 0; j < involved.size(); ++j) devices_[involved[j]].positions = std::move(next[j]);
    if (pkt.app && (pkt.app->proto == AppProto::Dns || pkt.app->proto == AppProto::Mdns)) {
      if (const auto* m = std::get_if<DnsMessage>(&pkt.app->message); m && (m->flags & 0x8000)) names_.observe(*m);
    }
    return Decision::Accept;
  }

 private:
  static bool touches(const DeviceInfo& d, const Packet& pkt) {
    auto ip = [&](const IpAddr& a) { return d.ipv4 == a || d.ipv6 == a; };
    if (pkt.eth.src == d.mac || pkt.eth.dst == d.mac) return true;
    if (pkt.ip && (ip(pkt.ip->src) || ip(pkt.ip->dst))) return true;
    if (pkt.arp) {
      const auto& a = *pkt.arp;
      if (a.sender_hw == d.mac || a.target_hw == d.mac || ip(a.sender_ip) || ip(a.target_ip)) return true;
    }
    return false;
  }

  bool fits(const DeviceRef& d, const Signature& sig, const Packet& pkt) const {
    MatchEnv env{&d.info, &net_, nullptr, pkt.ts, nullptr};
    if (match_spec(sig.rest, pkt, env) != MatchResult::Match) return false;
    for (const auto& req : sig.names) {
      const IpAddr* a = nullptr;
      switch (req.slot) {
        case Slot::IpSrc: a = pkt.ip ? &pkt.ip->src : nullptr; break;
        case Slot::IpDst: a = pkt.ip ? &pkt.ip->dst : nullptr; break;
        case Slot::ArpSender: a = pkt.arp ? &pkt.arp->sender_ip : nullptr; break;
        case Slot::ArpTarget: a = pkt.arp ? &pkt.arp->target_ip : nullptr; break;
      }
      if (!a || !names_.resolves(req.pattern, *a)) return false;
    }
    return true;
  }

  // Moves `pos` for one packet. Returns false, leaving `pos` untouched, when
  // the interaction does not take the packet.
  bool advance(const DeviceRef& d, const std::vector<PolicyRef>& pols, Position& pos, const Packet& pkt) const {
    if (pols.empty()) return false;
    const std::size_t n = pols.size();
    auto nxt = [&](std::size_t j) { return (j + 1) % n; };
    auto kind = [&](std::size_t j) { return pols[j].def->kind; };
    auto fwd = [&](std::size_t j) { return fits(d, pols[j].forward, pkt); };
    auto bwd = [&](std::size_t j) { return fits(d, pols[j].backward, pkt); };
    auto either = [&](std::size_t j) { return fwd(j) || (pols[j].def->bidirectional && bwd(j)); };

    Position p = pos;
    auto rate_ok = [&](std::size_t j) { return !p.limits[j] || p.limits[j]->conforms(pkt.ts); };
    auto wait_for = [&](std::size_t j) {
      p.policy = j;
      p.phase = kind(j) == PolicyKind::OneOff ? Phase::AwaitForward : Phase::Active;
      p.seen = 0;
      p.since = pkt.ts;
    };
    // Policy j has just seen its forward packet.
    auto took = [&](std::size_t j) {
      if (kind(j) == PolicyKind::OneOff) {
        if (pols[j].def->bidirectional) {
          p.policy = j;
          p.phase = Phase::AwaitBackward;
          p.seen = 0;
          p.since = pkt.ts;
        } else {
          wait_for(nxt(j));
        }
        return;
      }
      p.policy = j;
      p.phase = Phase::Active;
      p.seen = kind(j) == PolicyKind::Transient ? 1 : 0;
      p.since = pkt.ts;
    };
    auto commit = [&]() {
      pos = std::move(p);
      return true;
    };

    const std::size_t i = p.policy;
    if (p.phase == Phase::AwaitForward) {
      if (!fwd(i) || !rate_ok(i)) return false;
      took(i);
      return commit();
    }
    if (p.phase == Phase::AwaitBackward) {
      if (!bwd(i) || !rate_ok(i)) return false;
      wait_for(nxt(i));
      return commit();
    }

    if (nxt(i) != i && fwd(nxt(i))) {
      if (!rate_ok(nxt(i))) return false;
      took(nxt(i));
      return commit();
    }
    const Stats* st = pols[i].def->stats ? &*pols[i].def->stats : nullptr;
    bool over = kind(i) == PolicyKind::Transient && st &&
                ((st->max_packets && p.seen >= *st->max_packets) ||
                 (st->max_duration && p.since && pkt.ts - *p.since > *st->max_duration));
    if (over) {
      // The transient has run out: judge the packet from where its successor starts.
      std::size_t j = nxt(i);
      if (kind(j) == PolicyKind::OneOff) {
        if (!fwd(j) || !rate_ok(j)) return false;
        took(j);
        return commit();
      }
      if (nxt(j) != j && fwd(nxt(j))) {
        if (!rate_ok(nxt(j))) return false;
        took(nxt(j));
        return commit();
      }
      if (!either(j) || !rate_ok(j)) return false;
      p.policy = j;
      p.phase = Phase::Active;
      p.seen = kind(j) == PolicyKind::Transient ? 1 : 0;
      p.since = pkt.ts;
      return commit();
    }
    if (!either(i) || !rate_ok(i)) return false;
    if (kind(i) == PolicyKind::Transient) {
      ++p.seen;
      if (!p.since) p.since = pkt.ts;
    }
    return commit();
  }

  EngineConfig cfg_;
  Network net_;
  Names names_;
  std::vector<DeviceRef> devices_;
  std::optional<Timestamp> last_;
};

}  // namespace

LabeledTrace label_trace(const Trace& trace, const std::vector<Profile>& profiles, const EngineConfig& config,
                         EditLog edits) {
  LabeledTrace out;
  out.trace = trace;
  out.edits = std::move(edits);
  Interpreter interp(profiles, config);
  out.expected.reserve(trace.packets.size());
  for (const auto& pkt : trace.packets) out.expected.push_back(interp.judge(pkt));
  return out;
}

}  // namespace profwall
