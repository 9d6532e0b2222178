#include <algorithm>
#include <map>

#include "profwall/harness.hpp"

namespace profwall {

void auto_resolve(const Profile& profile, SynthHosts& hosts) {
  auto assign = [&](const std::string& name, int version) {
    if (hosts.resolved.count(name)) return;
    auto k = static_cast<std::uint8_t>(10 + hosts.resolved.size() % 240);
    hosts.resolved[name] = version == 4 ? IpAddr::v4({203, 0, 113, k})
                                        : IpAddr::v6({0x20, 0x01, 0x0d, 0xb8, 0, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, k});
  };
  auto endpoint = [&](const std::optional<EndpointExpr>& e, int version) {
    if (e && e->kind == EndpointExpr::Kind::Domain) assign(e->domain, version);
  };
  for (const auto& ia : profile.interactions) {
    for (const auto& p : ia.policies) {
      const MatchSpec& m = p.match;
      if (m.ip) {
        endpoint(m.ip->src, m.ip->version);
        endpoint(m.ip->dst, m.ip->version);
      }
      if (m.arp) {
        endpoint(m.arp->sender_ip, 4);
        endpoint(m.arp->target_ip, 4);
      }
      if (m.app) {
        if (const auto* d = std::get_if<DnsMatch>(&m.app->spec); d && d->domain_name) {
          assign(*d->domain_name, d->qtype == 28 ? 6 : 4);
        }
      }
    }
  }
}

Trace happy_trace(const Profile& profile, const SynthHosts& hosts, const HappyOptions& opts) {
  Trace out;
  Timestamp t = opts.start;
  bool first = true;
  std::map<std::tuple<std::size_t, std::size_t, bool>, Packet> cache;
  std::map<std::pair<std::size_t, std::size_t>, Timestamp> last_of;

  for (std::size_t cycle = 0; cycle < opts.cycles; ++cycle) {
    for (std::size_t a = 0; a < profile.interactions.size(); ++a) {
      const auto& pols = profile.interactions[a].policies;
      for (std::size_t i = 0; i < pols.size(); ++i) {
        const Policy& pol = pols[i];
        auto emit = [&](bool backward, Duration gap) {
          if (!first) t = t + gap;
          first = false;
          if (const RateSpec* r = pol.rate()) {
            auto period = static_cast<std::int64_t>(r->rate.unit_duration().count()) *
                          static_cast<std::int64_t>(r->rate.denominator);
            auto num = static_cast<std::int64_t>(r->rate.numerator);
            Duration interval((period + num - 1) / num);
            auto it = last_of.find({a, i});
            if (it != last_of.end() && t < it->second + interval) t = it->second + interval;
          }
          last_of[{a, i}] = t;
          auto key = std::make_tuple(a, i, backward);
          auto it = cache.find(key);
          if (it == cache.end()) {
            const MatchSpec spec = backward ? invert_direction(pol.match) : pol.match;
            it = cache.emplace(key, synthesize(spec, hosts, t)).first;
          }
          Packet p = it->second;
          p.ts = t;
          out.packets.push_back(std::move(p));
        };

        switch (pol.kind) {
          case PolicyKind::OneOff:
            emit(false, opts.gap);
            if (pol.bidirectional) emit(true, opts.gap);
            break;
          case PolicyKind::Periodic:
            for (std::size_t j = 0; j < opts.periodic_packets; ++j) emit(pol.bidirectional && j % 2 == 1, opts.gap);
            break;
          case PolicyKind::Transient: {
            std::size_t k = opts.transient_packets;
            Duration gap = opts.gap;
            if (pol.stats) {
              if (pol.stats->max_packets) k = std::min<std::size_t>(k, *pol.stats->max_packets);
              if (pol.stats->max_duration) {
                gap = std::min(gap, *pol.stats->max_duration / static_cast<std::int64_t>(k + 1));
              }
            }
            for (std::size_t j = 0; j < k; ++j) emit(pol.bidirectional && j % 2 == 1, gap);
            break;
          }
        }
      }
    }
  }
  return out;
}

Trace merge_traces(const std::vector<Trace>& traces) {
  std::vector<std::pair<std::size_t, std::size_t>> order;
  for (std::size_t t = 0; t < traces.size(); ++t) {
    for (std::size_t i = 0; i < traces[t].packets.size(); ++i) order.emplace_back(t, i);
  }
  std::stable_sort(order.begin(), order.end(), [&](const auto& x, const auto& y) {
    return traces[x.first].packets[x.second].ts < traces[y.first].packets[y.second].ts;
  });
  Trace out;
  out.packets.reserve(order.size());
  for (const auto& [t, i] : order) out.packets.push_back(traces[t].packets[i]);
  return out;
}

}  // namespace profwall
