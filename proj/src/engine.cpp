#include "profwall/engine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "profwall/errors.hpp"
#include "profwall/yaml.hpp"

namespace profwall {

using nlohmann::json;

std::string_view to_string(Decision d) { return d == Decision::Accept ? "ACCEPT" : "DROP"; }

// ---------------------------------------------------------------------------
// Configuration

namespace {

json yaml_to_json(const yaml::Node& n) {
  switch (n.kind) {
    case yaml::Node::Kind::Null: return nullptr;
    case yaml::Node::Kind::Scalar: return n.scalar;
    case yaml::Node::Kind::Sequence: {
      json a = json::array();
      for (const auto& item : n.items) a.push_back(yaml_to_json(item));
      return a;
    }
    case yaml::Node::Kind::Mapping: {
      json o = json::object();
      for (const auto& e : n.entries) o[e.key] = yaml_to_json(e.value);
      return o;
    }
  }
  return nullptr;
}

std::vector<std::string> string_list(const json& v, const std::string& key) {
  std::vector<std::string> out;
  if (v.is_string()) {
    out.push_back(v.get<std::string>());
  } else if (v.is_array()) {
    for (const auto& item : v) {
      if (!item.is_string()) throw std::invalid_argument(key + ": expected strings");
      out.push_back(item.get<std::string>());
    }
  } else if (!v.is_null()) {
    throw std::invalid_argument(key + ": expected a string or a list");
  }
  return out;
}

std::string upper_string(const json& v, const std::string& key) {
  if (!v.is_string()) throw std::invalid_argument(key + ": expected a string");
  std::string s = v.get<std::string>();
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::toupper(c); });
  return s;
}

double seconds_value(const json& v, const std::string& key) {
  double d = 0;
  if (v.is_number()) {
    d = v.get<double>();
  } else if (v.is_string()) {
    try {
      std::size_t used = 0;
      d = std::stod(v.get<std::string>(), &used);
      if (used != v.get<std::string>().size()) throw std::invalid_argument(key);
    } catch (const std::exception&) {
      throw std::invalid_argument(key + ": expected a number of seconds");
    }
  } else {
    throw std::invalid_argument(key + ": expected a number of seconds");
  }
  if (!(d > 0)) throw std::invalid_argument(key + ": must be positive");
  return d;
}

}  // namespace

EngineConfig parse_engine_config(std::string_view text) {
  json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded()) doc = yaml_to_json(yaml::parse(text, "<config>"));
  if (doc.is_null()) return {};
  if (!doc.is_object()) throw std::invalid_argument("config must be a mapping");
  EngineConfig cfg;
  for (const auto& [key, value] : doc.items()) {
    if (key == "v") {
      continue;
    } else if (key == "lan_prefixes") {
      for (const auto& s : string_list(value, key)) {
        auto p = IpPrefix::parse(s);
        if (!p) throw std::invalid_argument("lan_prefixes: invalid prefix '" + s + "'");
        cfg.lan_prefixes.push_back(*p);
      }
    } else if (key == "gateway_addrs") {
      for (const auto& s : string_list(value, key)) {
        auto a = IpAddr::parse(s);
        if (!a) throw std::invalid_argument("gateway_addrs: invalid address '" + s + "'");
        cfg.gateway_addrs.push_back(*a);
      }
    } else if (key == "default_unprofiled") {
      std::string s = upper_string(value, key);
      if (s == "ACCEPT") cfg.default_unprofiled = Decision::Accept;
      else if (s == "DROP") cfg.default_unprofiled = Decision::Drop;
      else throw std::invalid_argument("default_unprofiled: expected ACCEPT or DROP");
    } else if (key == "clock_mode") {
      std::string s = upper_string(value, key);
      if (s == "REPLAY") cfg.clock_mode = ClockMode::Replay;
      else if (s == "LIVE") cfg.clock_mode = ClockMode::Live;
      else throw std::invalid_argument("clock_mode: expected REPLAY or LIVE");
    } else if (key == "dns_max_age") {
      if (value.is_null()) continue;
      cfg.dns_max_age = std::chrono::duration_cast<Duration>(std::chrono::duration<double>(seconds_value(value, key)));
    } else {
      throw std::invalid_argument("unknown config key '" + key + "'");
    }
  }
  return cfg;
}

EngineConfig load_engine_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_engine_config(ss.str());
}

// ---------------------------------------------------------------------------
// Reporting

EffortCategory categorize(const MatchEffort& e) {
  if (e.app_compare && e.dns_lookup) return EffortCategory::D;
  if (e.dns_lookup) return EffortCategory::C;
  if (e.app_compare) return EffortCategory::B;
  return EffortCategory::A;
}

LatencyStats latency_stats(std::vector<double> samples) {
  LatencyStats s;
  if (samples.empty()) return s;
  std::sort(samples.begin(), samples.end());
  double sum = 0;
  for (double v : samples) sum += v;
  s.mean = sum / static_cast<double>(samples.size());
  auto pct = [&](double p) {
    double pos = p / 100.0 * static_cast<double>(samples.size() - 1);
    auto lo = static_cast<std::size_t>(std::floor(pos));
    std::size_t hi = std::min(lo + 1, samples.size() - 1);
    return samples[lo] + (samples[hi] - samples[lo]) * (pos - static_cast<double>(lo));
  };
  s.p2_5 = pct(2.5);
  s.p97_5 = pct(97.5);
  return s;
}

namespace {

json opt_json(const std::optional<std::string>& v) { return v ? json(*v) : json(nullptr); }
json opt_json(const std::optional<std::size_t>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

std::string verdict_to_json(const Verdict& v, std::size_t idx, Timestamp ts) {
  json o{{"v", 1},
         {"idx", idx},
         {"ts", ts.str()},
         {"decision", to_string(v.decision)},
         {"device", v.device},
         {"interaction", opt_json(v.interaction)},
         {"policy", opt_json(v.policy)},
         {"state_before", opt_json(v.state_before)},
         {"state_after", opt_json(v.state_after)},
         {"reason", to_string(v.reason)}};
  if (!v.error.empty()) o["error"] = v.error;
  return o.dump();
}

std::string verdict_log(const ReplayReport& report, const Trace& trace) {
  std::string out;
  for (std::size_t i = 0; i < report.verdicts.size(); ++i) {
    out += verdict_to_json(report.verdicts[i], i, trace.packets[i].ts);
    out += '\n';
  }
  return out;
}

std::string report_to_json(const ReplayReport& report) {
  json per_reason = json::object();
  for (const auto& [k, n] : report.per_reason) per_reason[k] = n;
  json per_device = json::object();
  for (const auto& [k, c] : report.per_device) per_device[k] = {{"accepted", c.accepted}, {"dropped", c.dropped}};
  std::uint64_t cat[4] = {0, 0, 0, 0};
  for (auto c : report.effort) ++cat[static_cast<int>(c)];
  LatencyStats lat = report.latency();
  json o{{"v", 1},
         {"packets", report.verdicts.size()},
         {"accepted", report.accepted},
         {"dropped", report.dropped},
         {"per_reason", per_reason},
         {"per_device", per_device},
         {"latency_us", {{"mean", lat.mean}, {"p2_5", lat.p2_5}, {"p97_5", lat.p97_5}}},
         {"effort", {{"A", cat[0]}, {"B", cat[1]}, {"C", cat[2]}, {"D", cat[3]}}}};
  return o.dump();
}

// ---------------------------------------------------------------------------
// Engine

Engine::Engine(EngineConfig config) : config_(std::move(config)) {
  net_.lan_prefixes = config_.lan_prefixes;
  net_.gateway_addrs.insert(config_.gateway_addrs.begin(), config_.gateway_addrs.end());
}

void Engine::register_profile(const Profile& profile) {
  auto diags = validate_profile(profile);
  if (!diags.empty()) throw ValidationError(std::move(diags));
  const DeviceInfo& info = profile.device_info;
  if (by_mac_.count(info.mac)) throw DuplicateDevice("device with MAC " + info.mac.str() + " already registered");
  for (const auto& ip : {info.ipv4, info.ipv6}) {
    if (ip && by_ip_.count(*ip)) throw DuplicateDevice("device with address " + ip->str() + " already registered");
  }
  auto dev = std::make_unique<Device>();
  dev->profile = profile;
  for (const auto& interaction : profile.interactions) {
    dev->fsms.push_back(std::make_unique<InteractionFsm>(InteractionFsm::compile(interaction)));
  }
  for (const auto& fsm : dev->fsms) dev->runtimes.emplace_back(*fsm);
  std::size_t idx = devices_.size();
  by_mac_[info.mac] = idx;
  for (const auto& ip : {info.ipv4, info.ipv6}) {
    if (!ip) continue;
    by_ip_[*ip] = idx;
    net_.profiled_addrs.insert(*ip);
  }
  devices_.push_back(std::move(dev));
}

std::size_t Engine::runtime_count() const {
  std::size_t n = 0;
  for (const auto& d : devices_) n += d->runtimes.size();
  return n;
}

std::vector<std::size_t> Engine::involved(const Packet& pkt) const {
  std::vector<std::size_t> out;
  auto by_mac = [&](const MacAddr& m) {
    if (auto it = by_mac_.find(m); it != by_mac_.end()) out.push_back(it->second);
  };
  auto by_ip = [&](const IpAddr& a) {
    if (auto it = by_ip_.find(a); it != by_ip_.end()) out.push_back(it->second);
  };
  by_mac(pkt.eth.src);
  by_mac(pkt.eth.dst);
  if (pkt.ip) {
    by_ip(pkt.ip->src);
    by_ip(pkt.ip->dst);
  }
  if (pkt.arp) {
    by_mac(pkt.arp->sender_hw);
    by_mac(pkt.arp->target_hw);
    by_ip(pkt.arp->sender_ip);
    by_ip(pkt.arp->target_ip);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

namespace {

int drop_priority(Reason r) {
  switch (r) {
    case Reason::RateExceeded: return 3;
    case Reason::WrongState: return 2;
    case Reason::UnresolvedName: return 1;
    default: return 0;
  }
}

}  // namespace

Verdict Engine::process_packet(const Packet& pkt) {
  effort_ = {};
  const bool live = config_.clock_mode == ClockMode::Live;
  if (last_ts_ && pkt.ts < *last_ts_) {
    if (!live) throw ClockRegression("packet at " + pkt.ts.str() + " precedes " + last_ts_->str());
  } else {
    last_ts_ = pkt.ts;
  }
  if (live && config_.dns_max_age) dns_.expire_before(*last_ts_ + (-*config_.dns_max_age));

  Verdict verdict;
  std::vector<std::size_t> devs = involved(pkt);
  if (devs.empty()) {
    verdict.decision = config_.default_unprofiled;
    verdict.reason = verdict.decision == Decision::Accept ? Reason::DefaultAccept : Reason::NoPolicyMatch;
    return verdict;
  }

  StepOptions opts{live};
  std::vector<std::vector<FsmRuntime>> saved;
  saved.reserve(devs.size());
  std::optional<Verdict> first_accept;
  std::optional<Verdict> first_drop;

  for (std::size_t d : devs) {
    Device& dev = *devices_[d];
    saved.push_back(dev.runtimes);
    MatchEnv env{&dev.profile.device_info, &net_, &dns_, pkt.ts, &effort_};
    std::optional<Verdict> accept;
    Verdict drop;
    drop.decision = Decision::Drop;
    drop.device = dev.profile.device_info.name;
    bool have_drop_detail = false;
    for (std::size_t r = 0; r < dev.runtimes.size(); ++r) {
      StepResult res = step(dev.runtimes[r], pkt, env, opts);
      const InteractionFsm& fsm = *dev.fsms[r];
      Verdict v;
      v.device = dev.profile.device_info.name;
      v.interaction = fsm.name();
      if (res.policy) v.policy = fsm.policies()[*res.policy].name;
      v.state_before = res.state_before;
      v.state_after = res.state_after;
      v.reason = res.reason;
      if (res.accepted) {
        v.decision = Decision::Accept;
        if (!accept) accept = v;
      } else if (!have_drop_detail || drop_priority(res.reason) > drop_priority(drop.reason)) {
        v.decision = Decision::Drop;
        drop = v;
        have_drop_detail = true;
      }
    }
    if (accept) {
      if (!first_accept) first_accept = accept;
    } else if (!first_drop) {
      first_drop = drop;
    }
  }

  if (first_drop) {
    for (std::size_t i = 0; i < devs.size(); ++i) devices_[devs[i]]->runtimes = std::move(saved[i]);
    return *first_drop;
  }
  if (const DnsMessage* m = dns_message(pkt); m && m->is_response()) dns_observe(pkt);
  return *first_accept;
}

void Engine::dns_observe(const Packet& pkt) {
  const DnsMessage* m = dns_message(pkt);
  if (!m || !m->is_response()) return;
  std::map<std::string, std::vector<IpAddr>> addrs;
  std::map<std::string, std::string> cname;
  for (const auto& rr : m->answers) {
    std::string name = normalize_domain(rr.name);
    if (name.empty()) continue;
    if ((rr.type == 1 || rr.type == 28) && rr.address) {
      addrs[name].push_back(*rr.address);
    } else if (rr.type == 5 && rr.target) {
      cname[name] = normalize_domain(*rr.target);
    }
  }
  for (const auto& [name, list] : addrs) {
    for (const auto& a : list) dns_.insert(name, a, pkt.ts);
  }
  for (const auto& [alias, first] : cname) {
    std::string cur = first;
    for (std::size_t hops = 0; hops <= cname.size(); ++hops) {
      if (auto it = addrs.find(cur); it != addrs.end()) {
        for (const auto& a : it->second) dns_.insert(alias, a, pkt.ts);
      }
      auto next = cname.find(cur);
      if (next == cname.end()) break;
      cur = next->second;
    }
  }
}

ReplayReport Engine::run_replay(const Trace& trace) {
  ReplayReport report;
  report.verdicts.reserve(trace.packets.size());
  report.latency_us.reserve(trace.packets.size());
  report.effort.reserve(trace.packets.size());
  for (const auto& pkt : trace.packets) {
    auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = process_packet(pkt);
    } catch (const std::exception& e) {
      v = Verdict{};
      v.reason = Reason::Error;
      v.error = e.what();
    }
    auto stop = std::chrono::steady_clock::now();
    report.latency_us.push_back(std::chrono::duration<double, std::micro>(stop - start).count());
    report.effort.push_back(categorize(effort_));
    if (v.decision == Decision::Accept) ++report.accepted;
    else ++report.dropped;
    ++report.per_reason[std::string(to_string(v.reason))];
    auto& dc = report.per_device[v.device];
    if (v.decision == Decision::Accept) ++dc.accepted;
    else ++dc.dropped;
    report.verdicts.push_back(std::move(v));
  }
  return report;
}

Engine::Snapshot Engine::snapshot() const {
  Snapshot s;
  for (const auto& d : devices_) s.runtimes.push_back(d->runtimes);
  s.dns = dns_;
  return s;
}

}  // namespace profwall
