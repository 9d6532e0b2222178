#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "profwall/dns_table.hpp"
#include "profwall/fsm.hpp"
#include "profwall/matcher.hpp"
#include "profwall/packet.hpp"
#include "profwall/profile.hpp"
#include "profwall/trace.hpp"

namespace profwall {

enum class Decision : std::uint8_t { Accept, Drop };
enum class ClockMode : std::uint8_t { Replay, Live };

std::string_view to_string(Decision d);

struct EngineConfig {
  std::vector<IpPrefix> lan_prefixes;
  std::vector<IpAddr> gateway_addrs;
  Decision default_unprofiled = Decision::Accept;
  ClockMode clock_mode = ClockMode::Replay;
  // LIVE mode only: DNS entries not refreshed within this age are dropped.
  std::optional<Duration> dns_max_age;
};

// JSON or YAML text with keys lan_prefixes, gateway_addrs, default_unprofiled
// (ACCEPT|DROP), clock_mode (REPLAY|LIVE) and dns_max_age (seconds).
// Throws std::invalid_argument on unknown keys or bad values.
EngineConfig parse_engine_config(std::string_view text);
EngineConfig load_engine_config(const std::filesystem::path& path);

struct Verdict {
  Decision decision = Decision::Drop;
  std::string device = "unprofiled";
  std::optional<std::string> interaction;
  std::optional<std::string> policy;
  std::optional<std::size_t> state_before;
  std::optional<std::size_t> state_after;
  Reason reason = Reason::NoPolicyMatch;
  std::string error;  // set with Reason::Error

  bool operator==(const Verdict&) const = default;
};

// Which comparisons the decision needed: A none beyond link/ip/transport,
// B application strings, C DNS table, D both.
enum class EffortCategory : std::uint8_t { A, B, C, D };
EffortCategory categorize(const MatchEffort& e);

struct LatencyStats {
  double mean = 0;
  double p2_5 = 0;
  double p97_5 = 0;
};

// Mean and linearly interpolated percentiles; zeros for an empty sample.
LatencyStats latency_stats(std::vector<double> samples);

struct DeviceCounters {
  std::uint64_t accepted = 0;
  std::uint64_t dropped = 0;
};

struct ReplayReport {
  std::vector<Verdict> verdicts;
  std::vector<double> latency_us;  // per packet
  std::vector<EffortCategory> effort;
  std::uint64_t accepted = 0;
  std::uint64_t dropped = 0;
  std::map<std::string, std::uint64_t> per_reason;
  std::map<std::string, DeviceCounters> per_device;

  LatencyStats latency() const { return latency_stats(latency_us); }
};

// {"v":1,"idx":...,"ts":"sec.nsec","decision":...,...}
std::string verdict_to_json(const Verdict& v, std::size_t idx, Timestamp ts);
std::string verdict_log(const ReplayReport& report, const Trace& trace);
std::string report_to_json(const ReplayReport& report);

class Engine {
 public:
  explicit Engine(EngineConfig config = {});
  Engine(const Engine&) = delete;
  Engine& operator=(const Engine&) = delete;

  // Throws DuplicateDevice when the device's MAC or IP is already registered,
  // ValidationError when the profile is invalid.
  void register_profile(const Profile& profile);

  // Throws ClockRegression in REPLAY mode when `pkt` is older than the last packet.
  Verdict process_packet(const Packet& pkt);

  // Learns A/AAAA answers of a DNS/mDNS response, following CNAME chains.
  void dns_observe(const Packet& pkt);

  // Per-packet errors become DROP verdicts with Reason::Error.
  ReplayReport run_replay(const Trace& trace);

  const DnsTable& dns() const { return dns_; }
  const EngineConfig& config() const { return config_; }
  const Network& network() const { return net_; }
  // Effort of the most recent process_packet call.
  const MatchEffort& last_effort() const { return effort_; }

  // Comparable copy of all mutable state.
  struct Snapshot {
    std::vector<std::vector<FsmRuntime>> runtimes;
    DnsTable dns;
    bool operator==(const Snapshot&) const = default;
  };
  Snapshot snapshot() const;

  std::size_t device_count() const { return devices_.size(); }
  std::size_t runtime_count() const;

 private:
  struct Device {
    Profile profile;
    std::vector<std::unique_ptr<InteractionFsm>> fsms;
    std::vector<FsmRuntime> runtimes;
  };

  std::vector<std::size_t> involved(const Packet& pkt) const;

  EngineConfig config_;
  Network net_;
  DnsTable dns_;
  std::vector<std::unique_ptr<Device>> devices_;
  std::unordered_map<MacAddr, std::size_t> by_mac_;
  std::unordered_map<IpAddr, std::size_t> by_ip_;
  std::optional<Timestamp> last_ts_;
  MatchEffort effort_;
};

}  // namespace profwall
