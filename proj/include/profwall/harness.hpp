#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "profwall/craft.hpp"
#include "profwall/engine.hpp"
#include "profwall/profile.hpp"
#include "profwall/trace.hpp"

namespace profwall {

struct Edit {
  std::size_t index = 0;
  std::string layer;  // ethernet, arp, ip, icmp, tcp, udp, dns, mdns, dhcp, http, ssdp, coap, igmp
  std::string field;
  std::string old_value;
  std::string new_value;
  std::uint64_t seed = 0;
  bool operator==(const Edit&) const = default;
};

using EditLog = std::vector<Edit>;

struct FuzzResult {
  Trace trace;
  EditLog edits;
};

// Edits ceil(fraction * N) distinct packets chosen with a seeded mt19937_64.
// Each edit changes one field of the packet's highest parsed layer to a
// different valid value and re-serializes the packet. Throws BadParams
// unless 0 < fraction <= 1.
FuzzResult fuzz_trace(const Trace& trace, std::uint64_t seed, double edit_fraction);

struct LabeledTrace {
  Trace trace;
  std::vector<Decision> expected;
  EditLog edits;
};

// Expected verdicts from a reference interpreter that walks the interaction
// definitions directly, with its own DNS table and rate limiter. Edited
// packets are judged like any other packet, so an edit that breaks a policy
// match yields DROP and strands later packets of that interaction.
LabeledTrace label_trace(const Trace& trace, const std::vector<Profile>& profiles, const EngineConfig& config,
                         EditLog edits = {});

// Conformance of one rate-limited stream under the generic cell rate
// algorithm; equivalent to a token bucket that starts full.
class Gcra {
 public:
  explicit Gcra(const RateSpec& spec);
  // Records the arrival when conforming.
  bool conforms(Timestamp ts);

 private:
  // Times are in ns * numerator, so one packet takes `increment_`.
  std::int64_t numerator_;
  __int128 increment_;
  __int128 tolerance_;
  std::optional<__int128> tat_;
};

enum class Scenario : std::uint8_t { A1, A2, A3, A4 };
std::optional<Scenario> parse_scenario(std::string_view text);
std::string_view to_string(Scenario s);

struct AttackParams {
  Host attacker;  // phone on the LAN
  Host target;    // profiled device
  Host cloud;     // A4 source
  Host dns_server;
  std::string domain = "devs.tplinkcloud.com";  // A4 DNS prelude
  std::uint16_t port = 0;                       // 0: scenario default (443 or 9999)
  double pps = 1000;
  double duration = 1;     // seconds; A1/A2
  std::size_t count = 5;   // A3/A4
  RateSpec limit;          // A1/A2 expected-verdict oracle
  bool prelude = false;    // A2/A3: ARP pair, A4: DNS exchange
  Timestamp start{1700000000, 0};
};

// Defaults: the hue bridge (A1) or the plug (others) on 192.168.1.0/24.
AttackParams default_attack_params(Scenario s);

struct AttackTrace {
  Trace trace;
  std::vector<Decision> expected;
  std::vector<Reason> expected_reason;
};

// A1: HTTPS flood phone -> target at `pps` for `duration`, N = pps * duration
// packets evenly spaced over [start, start + duration]. A2: the same on
// TCP 9999. A3: `count` TCP 9999 packets. A4: `count` HTTPS packets from the
// cloud host to the target. Throws BadParams on inconsistent parameters.
AttackTrace gen_attack(Scenario s, const AttackParams& params);

// {"v":1,"expected":["ACCEPT",...],"edits":[...]}
std::string sidecar_to_json(const std::vector<Decision>& expected, const EditLog& edits);
struct Sidecar {
  std::vector<Decision> expected;
  EditLog edits;
};
// Throws FormatError.
Sidecar parse_sidecar(std::string_view text);

// Assigns a documentation-range address to every domain the profile names
// that `hosts` does not resolve yet.
void auto_resolve(const Profile& profile, SynthHosts& hosts);

struct HappyOptions {
  std::size_t cycles = 1;
  Timestamp start{1700000000, 0};
  Duration gap = std::chrono::milliseconds(50);
  std::size_t periodic_packets = 3;   // per visit of a periodic policy
  std::size_t transient_packets = 3;  // capped below packet-count
};

// Walks every interaction through its policies `cycles` times, one interaction
// at a time, with packets synthesized from the policies. Spacing respects the
// rate limits and transient durations.
Trace happy_trace(const Profile& profile, const SynthHosts& hosts, const HappyOptions& opts = {});

// Merges traces by timestamp; ties keep the input order.
Trace merge_traces(const std::vector<Trace>& traces);

}  // namespace profwall
