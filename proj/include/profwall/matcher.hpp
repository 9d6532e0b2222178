#pragma once

#include <cstdint>
#include <optional>
#include <unordered_set>
#include <vector>

#include "profwall/dns_table.hpp"
#include "profwall/packet.hpp"
#include "profwall/profile.hpp"

namespace profwall {

enum class Direction : std::uint8_t { Forward, Backward };

enum class MatchResult : std::uint8_t {
  NoMatch,
  Match,
  Unresolved,  // a domain endpoint has no DNS-table entry yet
};

// Resolution data for the symbolic referents local/gateway/phone.
struct Network {
  std::vector<IpPrefix> lan_prefixes;
  std::unordered_set<IpAddr> gateway_addrs;
  std::unordered_set<IpAddr> profiled_addrs;

  bool is_local(const IpAddr& a) const;
  bool is_gateway(const IpAddr& a) const { return gateway_addrs.count(a) != 0; }
  bool is_phone(const IpAddr& a) const {
    return is_local(a) && !gateway_addrs.count(a) && !profiled_addrs.count(a);
  }
};

// Which kinds of comparison a decision needed.
struct MatchEffort {
  bool app_compare = false;
  bool dns_lookup = false;
};

struct MatchEnv {
  const DeviceInfo* device = nullptr;
  const Network* net = nullptr;
  const DnsTable* dns = nullptr;
  Timestamp now;
  MatchEffort* effort = nullptr;
};

// Every present block of `spec` must match the packet; absent blocks are wildcards.
MatchResult match_spec(const MatchSpec& spec, const Packet& pkt, const MatchEnv& env);

// Matches `policy` in `dir`; Backward uses the inverted specification.
MatchResult match_policy(const Policy& policy, const Packet& pkt, Direction dir, const MatchEnv& env);

// The specification of the reply direction: endpoints swapped, request/response
// kinds exchanged. Involutive.
MatchSpec invert_direction(const MatchSpec& spec);

// Token bucket in exact integer arithmetic. One packet is `period_ns` units and
// the bucket gains `numerator` units per nanosecond, so fractional rates refill
// without rounding. Starts full at its first use.
class RateBucket {
 public:
  enum class Outcome : std::uint8_t { Admit, Exceed };

  explicit RateBucket(const RateSpec& spec);

  // Throws ClockRegression when `ts` precedes the last refill, unless `clamp`
  // is set, in which case the earlier time is treated as the last refill time.
  Outcome admit(Timestamp ts, bool clamp = false);

  std::uint64_t capacity() const { return capacity_; }
  // Whole and fractional tokens available at `ts` (>= last refill).
  double tokens_at(Timestamp ts) const;
  // Exact token units at `ts`, for state comparison.
  unsigned __int128 units_at(Timestamp ts) const;
  std::optional<Timestamp> last_refill() const { return last_; }

  bool operator==(const RateBucket&) const = default;

 private:
  unsigned __int128 refilled(Timestamp ts) const;

  std::uint64_t capacity_;
  std::uint64_t numerator_;
  unsigned __int128 period_ns_;
  unsigned __int128 units_ = 0;
  std::optional<Timestamp> last_;
};

struct TransientCounters {
  std::uint64_t packets = 0;
  std::optional<Timestamp> started_at;
  bool operator==(const TransientCounters&) const = default;
};

enum class Within : std::uint8_t { Within, Expired };

// Expired when either configured limit is reached: packets >= packet-count, or
// more than `duration` elapsed since the state was entered.
Within transient_within(const Policy& policy, const TransientCounters& c, Timestamp ts);

}  // namespace profwall
