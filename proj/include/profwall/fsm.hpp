#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "profwall/matcher.hpp"
#include "profwall/packet.hpp"
#include "profwall/profile.hpp"

namespace profwall {

enum class Guard : std::uint8_t {
  Match,            // one-off policy seen (forward)
  SecondDirection,  // reply of a bidirectional one-off policy
  Self,             // periodic/transient policy stays active
  NextMatch,        // next policy seen; leaves a periodic/transient state
  Expiry,           // transient limit reached
};

enum class DirSel : std::uint8_t { Forward, Backward, Both, Any };

struct FsmState {
  std::size_t policy = 0;
  DirSel expects = DirSel::Forward;
  PolicyKind kind = PolicyKind::OneOff;
  bool operator==(const FsmState&) const = default;
};

struct FsmTransition {
  std::size_t from = 0;
  std::size_t policy = 0;
  DirSel dir = DirSel::Forward;
  Guard guard = Guard::Match;
  std::size_t to = 0;
  bool operator==(const FsmTransition&) const = default;
  auto operator<=>(const FsmTransition&) const = default;
};

// Compiled interaction. State 0 is the initial state, the first state of the
// first policy. Immutable once built.
class InteractionFsm {
 public:
  // Throws CompileError when the interaction has no policies.
  static InteractionFsm compile(const Interaction& interaction);

  const std::string& name() const { return name_; }
  const std::vector<Policy>& policies() const { return policies_; }
  const std::vector<FsmState>& states() const { return states_; }
  const std::vector<FsmTransition>& transitions() const { return transitions_; }
  // Indices into transitions(), in evaluation order.
  const std::vector<std::size_t>& outgoing(std::size_t state) const { return outgoing_[state]; }
  // First state of a policy.
  std::size_t entry(std::size_t policy) const { return entry_[policy]; }
  std::size_t next_policy(std::size_t policy) const { return (policy + 1) % policies_.size(); }
  const MatchSpec& spec(std::size_t policy, Direction dir) const {
    return dir == Direction::Forward ? policies_[policy].match : inverted_[policy];
  }

 private:
  std::string name_;
  std::vector<Policy> policies_;
  std::vector<MatchSpec> inverted_;
  std::vector<FsmState> states_;
  std::vector<FsmTransition> transitions_;
  std::vector<std::vector<std::size_t>> outgoing_;
  std::vector<std::size_t> entry_;
};

InteractionFsm compile_interaction(const Interaction& interaction);

enum class Reason : std::uint8_t {
  Matched,
  DefaultAccept,
  NoPolicyMatch,
  RateExceeded,
  WrongState,
  UnresolvedName,
  Error,
};

std::string_view to_string(Reason r);
std::string_view to_string(Guard g);
std::string_view to_string(DirSel d);

struct FsmRuntime {
  const InteractionFsm* fsm = nullptr;
  std::size_t current = 0;
  std::vector<std::optional<RateBucket>> buckets;  // by policy
  std::vector<TransientCounters> counters;         // by state

  explicit FsmRuntime(const InteractionFsm& machine);
  bool operator==(const FsmRuntime& o) const {
    return current == o.current && buckets == o.buckets && counters == o.counters;
  }
};

struct StepResult {
  bool accepted = false;
  Reason reason = Reason::NoPolicyMatch;
  std::optional<std::size_t> policy;  // accepting policy, or the rate-limited one
  std::size_t state_before = 0;
  std::size_t state_after = 0;
};

struct StepOptions {
  bool clamp_clock = false;  // live mode: earlier timestamps do not raise
};

// Runs one packet through the machine. Runtime state changes only on accept.
// Throws ClockRegression from a rate bucket in replay mode.
StepResult step(FsmRuntime& rt, const Packet& pkt, const MatchEnv& env, StepOptions opts = {});

// {"v":1,"interaction":...,"states":[...],"transitions":[...]}
std::string fsm_to_json(const InteractionFsm& fsm);
std::string fsm_to_dot(const InteractionFsm& fsm);

}  // namespace profwall
