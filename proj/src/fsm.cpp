#include "profwall/fsm.hpp"

#include <algorithm>

#include <json.hpp>

#include "profwall/errors.hpp"

namespace profwall {

std::string_view to_string(Reason r) {
  switch (r) {
    case Reason::Matched: return "MATCHED";
    case Reason::DefaultAccept: return "DEFAULT_ACCEPT";
    case Reason::NoPolicyMatch: return "NO_POLICY_MATCH";
    case Reason::RateExceeded: return "RATE_EXCEEDED";
    case Reason::WrongState: return "WRONG_STATE";
    case Reason::UnresolvedName: return "UNRESOLVED_NAME";
    case Reason::Error: return "ERROR";
  }
  return "?";
}

std::string_view to_string(Guard g) {
  switch (g) {
    case Guard::Match: return "match";
    case Guard::SecondDirection: return "second-direction";
    case Guard::Self: return "self";
    case Guard::NextMatch: return "next-match";
    case Guard::Expiry: return "expiry";
  }
  return "?";
}

std::string_view to_string(DirSel d) {
  switch (d) {
    case DirSel::Forward: return "fwd";
    case DirSel::Backward: return "bwd";
    case DirSel::Both: return "both";
    case DirSel::Any: return "any";
  }
  return "?";
}

namespace {

int evaluation_rank(Guard g) {
  switch (g) {
    case Guard::NextMatch: return 0;
    case Guard::Match:
    case Guard::SecondDirection:
    case Guard::Self: return 1;
    case Guard::Expiry: return 2;
  }
  return 3;
}

bool accepting(Guard g) { return g != Guard::Expiry; }

}  // namespace

InteractionFsm InteractionFsm::compile(const Interaction& interaction) {
  if (interaction.policies.empty()) {
    throw CompileError("interaction '" + interaction.name + "' has no policies");
  }
  InteractionFsm m;
  m.name_ = interaction.name;
  m.policies_ = interaction.policies;
  const std::size_t n = m.policies_.size();
  for (const auto& p : m.policies_) m.inverted_.push_back(invert_direction(p.match));

  auto one_off_bidir = [&](std::size_t i) {
    return m.policies_[i].kind == PolicyKind::OneOff && m.policies_[i].bidirectional;
  };
  for (std::size_t i = 0; i < n; ++i) {
    const Policy& p = m.policies_[i];
    m.entry_.push_back(m.states_.size());
    if (one_off_bidir(i)) {
      m.states_.push_back({i, DirSel::Forward, p.kind});
      m.states_.push_back({i, DirSel::Backward, p.kind});
    } else {
      DirSel d = p.kind != PolicyKind::OneOff && p.bidirectional ? DirSel::Both : DirSel::Forward;
      m.states_.push_back({i, d, p.kind});
    }
  }
  auto next = [&](std::size_t i) { return (i + 1) % n; };
  // State reached once policy j has matched in the forward direction.
  auto after = [&](std::size_t j) {
    if (one_off_bidir(j)) return m.entry_[j] + 1;
    if (m.policies_[j].kind == PolicyKind::OneOff) return m.entry_[next(j)];
    return m.entry_[j];
  };

  for (std::size_t i = 0; i < n; ++i) {
    const Policy& p = m.policies_[i];
    std::size_t s = m.entry_[i];
    if (p.kind == PolicyKind::OneOff) {
      if (p.bidirectional) {
        m.transitions_.push_back({s, i, DirSel::Forward, Guard::Match, s + 1});
        m.transitions_.push_back({s + 1, i, DirSel::Backward, Guard::SecondDirection, m.entry_[next(i)]});
      } else {
        m.transitions_.push_back({s, i, DirSel::Forward, Guard::Match, m.entry_[next(i)]});
      }
      continue;
    }
    m.transitions_.push_back({s, i, m.states_[s].expects, Guard::Self, s});
    if (next(i) != i) m.transitions_.push_back({s, next(i), DirSel::Forward, Guard::NextMatch, after(next(i))});
  }
  // Expiry: leave for the next policy's first state; when the expiring packet
  // is accepted there, go straight to where that state's transition leads.
  const std::vector<FsmTransition> base = m.transitions_;
  for (std::size_t i = 0; i < n; ++i) {
    if (m.policies_[i].kind != PolicyKind::Transient) continue;
    std::size_t s = m.entry_[i];
    std::size_t t = m.entry_[next(i)];
    m.transitions_.push_back({s, i, DirSel::Any, Guard::Expiry, t});
    std::vector<FsmTransition> from_t;
    for (const auto& e : base) {
      if (e.from == t && accepting(e.guard)) from_t.push_back(e);
    }
    std::stable_sort(from_t.begin(), from_t.end(), [](const auto& a, const auto& b) {
      return evaluation_rank(a.guard) < evaluation_rank(b.guard);
    });
    for (const auto& e : from_t) m.transitions_.push_back({s, e.policy, e.dir, Guard::Expiry, e.to});
  }

  m.outgoing_.resize(m.states_.size());
  for (std::size_t k = 0; k < m.transitions_.size(); ++k) m.outgoing_[m.transitions_[k].from].push_back(k);
  for (auto& out : m.outgoing_) {
    std::stable_sort(out.begin(), out.end(), [&](std::size_t a, std::size_t b) {
      return evaluation_rank(m.transitions_[a].guard) < evaluation_rank(m.transitions_[b].guard);
    });
  }
  return m;
}

InteractionFsm compile_interaction(const Interaction& interaction) { return InteractionFsm::compile(interaction); }

FsmRuntime::FsmRuntime(const InteractionFsm& machine) : fsm(&machine) {
  for (const auto& p : machine.policies()) {
    buckets.push_back(p.rate() ? std::optional<RateBucket>(RateBucket(*p.rate())) : std::nullopt);
  }
  counters.resize(machine.states().size());
}

namespace {

// Memoized match results for one packet, by (policy, direction).
class MatchCache {
 public:
  MatchCache(const InteractionFsm& fsm, const Packet& pkt, const MatchEnv& env)
      : fsm_(fsm), pkt_(pkt), env_(env), results_(fsm.policies().size() * 2) {}

  MatchResult get(std::size_t policy, Direction dir) {
    auto& slot = results_[policy * 2 + (dir == Direction::Backward ? 1 : 0)];
    if (!slot) {
      slot = match_spec(fsm_.spec(policy, dir), pkt_, env_);
      if (*slot == MatchResult::Unresolved) unresolved_ = true;
    }
    return *slot;
  }

  // Matches per the transition's direction selector.
  bool matches(std::size_t policy, DirSel dir) {
    switch (dir) {
      case DirSel::Forward: return get(policy, Direction::Forward) == MatchResult::Match;
      case DirSel::Backward: return get(policy, Direction::Backward) == MatchResult::Match;
      case DirSel::Both:
      case DirSel::Any:
        return get(policy, Direction::Forward) == MatchResult::Match ||
               get(policy, Direction::Backward) == MatchResult::Match;
    }
    return false;
  }

  bool unresolved() const { return unresolved_; }

 private:
  const InteractionFsm& fsm_;
  const Packet& pkt_;
  const MatchEnv& env_;
  std::vector<std::optional<MatchResult>> results_;
  bool unresolved_ = false;
};

}  // namespace

StepResult step(FsmRuntime& rt, const Packet& pkt, const MatchEnv& env, StepOptions opts) {
  const InteractionFsm& fsm = *rt.fsm;
  MatchCache cache(fsm, pkt, env);
  StepResult result;
  result.state_before = rt.current;
  result.state_after = rt.current;

  const FsmState& here = fsm.states()[rt.current];
  const bool expired = here.kind == PolicyKind::Transient &&
                       transient_within(fsm.policies()[here.policy], rt.counters[rt.current], pkt.ts) ==
                           Within::Expired;

  for (std::size_t k : fsm.outgoing(rt.current)) {
    const FsmTransition& e = fsm.transitions()[k];
    if (e.guard == Guard::Expiry) {
      if (!expired || e.dir == DirSel::Any) continue;
    } else if (e.guard != Guard::NextMatch && expired) {
      continue;
    }
    if (!cache.matches(e.policy, e.dir)) continue;

    std::optional<RateBucket> bucket = rt.buckets[e.policy];
    if (bucket && bucket->admit(pkt.ts, opts.clamp_clock) == RateBucket::Outcome::Exceed) {
      result.reason = Reason::RateExceeded;
      result.policy = e.policy;
      return result;
    }
    rt.buckets[e.policy] = std::move(bucket);
    auto& c = rt.counters[e.to];
    if (e.guard == Guard::Self) {
      if (here.kind == PolicyKind::Transient) {
        ++c.packets;
        if (!c.started_at) c.started_at = pkt.ts;
      }
    } else {
      const FsmState& target = fsm.states()[e.to];
      c.packets = target.kind == PolicyKind::Transient && target.policy == e.policy ? 1 : 0;
      c.started_at = pkt.ts;
    }
    rt.current = e.to;
    result.accepted = true;
    result.reason = Reason::Matched;
    result.policy = e.policy;
    result.state_after = e.to;
    return result;
  }

  for (std::size_t p = 0; p < fsm.policies().size(); ++p) {
    bool hit = cache.get(p, Direction::Forward) == MatchResult::Match ||
               (fsm.policies()[p].bidirectional && cache.get(p, Direction::Backward) == MatchResult::Match);
    if (hit) {
      result.reason = Reason::WrongState;
      return result;
    }
  }
  result.reason = cache.unresolved() ? Reason::UnresolvedName : Reason::NoPolicyMatch;
  return result;
}

// ---------------------------------------------------------------------------

std::string fsm_to_json(const InteractionFsm& fsm) {
  nlohmann::json states = nlohmann::json::array();
  for (std::size_t s = 0; s < fsm.states().size(); ++s) {
    const auto& st = fsm.states()[s];
    states.push_back({{"id", s},
                      {"policy", fsm.policies()[st.policy].name},
                      {"kind", to_string(st.kind)},
                      {"expects", to_string(st.expects)},
                      {"initial", s == 0}});
  }
  nlohmann::json transitions = nlohmann::json::array();
  for (const auto& e : fsm.transitions()) {
    transitions.push_back({{"from", e.from},
                           {"to", e.to},
                           {"policy", fsm.policies()[e.policy].name},
                           {"direction", to_string(e.dir)},
                           {"guard", to_string(e.guard)}});
  }
  nlohmann::json doc{{"v", 1}, {"interaction", fsm.name()}, {"states", states}, {"transitions", transitions}};
  return doc.dump();
}

namespace {
std::string dot_quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}
}  // namespace

std::string fsm_to_dot(const InteractionFsm& fsm) {
  std::string out = "digraph " + dot_quote(fsm.name()) + " {\n  rankdir=LR;\n";
  for (std::size_t s = 0; s < fsm.states().size(); ++s) {
    const auto& st = fsm.states()[s];
    std::string label = std::to_string(s) + "\\n" + fsm.policies()[st.policy].name + " (" +
                        std::string(to_string(st.kind)) + ", " + std::string(to_string(st.expects)) + ")";
    out += "  s" + std::to_string(s) + " [label=\"" + label + "\"" + (s == 0 ? ", shape=doublecircle" : "") + "];\n";
  }
  for (const auto& e : fsm.transitions()) {
    std::string label = fsm.policies()[e.policy].name + ", " + std::string(to_string(e.dir)) + ": " +
                        std::string(to_string(e.guard));
    out += "  s" + std::to_string(e.from) + " -> s" + std::to_string(e.to) + " [label=" + dot_quote(label) + "];\n";
  }
  out += "}\n";
  return out;
}

}  // namespace profwall
