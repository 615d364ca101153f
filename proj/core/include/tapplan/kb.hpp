#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tapplan/curve.hpp"

namespace tapplan {

using FeatureId = std::uint16_t;
using ValueId = std::uint16_t;

// A discrete state feature with an ordered finite domain of at least two values.
struct Feature {
  std::string name;
  std::vector<std::string> values;
};

// Total assignment over a knowledge base's features: values[f] indexes
// features[f].values. Ordering is lexicographic and used for deterministic
// tie-breaking throughout the planner.
struct StateVector {
  std::vector<ValueId> values;

  auto operator<=>(const StateVector&) const = default;
};

struct StateVectorHash {
  std::size_t operator()(const StateVector& s) const noexcept {
    // FNV-1a over the raw value ids
    std::uint64_t h = 14695981039346656037ull;
    for (ValueId v : s.values) {
      h ^= static_cast<std::uint64_t>(v) + 1;
      h *= 1099511628211ull;
    }
    return static_cast<std::size_t>(h);
  }
};

// Conjunction of feature = value tests; clauses sorted by feature id, each
// feature at most once. The empty condition matches every state.
struct Condition {
  std::vector<std::pair<FeatureId, ValueId>> clauses;

  bool matches(const StateVector& s) const {
    for (const auto& [f, v] : clauses)
      if (s.values[f] != v) return false;
    return true;
  }
  std::optional<ValueId> value_of(FeatureId f) const {
    for (const auto& [cf, cv] : clauses)
      if (cf == f) return cv;
    return std::nullopt;
  }
  // Overwrites the condition's assignments onto a copy of the given state.
  StateVector apply_to(const StateVector& s) const {
    StateVector out = s;
    for (const auto& [f, v] : clauses) out.values[f] = v;
    return out;
  }
  bool operator==(const Condition&) const = default;
};

// Agent-commanded transition: takes effect t_delay seconds after execution.
// test_wcet / action_wcet are the worst-case execution times of the sensing
// test and the actuation command for scheduling.
struct ActionTransition {
  std::string name;
  Condition pre;
  Condition post;
  double t_delay = 0.0;
  double test_wcet = 0.0;
  double action_wcet = 0.0;
};

// Uncontrolled transition with a cumulative probability curve over in-state
// time. is_failure marks a transition whose target leaves the safe envelope;
// the planner must preempt it in every reachable state.
struct TemporalTransition {
  std::string name;
  Condition post;
  TemporalCurve curve;
  bool is_failure = false;
};

// All temporal transitions sharing one precondition. Set preconditions must
// be mutually exclusive across the knowledge base and the member asymptotes
// must sum to at most 1.
struct TransitionSet {
  Condition pre;
  std::vector<TemporalTransition> members;
};

struct KnowledgeBase {
  std::vector<Feature> features;
  std::vector<StateVector> initial_states;
  Condition goal;
  std::vector<ActionTransition> actions;
  std::vector<TransitionSet> temporal_sets;

  std::optional<FeatureId> feature_id(const std::string& name) const;
  std::optional<ValueId> value_id(FeatureId f, const std::string& value) const;
  // Human-readable "{F1=v1, F2=v2, ...}" rendering of a state.
  std::string describe(const StateVector& s) const;
  std::string describe(const Condition& c) const;
  // Product of feature domain sizes, saturating at 2^63-1.
  std::uint64_t state_space_size() const;
};

struct Violation {
  std::string rule;     // short machine-readable tag, e.g. "set-overlap"
  std::string message;  // human-readable detail
  std::optional<StateVector> witness;
};

// Structural parse only: resolves names to ids and checks the document shape,
// but runs no invariant validation. Throws ParseError / ReferenceError.
KnowledgeBase parse_knowledge_base(const std::string& json_text);
KnowledgeBase parse_knowledge_base_file(const std::string& path);

// Parses and fully validates a knowledge-base document (JSON text). Throws
// ParseError / ReferenceError on malformed input, ValidationError when the
// parsed base violates invariants (message lists every violation).
KnowledgeBase load_knowledge_base(const std::string& json_text);
KnowledgeBase load_knowledge_base_file(const std::string& path);

// Serializes back to the document format accepted by load_knowledge_base.
std::string save_knowledge_base(const KnowledgeBase& kb);

// Checks every knowledge-base invariant and returns all violations (empty =
// valid): overlapping set preconditions (with a witness state), per-set
// asymptote sums above 1, malformed curves, degenerate features, bad
// initial states, no-op actions. Enumerates the full state space when it has
// at most 10^6 states, otherwise uses exact pairwise condition-compatibility.
std::vector<Violation> validate_knowledge_base(const KnowledgeBase& kb);

// The unique transition set matching the state (nullptr when none does) plus
// every applicable action. Throws std::logic_error if two sets match, which
// validation rules out.
struct MatchResult {
  const TransitionSet* temporal_set = nullptr;
  int temporal_set_index = -1;
  std::vector<const ActionTransition*> actions;
};
MatchResult matching_transitions(const StateVector& state, const KnowledgeBase& kb);

}  // namespace tapplan
