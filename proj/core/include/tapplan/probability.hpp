#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tapplan/kb.hpp"

namespace tapplan {

enum class ActionKind { none, preemptive, nonpreemptive };

// Inputs for the non-preemptive average-delay estimate: totals over the
// distinct actions already selected in the plan (candidate included).
struct CriticalTimeContext {
  double total_test_wcet = 0.0;    // a: sum of feature-test execution times
  std::size_t action_count = 0;    // n: number of planned actions
  double total_action_wcet = 0.0;  // b: sum of action execution times
  double t_delay = 0.0;            // candidate action's effect delay
};

enum class CriticalTimeCase { preemptive, nonpreemptive, no_action };

// The single time at which offspring cumulative probabilities are read off:
//  - preemptive: the guard deadline (minimum epsilon-time over the state's
//    failure transitions), passed as ttf_deadline;
//  - nonpreemptive: a*n/8 + b/4 + t_delay, the average-case effect time;
//  - no_action: +infinity (asymptotic probabilities).
// Throws std::invalid_argument when the required argument is missing.
double critical_time(CriticalTimeCase c, std::optional<double> ttf_deadline,
                     const std::optional<CriticalTimeContext>& ctx);

// One offspring state's share of the parent's probability mass.
struct OffspringContribution {
  StateVector target;
  std::string via;       // transition name
  bool from_action = false;
  bool to_failure = false;
  double fraction = 0.0;  // share of the parent (C_i(t), p, or p/2)
  double mass = 0.0;      // fraction * parent probability
};

// Evaluates each temporal member's curve at the critical time t, assigns the
// action (when present) the remainder p = 1 - sum C_i(t) -- halved when the
// action is non-preemptive -- and scales everything by parent_prob. Targets
// are the transitions' postconditions applied to parent_vector.
// Throws ValidationError if sum C_i(t) exceeds 1 beyond tolerance 1e-9.
std::vector<OffspringContribution> offspring_probabilities(
    const StateVector& parent_vector, double parent_prob,
    const std::vector<TemporalTransition>& temporals,
    const ActionTransition* action, ActionKind action_kind, double t);

// Merge of a contribution into an offspring state:
//  - new state: probability is the contribution;
//  - existing, not yet expanded: sum;
//  - existing, already expanded: unchanged, contribution discarded (the
//    caller accounts the discarded mass -- this is the underestimation case).
// Sums above 1 are clamped to 1 (clamped flag set).
struct MergeResult {
  double value = 0.0;
  double discarded = 0.0;
  bool clamped = false;
};
MergeResult merge_contribution(std::optional<double> existing_prob,
                               bool already_expanded, double new_mass);

// Smallest epsilon-time over the set's failure members; nullopt when the set
// has none (or there is no set).
std::optional<double> min_ttf_epsilon_time(const TransitionSet* set, double epsilon);

}  // namespace tapplan
