#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tapplan/kb.hpp"
#include "tapplan/planner.hpp"

namespace tapplan {

enum class TapKind { guaranteed, best_effort };

// One scheduled test-action pair. The test condition is the guarding
// action's precondition; guarded_states pins down exactly which planned
// states the pair covers. Guaranteed taps carry a deadline (the tightest
// failure deadline over the guarded states minus the action delay) and a
// polling period of deadline - (test_wcet + action_wcet), which makes the
// worst-case response (one full period plus both execution times plus the
// action delay) land on the failure deadline. Best-effort taps run in slack
// and have neither.
struct Tap {
  std::string name;  // the action's name
  Condition test;
  int action = -1;  // index into kb.actions
  double test_wcet = 0.0;
  double action_wcet = 0.0;
  double t_delay = 0.0;
  TapKind kind = TapKind::best_effort;
  std::optional<double> deadline;
  std::optional<double> period;
  std::vector<StateVector> guarded_states;

  double wcet() const { return test_wcet + action_wcet; }
};

struct Escalation {
  double p1 = 0.0;
  std::size_t states_removed = 0;
  // utilization of the infeasible pass that forced this escalation
  // (+infinity when the pass died on an unguardable deadline instead)
  double utilization_before = 0.0;
};

struct TapSchedule {
  std::vector<Tap> taps;
  double utilization = 0.0;  // sum of wcet/period over guaranteed taps
  bool feasible = false;     // exactly utilization <= 1
  std::vector<Escalation> escalations;
};

// Builds taps from the plan's chosen actions: one guaranteed tap per action
// guarding TTF-bearing states (deadline = minimum over those states of their
// failure deadline minus the action's t_delay), one best-effort tap per
// non-preemptive action. Throws UnguardableStateError when a guaranteed
// deadline leaves no room for the pair's execution times.
std::vector<Tap> derive_taps(const PlanGraph& graph, const KnowledgeBase& kb,
                             double epsilon);

// Deadline-driven feasibility: utilization over guaranteed taps, feasible
// exactly when it is at most 1. Best-effort taps never consume budget.
TapSchedule schedulability(std::vector<Tap> taps);

// Plan, derive taps, test schedulability; on failure raise P1 to the next
// distinct state probability that removes at least one more state, prune,
// and retry. Aborts with SchedulingError when an escalation would remove a
// goal-path state or nothing removable remains. Every escalation is recorded
// on the returned schedule.
struct PlanAndScheduleResult {
  PlanGraph graph;
  TapSchedule schedule;
};
PlanAndScheduleResult plan_and_schedule(const KnowledgeBase& kb,
                                        const PlannerConfig& cfg = {});

}  // namespace tapplan
