#include "tapplan/scheduler.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "tapplan/errors.hpp"

namespace tapplan {

std::vector<Tap> derive_taps(const PlanGraph& graph, const KnowledgeBase& kb,
                             double epsilon) {
  struct Group {
    TapKind kind;
    double deadline = std::numeric_limits<double>::infinity();
    std::vector<StateId> states;
    StateId tightest = 0;  // state that set the deadline, for error reporting
  };
  // keyed by (action index, kind) so an action used both ways yields two taps
  std::map<std::pair<int, int>, Group> groups;

  for (StateId id = 0; id < graph.states.size(); ++id) {
    const auto& s = graph.states[id];
    if (s.status == StateStatus::removed || s.cls == StateClass::failure) continue;
    if (s.chosen_action < 0 || s.action_kind == ActionKind::none) continue;

    const auto& action = kb.actions[s.chosen_action];
    if (s.action_kind == ActionKind::preemptive) {
      MatchResult match = matching_transitions(s.vector, kb);
      auto min_eps = min_ttf_epsilon_time(match.temporal_set, epsilon);
      if (!min_eps)
        throw std::logic_error("preemptive action on a state without a TTF");
      double d = *min_eps - action.t_delay;
      auto& g = groups[{s.chosen_action, 0}];
      g.kind = TapKind::guaranteed;
      if (d < g.deadline) {
        g.deadline = d;
        g.tightest = id;
      }
      g.states.push_back(id);
    } else {
      auto& g = groups[{s.chosen_action, 1}];
      g.kind = TapKind::best_effort;
      g.states.push_back(id);
    }
  }

  std::vector<Tap> taps;
  for (const auto& [key, g] : groups) {
    const auto& action = kb.actions[key.first];
    Tap tap;
    tap.name = action.name;
    tap.test = action.pre;
    tap.action = key.first;
    tap.test_wcet = action.test_wcet;
    tap.action_wcet = action.action_wcet;
    tap.t_delay = action.t_delay;
    tap.kind = g.kind;
    if (g.kind == TapKind::guaranteed) {
      if (g.deadline <= tap.wcet()) {
        std::ostringstream os;
        os << "guaranteed pair \"" << action.name << "\" has deadline " << g.deadline
           << "s, not enough for its execution time of " << tap.wcet() << "s";
        throw UnguardableStateError(os.str(),
                                    kb.describe(graph.states[g.tightest].vector));
      }
      tap.deadline = g.deadline;
      tap.period = g.deadline - tap.wcet();
    }
    for (StateId id : g.states) tap.guarded_states.push_back(graph.states[id].vector);
    std::sort(tap.guarded_states.begin(), tap.guarded_states.end());
    taps.push_back(std::move(tap));
  }
  return taps;
}

TapSchedule schedulability(std::vector<Tap> taps) {
  TapSchedule sched;
  sched.taps = std::move(taps);
  double u = 0.0;
  for (const auto& tap : sched.taps) {
    if (tap.kind != TapKind::guaranteed) continue;
    u += tap.wcet() / *tap.period;
  }
  sched.utilization = u;
  sched.feasible = u <= 1.0;
  return sched;
}

namespace {

// Smallest distinct probability over live (non-removed, non-failure) states
// whose adoption as P1 removes at least one of them; nullopt when fewer than
// two distinct levels remain.
std::optional<double> next_productive_p1(const PlanGraph& graph) {
  std::set<double> probs;
  for (const auto& s : graph.states) {
    if (s.status == StateStatus::removed || s.cls == StateClass::failure) continue;
    probs.insert(s.prob);
  }
  if (probs.size() < 2) return std::nullopt;
  return *std::next(probs.begin());  // removes exactly the lowest stratum
}

}  // namespace

PlanAndScheduleResult plan_and_schedule(const KnowledgeBase& kb,
                                        const PlannerConfig& cfg) {
  PlanAndScheduleResult result;
  result.graph = plan(kb, cfg);
  std::vector<Escalation> escalations;

  for (;;) {
    bool unguardable = false;
    std::string unguardable_what;
    try {
      result.schedule = schedulability(derive_taps(result.graph, kb, cfg.epsilon));
    } catch (const UnguardableStateError& e) {
      // the offending guard cannot run; treat like an overloaded schedule and
      // keep pruning until the state carrying it is removed
      unguardable = true;
      unguardable_what = e.what();
    }
    if (!unguardable && result.schedule.feasible) {
      result.schedule.escalations = std::move(escalations);
      return result;
    }

    double final_util = unguardable ? std::numeric_limits<double>::infinity()
                                    : result.schedule.utilization;
    auto new_p1 = next_productive_p1(result.graph);
    if (!new_p1) {
      std::ostringstream os;
      os << "schedule infeasible and no further state can be removed";
      if (unguardable) os << " (" << unguardable_what << ")";
      throw SchedulingError(os.str(), final_util);
    }
    for (StateId id : result.graph.goal_path) {
      if (result.graph.states[id].prob < *new_p1) {
        std::ostringstream os;
        os << "schedule infeasible (utilization " << final_util
           << ") and the next removal threshold P1 = " << *new_p1
           << " would remove a goal-path state";
        throw SchedulingError(os.str(), final_util);
      }
    }

    std::size_t removed = apply_removal_threshold(result.graph, *new_p1);
    classify_states(result.graph, kb);
    escalations.push_back({*new_p1, removed, final_util});
  }
}

}  // namespace tapplan
