#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "tapplan/kb.hpp"
#include "tapplan/planner.hpp"
#include "tapplan/scheduler.hpp"

namespace tapplan {

// 53-bit uniform stream; one per trial, derived by counter from the run seed
// so serial and parallel execution are bit-identical.
struct RngStream {
  std::mt19937_64 engine;

  explicit RngStream(std::uint64_t seed) : engine(seed) {}
  double uniform() { return static_cast<double>(engine() >> 11) * 0x1.0p-53; }
};

RngStream trial_stream(std::uint64_t run_seed, std::uint64_t trial_index);

// Which member of a temporal set fires, and when, for one state visit.
// Members are mutually exclusive: their asymptotes are stacked on [0,1) and a
// single draw picks at most one. The firing time is the generalized inverse
// of the member's curve at a second draw scaled by its asymptote, which makes
// P(member i fired by t) exactly C_i(t).
struct TemporalSample {
  int member = -1;  // -1: no member ever fires from this visit
  double fire_time = 0.0;  // +infinity when member == -1
};
TemporalSample sample_temporal_outcome(const TransitionSet& set, double u,
                                       double v_unit);
TemporalSample sample_temporal_outcome(const TransitionSet& set, RngStream& rng);

enum class TrialResult { goal, failure, deadend_stuck, removed_detected, timeout };

struct TraceStep {
  double time = 0.0;
  StateVector state;
  std::string via;  // transition that produced the entry; "initial" for the first
};

struct TrialOutcome {
  TrialResult result = TrialResult::timeout;
  double elapsed = 0.0;
  std::vector<TraceStep> trace;
};

struct SimOptions {
  // best-effort taps fire this many times per schedule cycle (the longest
  // guaranteed period, 1s when there is none)
  double fires_per_cycle = 1.0;
  unsigned threads = 1;
};

// Longest guaranteed tap period; 1s when the schedule has no guaranteed taps.
double cycle_length(const TapSchedule& schedule);
// 50 cycles worth of wall-clock, the default trial cutoff.
double default_horizon(const TapSchedule& schedule);

// One continuous-time trial against the stochastic world model. The in-state
// clock resets on every entry. Guaranteed taps release at every multiple of
// their period from time 0; best-effort taps once per cycle starting at the
// end of the first cycle; a matching tap's effect lands at
// release + test_wcet + action_wcet + t_delay. Simultaneous action and
// temporal events resolve in the action's favor (preemption). Terminates on
// a failure-class vector, a goal vector, entry into a removed vector, a
// deadend vector with nothing pending, or the horizon.
// Throws SimulationError when the world reaches a vector the plan graph does
// not contain at all.
TrialOutcome run_trial(const PlanGraph& graph, const TapSchedule& schedule,
                       const KnowledgeBase& kb, RngStream& rng, double horizon,
                       const SimOptions& options = {});

struct OutcomeStats {
  std::size_t count = 0;
  double frequency = 0.0;
  double ci_half_width = 0.0;  // Wilson 95% half-width
};

struct SimReport {
  std::size_t trials = 0;
  OutcomeStats goal;
  OutcomeStats failure;
  OutcomeStats deadend_stuck;
  OutcomeStats removed_detected;
  OutcomeStats timeout;
  double planner_goal_prob = 0.0;  // the plan's goal-path probability
  std::optional<double> mean_time_to_goal;
  std::uint64_t seed = 0;
  double horizon = 0.0;
};

// Runs n_trials independent trials on decorrelated per-trial streams and
// aggregates outcome frequencies with Wilson 95% intervals. Deterministic for
// a fixed seed, trial count, and fixture, regardless of thread count.
// on_trial, when set, is invoked in trial-index order after all trials ran.
SimReport estimate(const PlanGraph& graph, const TapSchedule& schedule,
                   const KnowledgeBase& kb, std::size_t n_trials, double horizon,
                   std::uint64_t seed, const SimOptions& options = {},
                   const std::function<void(std::size_t, const TrialOutcome&)>&
                       on_trial = {});

}  // namespace tapplan
