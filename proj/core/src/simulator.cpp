#include "tapplan/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>
#include <unordered_map>

#include "tapplan/errors.hpp"

namespace tapplan {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::size_t kMaxTrialSteps = 1000000;
constexpr double kWilsonZ = 1.9599639845400545;  // 95% two-sided

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

}  // namespace

RngStream trial_stream(std::uint64_t run_seed, std::uint64_t trial_index) {
  return RngStream(splitmix64(run_seed ^ splitmix64(trial_index + 1)));
}

TemporalSample sample_temporal_outcome(const TransitionSet& set, double u,
                                       double v_unit) {
  double acc = 0.0;
  for (std::size_t i = 0; i < set.members.size(); ++i) {
    const double a = asymptotic_prob(set.members[i].curve);
    if (u < acc + a) {
      double v = v_unit * a;
      if (v <= 0.0) v = std::numeric_limits<double>::min();
      return {static_cast<int>(i), inverse_cum_prob(set.members[i].curve, v)};
    }
    acc += a;
  }
  return {-1, kInf};
}

TemporalSample sample_temporal_outcome(const TransitionSet& set, RngStream& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  for (std::size_t i = 0; i < set.members.size(); ++i) {
    const double a = asymptotic_prob(set.members[i].curve);
    if (u < acc + a) {
      double v = rng.uniform() * a;
      if (v <= 0.0) v = std::numeric_limits<double>::min();
      return {static_cast<int>(i), inverse_cum_prob(set.members[i].curve, v)};
    }
    acc += a;
  }
  return {-1, kInf};
}

double cycle_length(const TapSchedule& schedule) {
  double longest = 0.0;
  for (const auto& tap : schedule.taps)
    if (tap.kind == TapKind::guaranteed && tap.period)
      longest = std::max(longest, *tap.period);
  return longest > 0.0 ? longest : 1.0;
}

double default_horizon(const TapSchedule& schedule) {
  return 50.0 * cycle_length(schedule);
}

TrialOutcome run_trial(const PlanGraph& graph, const TapSchedule& schedule,
                       const KnowledgeBase& kb, RngStream& rng, double horizon,
                       const SimOptions& options) {
  // vector -> guarding tap (each state has at most one chosen action)
  std::unordered_map<StateVector, const Tap*, StateVectorHash> guards;
  for (const auto& tap : schedule.taps)
    for (const auto& sv : tap.guarded_states) guards.emplace(sv, &tap);

  const double cycle = cycle_length(schedule) / options.fires_per_cycle;

  TrialOutcome out;
  StateVector current =
      kb.initial_states[std::min<std::size_t>(
          static_cast<std::size_t>(rng.uniform() * kb.initial_states.size()),
          kb.initial_states.size() - 1)];
  double now = 0.0;
  out.trace.push_back({now, current, "initial"});

  for (std::size_t step = 0; step < kMaxTrialSteps; ++step) {
    auto sid = graph.find(current);
    if (!sid)
      throw SimulationError("world reached a state missing from the plan graph: " +
                            kb.describe(current));
    const auto& ps = graph.states[*sid];

    if (ps.cls == StateClass::failure) {
      out.result = TrialResult::failure;
      out.elapsed = now;
      return out;
    }
    if (kb.goal.matches(current)) {
      out.result = TrialResult::goal;
      out.elapsed = now;
      return out;
    }
    if (ps.status == StateStatus::removed) {
      out.result = TrialResult::removed_detected;
      out.elapsed = now;
      return out;
    }

    // pending temporal event (clock resets on entry)
    MatchResult match = matching_transitions(current, kb);
    double t_temporal = kInf;
    int member = -1;
    if (match.temporal_set != nullptr) {
      TemporalSample s = sample_temporal_outcome(*match.temporal_set, rng);
      member = s.member;
      if (member >= 0) t_temporal = now + s.fire_time;
    }

    // pending tap effect
    double t_tap = kInf;
    const Tap* tap = nullptr;
    if (auto it = guards.find(current); it != guards.end()) {
      tap = it->second;
      double release;
      if (tap->kind == TapKind::guaranteed) {
        const double p = *tap->period;
        release = std::ceil(now / p) * p;
      } else {
        release = std::max(cycle, std::ceil(now / cycle) * cycle);
      }
      t_tap = release + tap->wcet() + tap->t_delay;
    }

    if (t_temporal == kInf && t_tap == kInf) {
      if (ps.cls == StateClass::deadend) {
        out.result = TrialResult::deadend_stuck;
        out.elapsed = now;
      } else {
        out.result = TrialResult::timeout;
        out.elapsed = horizon;
      }
      return out;
    }

    const bool action_first = t_tap <= t_temporal;  // ties favor preemption
    double when = action_first ? t_tap : t_temporal;
    if (when > horizon) {
      out.result = TrialResult::timeout;
      out.elapsed = horizon;
      return out;
    }
    if (when <= now) when = std::nextafter(now, kInf);

    if (action_first) {
      current = kb.actions[tap->action].post.apply_to(current);
      out.trace.push_back({when, current, tap->name});
    } else {
      const auto& m = match.temporal_set->members[member];
      current = m.post.apply_to(current);
      out.trace.push_back({when, current, m.name});
    }
    now = when;
  }
  throw SimulationError("trial exceeded the step limit; the model cycles without "
                        "advancing time");
}

namespace {

OutcomeStats make_stats(std::size_t count, std::size_t n) {
  OutcomeStats s;
  s.count = count;
  if (n == 0) return s;
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(count) / nn;
  s.frequency = p;
  const double z2 = kWilsonZ * kWilsonZ;
  s.ci_half_width = kWilsonZ *
                    std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) /
                    (1.0 + z2 / nn);
  return s;
}

}  // namespace

SimReport estimate(const PlanGraph& graph, const TapSchedule& schedule,
                   const KnowledgeBase& kb, std::size_t n_trials, double horizon,
                   std::uint64_t seed, const SimOptions& options,
                   const std::function<void(std::size_t, const TrialOutcome&)>&
                       on_trial) {
  struct Slot {
    TrialResult result = TrialResult::timeout;
    double elapsed = 0.0;
  };
  std::vector<Slot> slots(n_trials);
  std::vector<TrialOutcome> kept;
  if (on_trial) kept.resize(n_trials);

  auto work = [&](std::size_t offset, std::size_t stride) {
    for (std::size_t i = offset; i < n_trials; i += stride) {
      RngStream rng = trial_stream(seed, i);
      TrialOutcome o = run_trial(graph, schedule, kb, rng, horizon, options);
      slots[i] = {o.result, o.elapsed};
      if (on_trial) kept[i] = std::move(o);
    }
  };

  const unsigned threads = std::max(1u, options.threads);
  if (threads == 1 || n_trials < 2) {
    work(0, 1);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t)
      pool.emplace_back(work, t, threads);
    for (auto& th : pool) th.join();
  }

  // ordered reduction by trial index
  std::size_t counts[5] = {0, 0, 0, 0, 0};
  double goal_time_sum = 0.0;
  for (std::size_t i = 0; i < n_trials; ++i) {
    counts[static_cast<int>(slots[i].result)]++;
    if (slots[i].result == TrialResult::goal) goal_time_sum += slots[i].elapsed;
  }
  if (on_trial)
    for (std::size_t i = 0; i < n_trials; ++i) on_trial(i, kept[i]);

  SimReport report;
  report.trials = n_trials;
  report.goal = make_stats(counts[static_cast<int>(TrialResult::goal)], n_trials);
  report.failure = make_stats(counts[static_cast<int>(TrialResult::failure)], n_trials);
  report.deadend_stuck =
      make_stats(counts[static_cast<int>(TrialResult::deadend_stuck)], n_trials);
  report.removed_detected =
      make_stats(counts[static_cast<int>(TrialResult::removed_detected)], n_trials);
  report.timeout = make_stats(counts[static_cast<int>(TrialResult::timeout)], n_trials);
  report.planner_goal_prob = graph.goal_path_probability;
  if (report.goal.count > 0)
    report.mean_time_to_goal = goal_time_sum / static_cast<double>(report.goal.count);
  report.seed = seed;
  report.horizon = horizon;
  return report;
}

}  // namespace tapplan
