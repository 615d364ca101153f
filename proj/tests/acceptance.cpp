// Acceptance suite: one check per shipped guarantee, one pass/fail line each.
// Exit code 0 only when every criterion holds within its stated budget.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "tapplan/errors.hpp"
#include "tapplan/export.hpp"
#include "tapplan/kb.hpp"
#include "tapplan/planner.hpp"
#include "tapplan/scheduler.hpp"
#include "tapplan/simulator.hpp"

using namespace tapplan;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string fixture(const std::string& name) {
  return std::string(TAPPLAN_FIXTURE_DIR) + "/" + name;
}

// ---------------------------------------------------------------------------
// independent helpers (test-side re-implementations, not the library path)

double oracle_cum(const TemporalCurve& curve, double t) {
  if (const auto* pw = std::get_if<PiecewiseCurve>(&curve.repr)) {
    if (pw->knots.empty()) return pw->asymptote;
    if (t < pw->knots.front().first) return 0.0;
    if (t >= pw->knots.back().first) return pw->asymptote;
    for (std::size_t i = pw->knots.size(); i-- > 0;) {
      auto [ti, ci] = pw->knots[i];
      if (t < ti) continue;
      if (t == ti) return ci;
      auto [tn, cn] = pw->knots[i + 1];
      return ci + (cn - ci) * (t - ti) / (tn - ti);
    }
    return pw->asymptote;
  }
  const auto& de = std::get<DelayedExponentialCurve>(curve.repr);
  if (t < de.t0) return 0.0;
  if (std::isinf(t)) return de.p_max;
  return de.p_max - de.p_max * std::exp(-de.lambda * (t - de.t0));
}

const TransitionSet* oracle_match(const StateVector& s, const KnowledgeBase& kb) {
  for (const auto& set : kb.temporal_sets)
    if (set.pre.matches(s)) return &set;
  return nullptr;
}

// Fraction of the parent assigned to one edge, recomputed from the curves at
// the parent's recorded critical time.
double oracle_fraction(const PlanGraph& g, const KnowledgeBase& kb, const Edge& e) {
  const auto& parent = g.states[e.from];
  double t = *parent.critical_time;
  const TransitionSet* set = oracle_match(parent.vector, kb);
  double temporal_sum = 0.0;
  double found = -1.0;
  if (set != nullptr) {
    for (const auto& m : set->members) {
      double c = oracle_cum(m.curve, t);
      temporal_sum += c;
      if (!e.is_action && m.name == e.via && found < 0.0) found = c;
    }
  }
  if (e.is_action) {
    double p = 1.0 - temporal_sum;
    return parent.action_kind == ActionKind::preemptive ? p : p / 2.0;
  }
  return found;
}

// Exhaustive root-to-state path sums over the expansion graph.
struct PathOracle {
  const PlanGraph& g;
  const KnowledgeBase& kb;
  std::vector<double> sum;
  std::vector<int> on_stack;
  bool acyclic = true;

  PathOracle(const PlanGraph& graph, const KnowledgeBase& base)
      : g(graph), kb(base), sum(graph.states.size(), 0.0),
        on_stack(graph.states.size(), 0) {
    for (StateId id : g.initial_ids) visit(id, g.initial_prior);
  }

  void visit(StateId id, double weight) {
    sum[id] += weight;
    if (on_stack[id]) {
      acyclic = false;
      return;
    }
    on_stack[id] = 1;
    for (EdgeId eid : g.out_edges[id]) {
      const Edge& e = g.edges[eid];
      visit(e.to, weight * oracle_fraction(g, kb, e));
    }
    on_stack[id] = 0;
  }
};

double binom_sigma(double p, std::size_t n) {
  return std::sqrt(std::max(p * (1.0 - p), 1e-9) / static_cast<double>(n));
}

// ---------------------------------------------------------------------------
// criteria

std::string criterion_oracle_equivalence() {
  for (const char* name : {"micro_m1.json", "micro_m2.json", "micro_m3.json"}) {
    auto kb = load_knowledge_base_file(fixture(name));
    auto g = plan(kb);
    if (g.total_discarded_mass != 0.0)
      return std::string(name) + ": unexpected probability discard";
    PathOracle oracle(g, kb);
    if (!oracle.acyclic) return std::string(name) + ": fixture is not acyclic";
    for (StateId id = 0; id < g.states.size(); ++id) {
      double diff = std::abs(oracle.sum[id] - g.states[id].prob);
      if (diff > 1e-9) {
        std::ostringstream os;
        os << name << ": state " << kb.describe(g.states[id].vector)
           << " planner " << g.states[id].prob << " vs oracle " << oracle.sum[id];
        return os.str();
      }
    }
  }
  return "";
}

std::string criterion_failure_bound() {
  const double epsilon = 0.01;
  for (const char* name :
       {"micro_m1.json", "micro_m2.json", "micro_m3.json", "flight_fix3_fix4.json",
        "flight_gear.json", "tornado_overload.json"}) {
    auto kb = load_knowledge_base_file(fixture(name));
    auto r = plan_and_schedule(kb);
    if (!r.schedule.feasible) continue;
    for (StateId id = 0; id < r.graph.states.size(); ++id) {
      const auto& s = r.graph.states[id];
      if (s.cls != StateClass::failure) continue;
      std::set<StateId> parents;
      for (EdgeId eid : r.graph.in_edges[id])
        parents.insert(r.graph.edges[eid].from);
      double parent_sum = 0.0;
      for (StateId p : parents) parent_sum += r.graph.states[p].prob;
      if (s.prob > epsilon * parent_sum + 1e-9) {
        std::ostringstream os;
        os << name << ": failure state " << kb.describe(s.vector) << " prob "
           << s.prob << " exceeds eps * " << parent_sum;
        return os.str();
      }
    }
  }
  return "";
}

std::string criterion_goal_path_selection() {
  auto kb = load_knowledge_base_file(fixture("flight_fix3_fix4.json"));
  auto loc = *kb.feature_id("LOC");
  auto fix5 = *kb.value_id(loc, "FIX5");
  auto fix6 = *kb.value_id(loc, "FIX6");

  auto path_locs = [&](const PlanGraph& g) {
    std::set<ValueId> locs;
    for (StateId id : g.goal_path) locs.insert(g.states[id].vector.values[loc]);
    return locs;
  };

  auto a = plan(kb);
  auto b = plan(kb);
  if (plan_graph_to_json(a, kb) != plan_graph_to_json(b, kb))
    return "probabilistic mode is not deterministic";
  auto direct = path_locs(a);
  if (direct.count(fix5) || direct.count(fix6) || a.goal_path.size() != 3)
    return "probabilistic mode did not return the direct path";

  for (std::uint64_t k = 0; k < 32; ++k) {
    PlannerConfig cfg;
    cfg.order = ExpansionOrder::depth_first;
    cfg.seed_order = k;
    auto g = plan(kb, cfg);
    auto locs = path_locs(g);
    if (locs.count(fix5) && locs.count(fix6)) return "";  // long path found
  }
  return "no expansion order produced the FIX5/FIX6 path";
}

std::string criterion_improbable_removal() {
  auto kb = load_knowledge_base_file(fixture("flight_gear.json"));
  auto baseline = plan(kb);
  PlannerConfig cfg;
  cfg.initial_p1 = 0.005;  // above the 0.004 gear-up asymptote
  auto pruned = plan(kb, cfg);
  if (pruned.expansions * 2 > baseline.expansions) {
    std::ostringstream os;
    os << "expanded " << pruned.expansions << " of " << baseline.expansions;
    return os.str();
  }
  return "";
}

std::string criterion_escalation() {
  auto kb = load_knowledge_base_file(fixture("tornado_overload.json"));
  auto first = schedulability(derive_taps(plan(kb), kb, 0.01));
  if (first.feasible || first.utilization <= 1.0)
    return "first pass unexpectedly schedulable";

  auto r = plan_and_schedule(kb);
  if (r.schedule.escalations.size() != 1) {
    std::ostringstream os;
    os << "expected exactly 1 escalation, saw " << r.schedule.escalations.size();
    return os.str();
  }
  if (std::abs(r.schedule.escalations[0].utilization_before - first.utilization) >
      1e-12)
    return "escalation recorded a different first-pass utilization";
  if (!r.schedule.feasible) return "second pass is not feasible";

  StateVector storm;
  storm.values = {*kb.value_id(*kb.feature_id("POS"), "storm")};
  auto sid = r.graph.find(storm);
  if (!sid || r.graph.states[*sid].status != StateStatus::removed)
    return "the low-probability branch was not removed";
  if (r.graph.goal_path.empty()) return "goal path lost";
  for (StateId id : r.graph.goal_path)
    if (r.graph.states[id].status == StateStatus::removed)
      return "a goal-path state was removed";
  return "";
}

std::string criterion_schedulability() {
  std::mt19937_64 rng(20240817);
  std::uniform_real_distribution<double> uw(0.01, 2.0);
  std::uniform_real_distribution<double> up(0.01, 3.0);
  std::uniform_int_distribution<int> usize(1, 12);
  std::size_t feasible_seen = 0, infeasible_seen = 0;
  for (int iter = 0; iter < 1000; ++iter) {
    std::vector<Tap> taps;
    int n = usize(rng);
    for (int i = 0; i < n; ++i) {
      Tap t;
      t.name = "t" + std::to_string(i);
      t.test_wcet = uw(rng) / 2.0;
      t.action_wcet = uw(rng) / 2.0;
      t.kind = (rng() % 4 == 0) ? TapKind::best_effort : TapKind::guaranteed;
      if (t.kind == TapKind::guaranteed) {
        t.period = up(rng);
        t.deadline = *t.period + t.wcet();
      }
      taps.push_back(std::move(t));
    }
    auto sched = schedulability(taps);
    double independent = 0.0;
    for (const auto& t : taps)
      if (t.kind == TapKind::guaranteed) independent += t.wcet() / *t.period;
    bool expect = independent <= 1.0;
    if (sched.feasible != expect) return "verdict disagrees with utilization";
    (expect ? feasible_seen : infeasible_seen)++;
  }
  if (feasible_seen == 0 || infeasible_seen == 0)
    return "random tap sets did not cover both verdicts";

  // exact boundary
  Tap half;
  half.name = "half";
  half.test_wcet = 0.5;
  half.action_wcet = 0.5;
  half.kind = TapKind::guaranteed;
  half.period = 2.0;
  half.deadline = 3.0;
  auto boundary = schedulability({half, half});
  if (!(boundary.utilization == 1.0 && boundary.feasible))
    return "utilization exactly 1 must be feasible";

  // post-hoc audit on every fixture: one period plus the pair's execution
  // times plus the action delay never outruns the failure deadline
  for (const char* name : {"micro_m1.json", "micro_m2.json", "micro_m3.json",
                           "flight_fix3_fix4.json", "flight_gear.json",
                           "tornado_overload.json"}) {
    auto kb = load_knowledge_base_file(fixture(name));
    auto r = plan_and_schedule(kb);
    for (const auto& tap : r.schedule.taps) {
      if (tap.kind != TapKind::guaranteed) continue;
      for (const auto& sv : tap.guarded_states) {
        auto m = matching_transitions(sv, kb);
        double min_eps = kInf;
        if (m.temporal_set)
          for (const auto& mem : m.temporal_set->members)
            if (mem.is_failure)
              min_eps = std::min(min_eps, epsilon_time(mem.curve, 0.01));
        if (*tap.period + tap.wcet() + tap.t_delay > min_eps + 1e-9) {
          std::ostringstream os;
          os << name << ": tap " << tap.name << " audit failed";
          return os.str();
        }
      }
    }
  }
  return "";
}

std::string criterion_mc_guarantee() {
  auto kb = load_knowledge_base_file(fixture("micro_m1.json"));
  auto r = plan_and_schedule(kb);
  const std::size_t n = 10000;

  std::size_t ttf_visits = 0;
  auto count_visits = [&](std::size_t, const TrialOutcome& o) {
    for (const auto& step : o.trace) {
      const TransitionSet* set = oracle_match(step.state, kb);
      if (set == nullptr) continue;
      for (const auto& m : set->members)
        if (m.is_failure) {
          ++ttf_visits;
          break;
        }
    }
  };
  auto guarded = estimate(r.graph, r.schedule, kb, n, 200.0, 2024, {}, count_visits);
  double mean_visits = static_cast<double>(ttf_visits) / static_cast<double>(n);
  double bound = 0.01 * mean_visits;
  if (guarded.failure.frequency > bound + 4.0 * binom_sigma(bound, n)) {
    std::ostringstream os;
    os << "guarded failure frequency " << guarded.failure.frequency
       << " above bound " << bound;
    return os.str();
  }

  TapSchedule unguarded = r.schedule;
  unguarded.taps.clear();
  auto exposed = estimate(r.graph, unguarded, kb, n, 200.0, 2024);
  if (std::abs(exposed.failure.frequency - 0.5) > 4.0 * binom_sigma(0.5, n)) {
    std::ostringstream os;
    os << "unguarded failure frequency " << exposed.failure.frequency
       << " not within 4 sigma of the 0.5 asymptote";
    return os.str();
  }
  return "";
}

std::string criterion_underestimation() {
  struct Case {
    const char* name;
    double horizon;  // 0: schedule default
  };
  for (const Case c : {Case{"micro_m1.json", 0.0}, Case{"micro_m2.json", 0.0},
                       Case{"micro_m3.json", 5000.0},
                       Case{"flight_fix3_fix4.json", 0.0},
                       Case{"flight_gear.json", 0.0},
                       Case{"tornado_overload.json", 0.0}}) {
    auto kb = load_knowledge_base_file(fixture(c.name));
    auto r = plan_and_schedule(kb);
    double horizon = c.horizon > 0.0 ? c.horizon : default_horizon(r.schedule);
    const std::size_t n = 10000;
    auto report = estimate(r.graph, r.schedule, kb, n, horizon, 424242);
    double sigma = binom_sigma(report.goal.frequency, n);
    if (report.goal.frequency < report.planner_goal_prob - 4.0 * sigma) {
      std::ostringstream os;
      os << c.name << ": simulated goal frequency " << report.goal.frequency
         << " fell below the planner's " << report.planner_goal_prob;
      return os.str();
    }
  }
  return "";
}

// synthetic chain domain sized by (stages, tags, pads, actions)
KnowledgeBase synth_domain(int stages, int tags, int pads, int actions) {
  KnowledgeBase kb;
  Feature stage;
  stage.name = "STAGE";
  for (int i = 0; i <= stages; ++i) stage.values.push_back("s" + std::to_string(i));
  kb.features.push_back(stage);
  Feature tag;
  tag.name = "TAG";
  for (int j = 0; j < std::max(2, tags); ++j)
    tag.values.push_back("t" + std::to_string(j));
  kb.features.push_back(tag);
  for (int p = 0; p < pads; ++p) {
    Feature f;
    f.name = "PAD" + std::to_string(p);
    f.values = {"0", "1"};
    kb.features.push_back(f);
  }

  StateVector init;
  init.values.assign(kb.features.size(), 0);
  kb.initial_states.push_back(init);

  kb.goal.clauses.emplace_back(0, static_cast<ValueId>(stages));
  for (int p = 0; p < pads; ++p)
    kb.goal.clauses.emplace_back(static_cast<FeatureId>(2 + p), 0);

  for (int a = 0; a < actions; ++a) {
    ActionTransition act;
    act.name = "act" + std::to_string(a);
    // realistic preconditions span the feature vector, so candidate matching
    // and scoring carry the nf*na term
    for (int p = 0; p < pads; ++p)
      act.pre.clauses.emplace_back(static_cast<FeatureId>(2 + p), 0);
    act.post.clauses.emplace_back(static_cast<FeatureId>(2 + (a % std::max(1, pads))),
                                  1);
    act.t_delay = 0.5;
    act.test_wcet = 0.01;
    act.action_wcet = 0.01;
    kb.actions.push_back(std::move(act));
  }

  const double weight_sum = tags * (tags + 1) / 2.0;
  for (int i = 0; i < stages; ++i) {
    TransitionSet set;
    set.pre.clauses.emplace_back(0, static_cast<ValueId>(i));
    for (int j = 0; j < tags; ++j) {
      TemporalTransition m;
      m.name = "m" + std::to_string(i) + "_" + std::to_string(j);
      m.post.clauses.emplace_back(0, static_cast<ValueId>(i + 1));
      m.post.clauses.emplace_back(1, static_cast<ValueId>(j));
      // distinct asymptotes keep sibling probabilities distinct
      m.curve = TemporalCurve::delayed_exponential(
          0.0, 0.01 + 0.001 * j, 0.9 * (j + 1) / weight_sum);
      set.members.push_back(std::move(m));
    }
    kb.temporal_sets.push_back(std::move(set));
  }
  return kb;
}

// mean per-expansion wall time, accumulated until the sample is stable
double per_expansion_seconds(const KnowledgeBase& kb) {
  using clock = std::chrono::steady_clock;
  PlannerConfig cfg;
  cfg.max_expansions = 1000000;
  double total = 0.0;
  std::size_t expansions = 0;
  plan(kb, cfg);  // warm-up
  while (total < 0.25) {
    auto t0 = clock::now();
    auto g = plan(kb, cfg);
    total += std::chrono::duration<double>(clock::now() - t0).count();
    expansions += g.expansions;
  }
  return total / static_cast<double>(expansions);
}

std::string criterion_complexity() {
  struct Axis {
    const char* name;
    KnowledgeBase base, scaled;
  };
  const Axis axes[] = {
      {"nf", synth_domain(8, 6, 80, 6), synth_domain(8, 6, 800, 6)},
      {"na", synth_domain(8, 2, 64, 30), synth_domain(8, 2, 64, 300)},
      {"nt", synth_domain(6, 12, 32, 2), synth_domain(6, 120, 32, 2)},
  };
  std::ostringstream detail;
  bool ok = true;
  for (const auto& axis : axes) {
    double t1 = per_expansion_seconds(axis.base);
    double t10 = per_expansion_seconds(axis.scaled);
    double slope = std::log10(t10 / t1);
    detail << axis.name << " slope " << slope << "  ";
    ok = ok && slope >= 0.7 && slope <= 1.3;
  }
  if (!ok) return "slope out of [0.7, 1.3]: " + detail.str();
  return "";
}

std::string criterion_determinism() {
  auto kb = load_knowledge_base_file(fixture("flight_fix3_fix4.json"));
  auto r1 = plan_and_schedule(kb);
  auto r2 = plan_and_schedule(kb);
  if (plan_graph_to_json(r1.graph, kb) != plan_graph_to_json(r2.graph, kb))
    return "plan graph JSON differs between runs";
  if (schedule_to_json(r1.schedule, kb) != schedule_to_json(r2.schedule, kb))
    return "schedule JSON differs between runs";

  auto s1 = estimate(r1.graph, r1.schedule, kb, 2000, default_horizon(r1.schedule), 99);
  auto s2 = estimate(r2.graph, r2.schedule, kb, 2000, default_horizon(r2.schedule), 99);
  if (sim_report_to_json(s1) != sim_report_to_json(s2))
    return "seeded simulation reports differ between runs";

  PlannerConfig df;
  df.order = ExpansionOrder::depth_first;
  df.seed_order = 5;
  auto d1 = plan(kb, df);
  auto d2 = plan(kb, df);
  if (plan_graph_to_json(d1, kb) != plan_graph_to_json(d2, kb))
    return "depth-first graph JSON differs between runs";
  return "";
}

struct Criterion {
  int number;
  const char* title;
  double budget_seconds;
  std::function<std::string()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "local probabilities match exhaustive path sums", 1.0,
       criterion_oracle_equivalence},
      {2, "failure-state mass stays within epsilon of its parents", 1.0,
       criterion_failure_bound},
      {3, "probabilistic search takes the direct path, depth-first can wander", 5.0,
       criterion_goal_path_selection},
      {4, "raising P1 above the gear-up asymptote halves expansion", 5.0,
       criterion_improbable_removal},
      {5, "overload escalates P1 once and reschedules feasibly", 5.0,
       criterion_escalation},
      {6, "feasibility is exactly utilization <= 1, deadlines audited", 5.0,
       criterion_schedulability},
      {7, "Monte Carlo failure frequency honors the epsilon guarantee", 30.0,
       criterion_mc_guarantee},
      {8, "simulated goal frequency never falls below the planner's estimate", 60.0,
       criterion_underestimation},
      {9, "per-expansion cost scales linearly in nf, na, nt", 60.0,
       criterion_complexity},
      {10, "plans and seeded simulations are byte-identical across runs", 60.0,
       criterion_determinism},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    auto t0 = std::chrono::steady_clock::now();
    std::string detail;
    try {
      detail = c.run();
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    bool ok = detail.empty() && elapsed < c.budget_seconds;
    if (detail.empty() && elapsed >= c.budget_seconds) {
      std::ostringstream os;
      os << "over budget: " << elapsed << "s >= " << c.budget_seconds << "s";
      detail = os.str();
    }
    if (!ok) ++failures;
    std::printf("%s  criterion %2d: %s (%.2fs)%s%s\n", ok ? "PASS" : "FAIL",
                c.number, c.title, elapsed, detail.empty() ? "" : " -- ",
                detail.c_str());
  }
  return failures == 0 ? 0 : 1;
}
