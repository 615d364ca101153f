#include <benchmark/benchmark.h>

#include <string>

#include "tapplan/curve.hpp"
#include "tapplan/kb.hpp"
#include "tapplan/planner.hpp"
#include "tapplan/scheduler.hpp"
#include "tapplan/simulator.hpp"

namespace {

using namespace tapplan;

std::string fixture(const char* name) {
  return std::string(TAPPLAN_FIXTURE_DIR) + "/" + name;
}

void BM_CumProbPiecewise(benchmark::State& state) {
  auto c = TemporalCurve::piecewise(
      {{0, 0}, {10, 0.1}, {30, 0.3}, {60, 0.5}, {120, 0.8}}, 0.8);
  double t = 0.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(cum_prob(c, t));
    t += 0.37;
    if (t > 150.0) t = 0.0;
  }
}
BENCHMARK(BM_CumProbPiecewise);

void BM_CumProbDelayedExp(benchmark::State& state) {
  auto c = TemporalCurve::delayed_exponential(5.0, 0.02, 0.9);
  double t = 0.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(cum_prob(c, t));
    t += 0.37;
    if (t > 150.0) t = 0.0;
  }
}
BENCHMARK(BM_CumProbDelayedExp);

void BM_EpsilonTime(benchmark::State& state) {
  auto c = TemporalCurve::piecewise(
      {{0, 0}, {10, 0.1}, {30, 0.3}, {60, 0.5}, {120, 0.8}}, 0.8);
  double eps = 0.001;
  for (auto _ : state) {
    benchmark::DoNotOptimize(epsilon_time(c, eps));
    eps = eps >= 0.7 ? 0.001 : eps * 1.7;
  }
}
BENCHMARK(BM_EpsilonTime);

void BM_SampleTemporalOutcome(benchmark::State& state) {
  auto kb = load_knowledge_base_file(fixture("flight_fix3_fix4.json"));
  const auto& set = kb.temporal_sets[1];
  RngStream rng(12345);
  for (auto _ : state)
    benchmark::DoNotOptimize(sample_temporal_outcome(set, rng));
}
BENCHMARK(BM_SampleTemporalOutcome);

void BM_PlanFlightFixture(benchmark::State& state) {
  auto kb = load_knowledge_base_file(fixture("flight_fix3_fix4.json"));
  for (auto _ : state) {
    auto g = plan(kb);
    benchmark::DoNotOptimize(g.expansions);
  }
}
BENCHMARK(BM_PlanFlightFixture);

// synthetic chain of `stages` temporal sets, four members each
KnowledgeBase chain_domain(int stages) {
  KnowledgeBase kb;
  Feature stage;
  stage.name = "STAGE";
  for (int i = 0; i <= stages; ++i) stage.values.push_back("s" + std::to_string(i));
  kb.features.push_back(stage);
  Feature tag;
  tag.name = "TAG";
  tag.values = {"t0", "t1", "t2", "t3"};
  kb.features.push_back(tag);

  StateVector init;
  init.values = {0, 0};
  kb.initial_states.push_back(init);
  kb.goal.clauses.emplace_back(0, static_cast<ValueId>(stages));

  for (int i = 0; i < stages; ++i) {
    TransitionSet set;
    set.pre.clauses.emplace_back(0, static_cast<ValueId>(i));
    for (int j = 0; j < 4; ++j) {
      TemporalTransition m;
      m.name = "m" + std::to_string(i) + "_" + std::to_string(j);
      m.post.clauses.emplace_back(0, static_cast<ValueId>(i + 1));
      m.post.clauses.emplace_back(1, static_cast<ValueId>(j));
      m.curve = TemporalCurve::delayed_exponential(0.0, 0.01 + 0.002 * j,
                                                   0.09 * (j + 1));
      set.members.push_back(std::move(m));
    }
    kb.temporal_sets.push_back(std::move(set));
  }
  return kb;
}

void BM_ExpandChain(benchmark::State& state) {
  auto kb = chain_domain(static_cast<int>(state.range(0)));
  std::size_t expansions = 0;
  for (auto _ : state) {
    PlannerConfig cfg;
    auto g = plan(kb, cfg);
    expansions += g.expansions;
  }
  state.SetItemsProcessed(static_cast<int64_t>(expansions));
}
BENCHMARK(BM_ExpandChain)->Arg(8)->Arg(32)->Arg(128);

void BM_RunTrialFlight(benchmark::State& state) {
  auto kb = load_knowledge_base_file(fixture("flight_fix3_fix4.json"));
  auto r = plan_and_schedule(kb);
  double horizon = default_horizon(r.schedule);
  std::uint64_t i = 0;
  for (auto _ : state) {
    RngStream rng = trial_stream(9, i++);
    auto out = run_trial(r.graph, r.schedule, kb, rng, horizon);
    benchmark::DoNotOptimize(out.result);
  }
}
BENCHMARK(BM_RunTrialFlight);

}  // namespace

BENCHMARK_MAIN();
