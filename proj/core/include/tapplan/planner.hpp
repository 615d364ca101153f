#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "tapplan/kb.hpp"
#include "tapplan/probability.hpp"

namespace tapplan {

using StateId = std::uint32_t;
using EdgeId = std::uint32_t;

enum class StateStatus { unexpanded, expanded, removed };
enum class StateClass { unknown, goal, goal_reaching, deadend, failure };

enum class ExpansionOrder { probabilistic, depth_first };

struct PlannerConfig {
  double epsilon = 0.01;        // tolerated residual failure probability
  double initial_p1 = 0.0;      // removal threshold (states below are pruned)
  std::size_t max_expansions = 100000;
  double goal_weight = 1.0;     // score weight per newly satisfied goal clause
  double ttf_penalty = 0.5;     // score penalty when the successor has a TTF
  ExpansionOrder order = ExpansionOrder::probabilistic;
  std::uint64_t seed_order = 0;  // shuffles expansion order in depth_first mode
};

struct PlannedState {
  StateVector vector;
  double prob = 0.0;
  StateStatus status = StateStatus::unexpanded;
  StateClass cls = StateClass::unknown;
  int chosen_action = -1;  // index into kb.actions, -1 = none
  ActionKind action_kind = ActionKind::none;
  double discarded_mass = 0.0;  // mass dropped on merges into this expanded state
  std::optional<double> critical_time;  // set when expanded
  std::optional<StateId> discovery_parent;
  std::optional<std::size_t> expansion_index;
};

struct Edge {
  StateId from = 0;
  StateId to = 0;
  std::string via;  // transition name
  bool is_action = false;
  double fraction = 0.0;  // offspring share of the parent at its critical time
};

struct PlanGraph {
  std::vector<PlannedState> states;
  std::vector<Edge> edges;
  std::vector<std::vector<EdgeId>> out_edges;
  std::vector<std::vector<EdgeId>> in_edges;
  std::vector<StateId> initial_ids;
  double initial_prior = 1.0;  // uniform prior assigned to each initial state

  double p1 = 0.0;  // current removal threshold
  double p2 = 0.0;  // minimum state probability along the goal path
  std::optional<StateId> first_goal;
  std::vector<StateId> goal_path;      // initial -> ... -> goal
  double goal_path_probability = 0.0;  // prior * product of edge fractions

  std::size_t expansions = 0;
  double total_discarded_mass = 0.0;
  std::size_t clamp_count = 0;  // merges clamped at probability 1
  std::size_t deadend_by_necessity = 0;  // deadends with no applicable action
  std::size_t deadend_by_choice = 0;

  std::unordered_map<StateVector, StateId, StateVectorHash> index;

  std::optional<StateId> find(const StateVector& v) const {
    auto it = index.find(v);
    if (it == index.end()) return std::nullopt;
    return it->second;
  }
};

struct ActionChoice {
  const ActionTransition* action = nullptr;
  int index = -1;
  ActionKind kind = ActionKind::none;
};

// Scores applicable actions by goal clauses newly satisfied minus a penalty
// for successors that carry a temporal transition to failure; ties break by
// ascending action name. When the state's temporal set contains a TTF whose
// curve reaches epsilon, the choice is restricted to actions whose t_delay
// beats the failure deadline and the result is preemptive (throws
// UnguardableStateError if none qualifies). A failure transition that never
// accumulates epsilon needs no guard: its asymptotic mass already satisfies
// the residual bound. Otherwise the best positive-scoring action is returned,
// or none; with goal_directed false non-TTF states always get none.
ActionChoice select_action(const StateVector& state, const KnowledgeBase& kb,
                           const PlannerConfig& cfg, bool goal_directed = true);

struct ExpansionRecord {
  StateId state = 0;
  int action = -1;
  ActionKind kind = ActionKind::none;
  double critical_time = 0.0;
  std::vector<OffspringContribution> contributions;
};

// Incremental best-first (or depth-first) state expansion. Drives one
// planning cycle over a validated knowledge base; the result graph is
// immutable and shareable afterwards.
class Planner {
public:
  Planner(const KnowledgeBase& kb, PlannerConfig cfg);

  bool frontier_empty() const { return unexpanded_count_ == 0; }
  bool goal_found() const { return graph_.first_goal.has_value(); }

  // Pops the next state per the configured order, selects its action,
  // computes the critical time, and merges the offspring contributions.
  // Throws PlanningError on an empty frontier and UnguardableStateError
  // when a TTF state cannot be guarded.
  ExpansionRecord expand_one();

  // Runs expansion to completion, extracts the goal path, classifies
  // states, and returns the finished graph.
  PlanGraph run();

  const PlanGraph& graph() const { return graph_; }
  const KnowledgeBase& kb() const { return kb_; }

private:
  StateId pop_next();
  StateId intern(const StateVector& v);
  void merge_offspring(StateId parent, const OffspringContribution& c);
  void frontier_insert(StateId id);
  void frontier_erase(StateId id, double old_prob);
  void note_goal_candidate(StateId id);
  void finalize_goal_path();

  const KnowledgeBase& kb_;
  PlannerConfig cfg_;
  PlanGraph graph_;

  struct FrontierKey {
    double prob;
    StateVector vec;
    StateId id;
    bool operator<(const FrontierKey& o) const {
      if (prob != o.prob) return prob > o.prob;  // highest probability first
      return vec < o.vec;                        // deterministic tie-break
    }
  };
  std::set<FrontierKey> frontier_;
  std::vector<StateId> stack_;    // depth_first order
  std::vector<StateId> staged_;   // offspring discovered by the current expansion
  std::mt19937_64 order_rng_;
  std::size_t unexpanded_count_ = 0;

  // distinct actions selected so far, for the non-preemptive average delay
  std::set<int> planned_actions_;
  double planned_test_wcet_ = 0.0;
  double planned_action_wcet_ = 0.0;
};

// Full planning cycle: uniform prior over initial states, expansion until the
// frontier drains (goal-directed until the first goal state is discovered,
// safety-only afterwards), goal-path extraction, classification. Throws
// PlanningError when no goal state is reachable above P1 or the expansion
// budget is exhausted, UnguardableStateError for unguardable states above P1.
PlanGraph plan(const KnowledgeBase& kb, const PlannerConfig& cfg = {});

// Finalizes state classes: goal (satisfies the goal condition), goal_reaching
// (a path of non-removed states leads to a goal state), deadend (expanded,
// safe, no such path). Failure and removed markings are preserved. Also
// refreshes the deadend-by-necessity/by-choice counters.
void classify_states(PlanGraph& graph, const KnowledgeBase& kb);

// Marks every non-failure state with prob < new_p1 removed, then removes
// states no longer reachable from a surviving initial state. Returns the
// number of newly removed states. Used by the scheduler's P1 escalation.
std::size_t apply_removal_threshold(PlanGraph& graph, double new_p1);

}  // namespace tapplan
