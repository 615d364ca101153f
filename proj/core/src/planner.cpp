#include "tapplan/planner.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "tapplan/errors.hpp"

namespace tapplan {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

int action_index(const KnowledgeBase& kb, const ActionTransition* a) {
  return static_cast<int>(a - kb.actions.data());
}

ActionChoice select_action_impl(const StateVector& sv, const MatchResult& match,
                                const KnowledgeBase& kb, const PlannerConfig& cfg,
                                bool goal_directed, std::optional<double> min_eps) {
  auto score_of = [&](const ActionTransition& a) {
    StateVector succ = a.post.apply_to(sv);
    int newly = 0;
    for (const auto& [f, v] : kb.goal.clauses)
      if (succ.values[f] == v && sv.values[f] != v) ++newly;
    bool succ_has_ttf = false;
    for (const auto& set : kb.temporal_sets) {
      if (!set.pre.matches(succ)) continue;
      for (const auto& m : set.members)
        if (m.is_failure) succ_has_ttf = true;
      break;  // validated bases have at most one matching set
    }
    return cfg.goal_weight * newly - cfg.ttf_penalty * (succ_has_ttf ? 1.0 : 0.0);
  };

  const ActionTransition* best = nullptr;
  double best_score = -kInf;
  auto consider = [&](const ActionTransition* a, double s) {
    if (best == nullptr || s > best_score ||
        (s == best_score && a->name < best->name))
      best = a, best_score = s;
  };

  if (min_eps) {
    // A TTF threatens this state: a guaranteed action must land before the
    // failure deadline, regardless of goal progress.
    for (const ActionTransition* a : match.actions)
      if (a->t_delay < *min_eps) consider(a, score_of(*a));
    if (best == nullptr)
      throw UnguardableStateError(
          "no applicable action can preempt the temporal transition to failure "
          "(every t_delay reaches or exceeds the failure deadline of " +
              std::to_string(*min_eps) + "s)",
          kb.describe(sv));
    return {best, action_index(kb, best), ActionKind::preemptive};
  }

  if (!goal_directed) return {};
  for (const ActionTransition* a : match.actions) {
    double s = score_of(*a);
    if (s > 0.0) consider(a, s);
  }
  if (best == nullptr) return {};
  return {best, action_index(kb, best), ActionKind::nonpreemptive};
}

}  // namespace

namespace {

// A failure transition whose curve never accumulates epsilon is not a threat:
// its asymptotic mass already satisfies the residual bound, so no guard is
// demanded for it.
std::optional<double> guard_deadline(const MatchResult& match, double epsilon) {
  auto min_eps = min_ttf_epsilon_time(match.temporal_set, epsilon);
  if (min_eps && std::isinf(*min_eps)) return std::nullopt;
  return min_eps;
}

}  // namespace

ActionChoice select_action(const StateVector& state, const KnowledgeBase& kb,
                           const PlannerConfig& cfg, bool goal_directed) {
  MatchResult match = matching_transitions(state, kb);
  return select_action_impl(state, match, kb, cfg, goal_directed,
                            guard_deadline(match, cfg.epsilon));
}

Planner::Planner(const KnowledgeBase& kb, PlannerConfig cfg)
    : kb_(kb), cfg_(cfg), order_rng_(cfg.seed_order) {
  if (kb_.initial_states.empty())
    throw PlanningError("knowledge base has no initial states");
  graph_.p1 = cfg_.initial_p1;
  graph_.initial_prior = 1.0 / static_cast<double>(kb_.initial_states.size());

  std::vector<StateId> batch;
  for (const auto& v : kb_.initial_states) {
    StateId id = intern(v);
    auto& s = graph_.states[id];
    s.prob = graph_.initial_prior;
    graph_.initial_ids.push_back(id);
    if (s.prob < graph_.p1) {
      s.status = StateStatus::removed;
      continue;
    }
    frontier_insert(id);
    ++unexpanded_count_;
    batch.push_back(id);
    note_goal_candidate(id);
  }
  if (cfg_.order == ExpansionOrder::depth_first) {
    std::shuffle(batch.begin(), batch.end(), order_rng_);
    stack_.insert(stack_.end(), batch.begin(), batch.end());
  }
}

StateId Planner::intern(const StateVector& v) {
  if (auto found = graph_.find(v)) return *found;
  StateId id = static_cast<StateId>(graph_.states.size());
  PlannedState s;
  s.vector = v;
  graph_.states.push_back(std::move(s));
  graph_.out_edges.emplace_back();
  graph_.in_edges.emplace_back();
  graph_.index.emplace(v, id);
  return id;
}

void Planner::frontier_insert(StateId id) {
  const auto& s = graph_.states[id];
  frontier_.insert({s.prob, s.vector, id});
}

void Planner::frontier_erase(StateId id, double old_prob) {
  frontier_.erase({old_prob, graph_.states[id].vector, id});
}

void Planner::note_goal_candidate(StateId id) {
  if (graph_.first_goal) return;
  const auto& s = graph_.states[id];
  if (s.cls == StateClass::failure || s.status == StateStatus::removed) return;
  if (kb_.goal.matches(s.vector)) graph_.first_goal = id;
}

StateId Planner::pop_next() {
  if (cfg_.order == ExpansionOrder::depth_first) {
    while (!stack_.empty()) {
      StateId id = stack_.back();
      stack_.pop_back();
      const auto& s = graph_.states[id];
      if (s.status == StateStatus::unexpanded && s.cls != StateClass::failure) {
        frontier_erase(id, s.prob);
        return id;
      }
    }
    // stale stack entries were skipped; recover from the frontier
  }
  if (frontier_.empty())
    throw std::logic_error("frontier bookkeeping out of sync with the count");
  auto it = frontier_.begin();
  StateId id = it->id;
  frontier_.erase(it);
  return id;
}

ExpansionRecord Planner::expand_one() {
  if (unexpanded_count_ == 0)
    throw PlanningError("expand_one: the frontier is empty");
  StateId sid = pop_next();
  --unexpanded_count_;

  {
    auto& s = graph_.states[sid];
    s.status = StateStatus::expanded;
    s.expansion_index = graph_.expansions;
  }
  ++graph_.expansions;

  const StateVector sv = graph_.states[sid].vector;
  const double sprob = graph_.states[sid].prob;

  MatchResult match = matching_transitions(sv, kb_);
  auto min_eps = guard_deadline(match, cfg_.epsilon);
  ActionChoice choice =
      select_action_impl(sv, match, kb_, cfg_, !goal_found(), min_eps);

  double t;
  if (choice.kind == ActionKind::preemptive) {
    t = critical_time(CriticalTimeCase::preemptive, min_eps, std::nullopt);
  } else if (choice.kind == ActionKind::nonpreemptive) {
    CriticalTimeContext ctx;
    ctx.total_test_wcet = planned_test_wcet_;
    ctx.total_action_wcet = planned_action_wcet_;
    ctx.action_count = planned_actions_.size();
    if (!planned_actions_.count(choice.index)) {
      // the candidate counts among the available actions
      ctx.total_test_wcet += choice.action->test_wcet;
      ctx.total_action_wcet += choice.action->action_wcet;
      ctx.action_count += 1;
    }
    ctx.t_delay = choice.action->t_delay;
    t = critical_time(CriticalTimeCase::nonpreemptive, std::nullopt, ctx);
  } else {
    t = critical_time(CriticalTimeCase::no_action, std::nullopt, std::nullopt);
  }

  {
    auto& s = graph_.states[sid];
    s.chosen_action = choice.index;
    s.action_kind = choice.kind;
    s.critical_time = t;
  }

  static const std::vector<TemporalTransition> kNoTemporals;
  const auto& temporals =
      match.temporal_set ? match.temporal_set->members : kNoTemporals;

  // Zero-probability states still expand so their failure transitions get
  // guards; fractions are recorded but no mass flows.
  const double effective_parent = sprob > 0.0 ? sprob : 1.0;
  auto contributions = offspring_probabilities(sv, effective_parent, temporals,
                                               choice.action, choice.kind, t);
  if (sprob <= 0.0)
    for (auto& c : contributions) c.mass = 0.0;

  staged_.clear();
  for (const auto& c : contributions) merge_offspring(sid, c);

  if (choice.index >= 0 && planned_actions_.insert(choice.index).second) {
    planned_test_wcet_ += choice.action->test_wcet;
    planned_action_wcet_ += choice.action->action_wcet;
  }

  if (cfg_.order == ExpansionOrder::depth_first) {
    std::shuffle(staged_.begin(), staged_.end(), order_rng_);
    stack_.insert(stack_.end(), staged_.begin(), staged_.end());
  }

  ExpansionRecord rec;
  rec.state = sid;
  rec.action = choice.index;
  rec.kind = choice.kind;
  rec.critical_time = t;
  rec.contributions = std::move(contributions);
  return rec;
}

void Planner::merge_offspring(StateId parent, const OffspringContribution& c) {
  const bool existed = graph_.find(c.target).has_value();
  StateId tid = intern(c.target);

  EdgeId eid = static_cast<EdgeId>(graph_.edges.size());
  graph_.edges.push_back({parent, tid, c.via, c.from_action, c.fraction});
  graph_.out_edges[parent].push_back(eid);
  graph_.in_edges[tid].push_back(eid);

  auto& tgt = graph_.states[tid];
  const double old_prob = tgt.prob;
  const bool already_expanded = tgt.status == StateStatus::expanded;
  MergeResult mr = merge_contribution(
      existed ? std::optional<double>(old_prob) : std::nullopt, already_expanded,
      c.mass);
  if (mr.clamped) ++graph_.clamp_count;

  if (!existed) {
    tgt.discovery_parent = parent;
    tgt.prob = mr.value;
    if (c.to_failure) {
      tgt.cls = StateClass::failure;  // never enters the frontier
      return;
    }
    if (tgt.prob < graph_.p1) {
      tgt.status = StateStatus::removed;
      return;
    }
    frontier_insert(tid);
    ++unexpanded_count_;
    staged_.push_back(tid);
    note_goal_candidate(tid);
    return;
  }

  if (c.to_failure && tgt.cls != StateClass::failure) {
    if (already_expanded)
      throw PlanningError(
          "a temporal transition to failure targets " + kb_.describe(tgt.vector) +
          ", which was already expanded as a normal state");
    if (tgt.status == StateStatus::unexpanded) {
      frontier_erase(tid, old_prob);
      --unexpanded_count_;
    }
    tgt.cls = StateClass::failure;
  }

  if (already_expanded) {
    // contributions into an already-expanded state are not propagated; the
    // dropped mass is tracked so reports can bound the underestimation
    tgt.discarded_mass += mr.discarded;
    graph_.total_discarded_mass += mr.discarded;
    return;
  }

  if (tgt.cls == StateClass::failure) {
    tgt.prob = mr.value;
    return;
  }

  if (tgt.status == StateStatus::removed) {
    tgt.prob = mr.value;
    if (tgt.prob >= graph_.p1) {
      tgt.status = StateStatus::unexpanded;
      frontier_insert(tid);
      ++unexpanded_count_;
      staged_.push_back(tid);
      note_goal_candidate(tid);
    }
    return;
  }

  // unexpanded, on the frontier: increase-key
  frontier_erase(tid, old_prob);
  tgt.prob = mr.value;
  frontier_insert(tid);
}

PlanGraph Planner::run() {
  while (unexpanded_count_ > 0) {
    if (graph_.expansions >= cfg_.max_expansions) {
      std::ostringstream os;
      os << "expansion budget exhausted (" << cfg_.max_expansions
         << " expansions) with " << unexpanded_count_ << " states still pending";
      throw PlanningError(os.str());
    }
    expand_one();
  }
  if (!graph_.first_goal) {
    std::ostringstream os;
    os << "no goal state reachable above P1 = " << graph_.p1;
    throw PlanningError(os.str());
  }
  finalize_goal_path();
  classify_states(graph_, kb_);
  return std::move(graph_);
}

void Planner::finalize_goal_path() {
  std::vector<StateId> path{*graph_.first_goal};
  while (graph_.states[path.back()].discovery_parent) {
    path.push_back(*graph_.states[path.back()].discovery_parent);
    if (path.size() > graph_.states.size())
      throw std::logic_error("discovery-parent chain contains a cycle");
  }
  std::reverse(path.begin(), path.end());

  double p = graph_.initial_prior;
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    const Edge* best = nullptr;
    for (EdgeId eid : graph_.out_edges[path[i]]) {
      const Edge& e = graph_.edges[eid];
      if (e.to != path[i + 1]) continue;
      if (best == nullptr || e.fraction > best->fraction ||
          (e.fraction == best->fraction &&
           std::make_pair(!e.is_action, e.via) <
               std::make_pair(!best->is_action, best->via)))
        best = &e;
    }
    if (best == nullptr)
      throw std::logic_error("goal path misses an edge between discovered states");
    p *= best->fraction;
  }

  double min_prob = kInf;
  for (StateId id : path) min_prob = std::min(min_prob, graph_.states[id].prob);

  graph_.goal_path = std::move(path);
  graph_.goal_path_probability = p;
  graph_.p2 = min_prob;
}

PlanGraph plan(const KnowledgeBase& kb, const PlannerConfig& cfg) {
  auto violations = validate_knowledge_base(kb);
  if (!violations.empty()) {
    std::ostringstream os;
    os << "cannot plan over an invalid knowledge base (" << violations.size()
       << " violations; run validation for details)";
    throw ValidationError(os.str());
  }
  Planner planner(kb, cfg);
  return planner.run();
}

void classify_states(PlanGraph& graph, const KnowledgeBase& kb) {
  for (auto& s : graph.states)
    if (s.cls != StateClass::failure) s.cls = StateClass::unknown;

  std::deque<StateId> queue;
  std::vector<char> seen(graph.states.size(), 0);
  for (StateId id = 0; id < graph.states.size(); ++id) {
    auto& s = graph.states[id];
    if (s.status == StateStatus::removed || s.cls == StateClass::failure) continue;
    if (kb.goal.matches(s.vector)) {
      s.cls = StateClass::goal;
      seen[id] = 1;
      queue.push_back(id);
    }
  }

  while (!queue.empty()) {
    StateId cur = queue.front();
    queue.pop_front();
    for (EdgeId eid : graph.in_edges[cur]) {
      StateId from = graph.edges[eid].from;
      if (seen[from]) continue;
      auto& s = graph.states[from];
      if (s.status == StateStatus::removed || s.cls == StateClass::failure) continue;
      seen[from] = 1;
      if (s.cls == StateClass::unknown) s.cls = StateClass::goal_reaching;
      queue.push_back(from);
    }
  }

  graph.deadend_by_necessity = 0;
  graph.deadend_by_choice = 0;
  for (auto& s : graph.states) {
    if (s.status == StateStatus::expanded && s.cls == StateClass::unknown) {
      s.cls = StateClass::deadend;
      if (matching_transitions(s.vector, kb).actions.empty())
        ++graph.deadend_by_necessity;
      else
        ++graph.deadend_by_choice;
    }
  }
}

std::size_t apply_removal_threshold(PlanGraph& graph, double new_p1) {
  std::size_t removed = 0;
  for (auto& s : graph.states) {
    if (s.status == StateStatus::removed || s.cls == StateClass::failure) continue;
    if (s.prob < new_p1) {
      s.status = StateStatus::removed;
      ++removed;
    }
  }

  // prune everything no longer reachable from a surviving initial state
  std::vector<char> reach(graph.states.size(), 0);
  std::deque<StateId> queue;
  for (StateId id : graph.initial_ids) {
    if (graph.states[id].status == StateStatus::removed) continue;
    reach[id] = 1;
    queue.push_back(id);
  }
  while (!queue.empty()) {
    StateId cur = queue.front();
    queue.pop_front();
    for (EdgeId eid : graph.out_edges[cur]) {
      StateId to = graph.edges[eid].to;
      if (reach[to] || graph.states[to].status == StateStatus::removed) continue;
      reach[to] = 1;
      queue.push_back(to);
    }
  }
  for (StateId id = 0; id < graph.states.size(); ++id) {
    auto& s = graph.states[id];
    if (s.status != StateStatus::removed && !reach[id]) {
      s.status = StateStatus::removed;
      ++removed;
    }
  }

  graph.p1 = new_p1;
  return removed;
}

}  // namespace tapplan
