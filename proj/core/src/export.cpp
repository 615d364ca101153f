#include "tapplan/export.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <tuple>

#include "json.hpp"

namespace tapplan {

using nlohmann::ordered_json;

namespace {

const char* status_name(StateStatus s) {
  switch (s) {
    case StateStatus::unexpanded: return "unexpanded";
    case StateStatus::expanded: return "expanded";
    case StateStatus::removed: return "removed";
  }
  return "?";
}

const char* class_name(StateClass c) {
  switch (c) {
    case StateClass::unknown: return "unknown";
    case StateClass::goal: return "goal";
    case StateClass::goal_reaching: return "goal_reaching";
    case StateClass::deadend: return "deadend";
    case StateClass::failure: return "failure";
  }
  return "?";
}

const char* kind_name(ActionKind k) {
  switch (k) {
    case ActionKind::none: return "none";
    case ActionKind::preemptive: return "preemptive";
    case ActionKind::nonpreemptive: return "nonpreemptive";
  }
  return "?";
}

ordered_json number_or_inf(double v) {
  if (std::isinf(v)) return "inf";
  return v;
}

ordered_json vector_json(const StateVector& s, const KnowledgeBase& kb) {
  ordered_json j = ordered_json::object();
  for (std::size_t f = 0; f < kb.features.size(); ++f)
    j[kb.features[f].name] = kb.features[f].values[s.values[f]];
  return j;
}

ordered_json condition_json(const Condition& c, const KnowledgeBase& kb) {
  ordered_json j = ordered_json::object();
  for (const auto& [f, v] : c.clauses)
    j[kb.features[f].name] = kb.features[f].values[v];
  return j;
}

// stable presentation order: states sorted by vector
std::vector<StateId> sorted_state_order(const PlanGraph& g) {
  std::vector<StateId> order(g.states.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](StateId a, StateId b) {
    return g.states[a].vector < g.states[b].vector;
  });
  return order;
}

ordered_json outcome_stats_json(const OutcomeStats& s) {
  return ordered_json{{"count", s.count},
                      {"frequency", s.frequency},
                      {"ci_half_width", s.ci_half_width}};
}

}  // namespace

std::string plan_graph_to_json(const PlanGraph& graph, const KnowledgeBase& kb) {
  const auto order = sorted_state_order(graph);
  std::vector<std::size_t> pos(graph.states.size());
  for (std::size_t i = 0; i < order.size(); ++i) pos[order[i]] = i;

  ordered_json doc;
  doc["p1"] = graph.p1;
  doc["p2"] = graph.p2;
  doc["goal_path_probability"] = graph.goal_path_probability;
  doc["expansions"] = graph.expansions;
  doc["total_discarded_mass"] = graph.total_discarded_mass;
  doc["clamp_count"] = graph.clamp_count;
  doc["deadend_by_necessity"] = graph.deadend_by_necessity;
  doc["deadend_by_choice"] = graph.deadend_by_choice;

  auto initials = ordered_json::array();
  {
    std::vector<std::size_t> ids;
    for (StateId id : graph.initial_ids) ids.push_back(pos[id]);
    std::sort(ids.begin(), ids.end());
    for (auto i : ids) initials.push_back(i);
  }
  doc["initial_states"] = std::move(initials);

  auto path = ordered_json::array();
  for (StateId id : graph.goal_path) path.push_back(pos[id]);
  doc["goal_path"] = std::move(path);

  auto states = ordered_json::array();
  for (StateId id : order) {
    const auto& s = graph.states[id];
    ordered_json sj;
    sj["vector"] = vector_json(s.vector, kb);
    sj["prob"] = s.prob;
    sj["status"] = status_name(s.status);
    sj["class"] = class_name(s.cls);
    sj["action"] =
        s.chosen_action >= 0 ? ordered_json(kb.actions[s.chosen_action].name)
                             : ordered_json(nullptr);
    sj["action_kind"] = kind_name(s.action_kind);
    sj["critical_time"] = s.critical_time ? number_or_inf(*s.critical_time)
                                          : ordered_json(nullptr);
    sj["discarded_mass"] = s.discarded_mass;
    states.push_back(std::move(sj));
  }
  doc["states"] = std::move(states);

  struct EdgeRow {
    std::size_t from, to;
    const Edge* e;
  };
  std::vector<EdgeRow> rows;
  rows.reserve(graph.edges.size());
  for (const auto& e : graph.edges) rows.push_back({pos[e.from], pos[e.to], &e});
  std::sort(rows.begin(), rows.end(), [](const EdgeRow& a, const EdgeRow& b) {
    return std::tie(a.from, a.to, a.e->via) < std::tie(b.from, b.to, b.e->via);
  });
  auto edges = ordered_json::array();
  for (const auto& r : rows) {
    ordered_json ej;
    ej["from"] = r.from;
    ej["to"] = r.to;
    ej["via"] = r.e->via;
    ej["kind"] = r.e->is_action ? "action" : "temporal";
    ej["fraction"] = r.e->fraction;
    edges.push_back(std::move(ej));
  }
  doc["edges"] = std::move(edges);

  return doc.dump(2) + "\n";
}

std::string schedule_to_json(const TapSchedule& schedule, const KnowledgeBase& kb) {
  ordered_json doc;
  doc["utilization"] = schedule.utilization;
  doc["feasible"] = schedule.feasible;

  auto escalations = ordered_json::array();
  for (const auto& e : schedule.escalations)
    escalations.push_back({{"p1", e.p1},
                           {"states_removed", e.states_removed},
                           {"utilization_before", number_or_inf(e.utilization_before)}});
  doc["escalations"] = std::move(escalations);

  std::vector<const Tap*> order;
  for (const auto& t : schedule.taps) order.push_back(&t);
  std::sort(order.begin(), order.end(), [](const Tap* a, const Tap* b) {
    return std::tie(a->name, a->kind) < std::tie(b->name, b->kind);
  });

  auto taps = ordered_json::array();
  for (const Tap* t : order) {
    ordered_json tj;
    tj["name"] = t->name;
    tj["kind"] = t->kind == TapKind::guaranteed ? "guaranteed" : "best_effort";
    tj["test"] = condition_json(t->test, kb);
    tj["test_wcet"] = t->test_wcet;
    tj["action_wcet"] = t->action_wcet;
    tj["t_delay"] = t->t_delay;
    tj["deadline"] = t->deadline ? ordered_json(*t->deadline) : ordered_json(nullptr);
    tj["period"] = t->period ? ordered_json(*t->period) : ordered_json(nullptr);
    auto guarded = ordered_json::array();
    for (const auto& sv : t->guarded_states) guarded.push_back(vector_json(sv, kb));
    tj["guarded_states"] = std::move(guarded);
    taps.push_back(std::move(tj));
  }
  doc["taps"] = std::move(taps);
  return doc.dump(2) + "\n";
}

std::string sim_report_to_json(const SimReport& report) {
  ordered_json doc;
  doc["trials"] = report.trials;
  doc["seed"] = report.seed;
  doc["horizon"] = report.horizon;
  doc["planner_goal_prob"] = report.planner_goal_prob;
  doc["mean_time_to_goal"] = report.mean_time_to_goal
                                 ? ordered_json(*report.mean_time_to_goal)
                                 : ordered_json(nullptr);
  ordered_json outcomes;
  outcomes["goal"] = outcome_stats_json(report.goal);
  outcomes["failure"] = outcome_stats_json(report.failure);
  outcomes["deadend_stuck"] = outcome_stats_json(report.deadend_stuck);
  outcomes["removed_detected"] = outcome_stats_json(report.removed_detected);
  outcomes["timeout"] = outcome_stats_json(report.timeout);
  doc["outcomes"] = std::move(outcomes);
  return doc.dump(2) + "\n";
}

std::string trial_to_json_line(std::size_t trial_index, const TrialOutcome& outcome,
                               const KnowledgeBase& kb) {
  static const char* kResultNames[] = {"goal", "failure", "deadend_stuck",
                                       "removed_detected", "timeout"};
  ordered_json doc;
  doc["trial"] = trial_index;
  doc["result"] = kResultNames[static_cast<int>(outcome.result)];
  doc["elapsed"] = outcome.elapsed;
  auto steps = ordered_json::array();
  for (const auto& step : outcome.trace) {
    ordered_json sj;
    sj["t"] = step.time;
    sj["via"] = step.via;
    sj["state"] = vector_json(step.state, kb);
    steps.push_back(std::move(sj));
  }
  doc["trace"] = std::move(steps);
  return doc.dump();
}

std::string plan_graph_to_dot(const PlanGraph& graph, const KnowledgeBase& kb) {
  const auto order = sorted_state_order(graph);
  std::vector<std::size_t> pos(graph.states.size());
  for (std::size_t i = 0; i < order.size(); ++i) pos[order[i]] = i;

  std::ostringstream os;
  os << "digraph plan {\n  rankdir=LR;\n  node [shape=ellipse];\n";
  os.precision(6);
  for (std::size_t i = 0; i < order.size(); ++i) {
    const auto& s = graph.states[order[i]];
    os << "  s" << i << " [label=\"" << s.prob << "\\n" << kb.describe(s.vector)
       << "\"";
    if (s.cls == StateClass::failure) os << ", shape=doublecircle";
    if (s.status == StateStatus::removed)
      os << ", style=filled, fillcolor=gray";
    if (s.cls == StateClass::goal) os << ", peripheries=2";
    os << "];\n";
  }

  struct EdgeRow {
    std::size_t from, to;
    const Edge* e;
  };
  std::vector<EdgeRow> rows;
  for (const auto& e : graph.edges) rows.push_back({pos[e.from], pos[e.to], &e});
  std::sort(rows.begin(), rows.end(), [](const EdgeRow& a, const EdgeRow& b) {
    return std::tie(a.from, a.to, a.e->via) < std::tie(b.from, b.to, b.e->via);
  });
  for (const auto& r : rows) {
    os << "  s" << r.from << " -> s" << r.to << " [label=\"" << r.e->via << "\"";
    if (r.e->is_action) os << ", style=bold";
    os << "];\n";
  }
  os << "}\n";
  return os.str();
}

}  // namespace tapplan
