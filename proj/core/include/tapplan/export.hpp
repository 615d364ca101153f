#pragma once

#include <cstddef>
#include <string>

#include "tapplan/kb.hpp"
#include "tapplan/planner.hpp"
#include "tapplan/scheduler.hpp"
#include "tapplan/simulator.hpp"

namespace tapplan {

// All emitters are deterministic: states sort by vector, edges by endpoints,
// so identical inputs produce byte-identical output.

std::string plan_graph_to_json(const PlanGraph& graph, const KnowledgeBase& kb);

std::string schedule_to_json(const TapSchedule& schedule, const KnowledgeBase& kb);

std::string sim_report_to_json(const SimReport& report);

// One JSON line per trial (no trailing newline), for JSONL trace dumps.
std::string trial_to_json_line(std::size_t trial_index, const TrialOutcome& outcome,
                               const KnowledgeBase& kb);

// Graphviz rendering: probability labels above each state, bold arrows for
// actions, plain for temporals, double circles for failure states, grey fill
// for removed ones.
std::string plan_graph_to_dot(const PlanGraph& graph, const KnowledgeBase& kb);

}  // namespace tapplan
