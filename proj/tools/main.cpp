// Command-line front end: validate knowledge bases, run plan/schedule cycles,
// Monte Carlo simulations, and DOT exports.

#include <fstream>
#include <iomanip>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "tapplan/errors.hpp"
#include "tapplan/export.hpp"
#include "tapplan/kb.hpp"
#include "tapplan/planner.hpp"
#include "tapplan/scheduler.hpp"
#include "tapplan/simulator.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;  // validation / planning / scheduling failure
constexpr int kExitUsage = 2;

void emit_error(const std::string& type, const std::string& message) {
  nlohmann::ordered_json j;
  j["error"] = {{"type", type}, {"message", message}};
  std::cout << j.dump(2) << "\n";
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
}

struct PlannerFlags {
  double epsilon = 0.01;
  double p1 = 0.0;
  std::size_t max_expansions = 100000;
  std::string order = "probabilistic";
  std::uint64_t seed_order = 0;

  void attach(CLI::App* cmd) {
    cmd->add_option("--epsilon", epsilon,
                    "tolerated residual failure probability (default 0.01)")
        ->check(CLI::Range(1e-12, 0.999999));
    cmd->add_option("--p1", p1, "initial removal threshold P1 (default 0)")
        ->check(CLI::Range(0.0, 0.999999));
    cmd->add_option("--max-expansions", max_expansions,
                    "expansion budget (default 100000)");
    cmd->add_option("--order", order, "expansion order (default probabilistic)")
        ->check(CLI::IsMember({"probabilistic", "depth_first"}));
    cmd->add_option("--seed-order", seed_order,
                    "shuffle seed for depth_first expansion order");
  }

  tapplan::PlannerConfig config() const {
    tapplan::PlannerConfig cfg;
    cfg.epsilon = epsilon;
    cfg.initial_p1 = p1;
    cfg.max_expansions = max_expansions;
    cfg.order = order == "depth_first" ? tapplan::ExpansionOrder::depth_first
                                       : tapplan::ExpansionOrder::probabilistic;
    cfg.seed_order = seed_order;
    return cfg;
  }
};

void print_plan_summary(const tapplan::PlanAndScheduleResult& r) {
  const auto& g = r.graph;
  std::size_t expanded = 0, removed = 0, failures = 0, deadends = 0;
  for (const auto& s : g.states) {
    if (s.status == tapplan::StateStatus::removed) ++removed;
    if (s.status == tapplan::StateStatus::expanded) ++expanded;
    if (s.cls == tapplan::StateClass::failure) ++failures;
    if (s.cls == tapplan::StateClass::deadend) ++deadends;
  }
  std::cout << "states expanded        " << g.expansions << "\n"
            << "states total           " << g.states.size() << " (removed " << removed
            << ", failure " << failures << ", deadend " << deadends << ")\n"
            << "goal path length       " << g.goal_path.size() << "\n"
            << "goal path probability  " << g.goal_path_probability << "\n"
            << "P1 / P2                " << g.p1 << " / " << g.p2 << "\n"
            << "utilization            " << r.schedule.utilization << "\n"
            << "feasible               " << (r.schedule.feasible ? "yes" : "no") << "\n"
            << "escalations            " << r.schedule.escalations.size() << "\n";
  for (const auto& e : r.schedule.escalations)
    std::cout << "  P1 -> " << e.p1 << " removed " << e.states_removed << " states\n";
}

int run_dispatch(int argc, char** argv) {
  CLI::App app{"temporally-dependent probabilistic planner with deadline-driven "
               "TAP scheduling and Monte Carlo validation"};
  app.require_subcommand(1);

  std::string kb_path;

  auto* validate = app.add_subcommand("validate", "check a knowledge base document");
  validate->add_option("kb", kb_path, "knowledge base JSON file")->required();

  auto* plan_cmd = app.add_subcommand(
      "plan", "run one plan/schedule cycle and write graph + schedule JSON");
  plan_cmd->add_option("kb", kb_path, "knowledge base JSON file")->required();
  PlannerFlags plan_flags;
  plan_flags.attach(plan_cmd);
  std::string graph_out = "plan_graph.json";
  std::string schedule_out = "tap_schedule.json";
  plan_cmd->add_option("--graph-out", graph_out, "plan graph output path");
  plan_cmd->add_option("--schedule-out", schedule_out, "tap schedule output path");

  auto* sim_cmd = app.add_subcommand(
      "simulate", "plan, schedule, then Monte Carlo validate the plan");
  sim_cmd->add_option("kb", kb_path, "knowledge base JSON file")->required();
  PlannerFlags sim_flags;
  sim_flags.attach(sim_cmd);
  std::size_t trials = 10000;
  std::uint64_t seed = 1;
  double horizon = 0.0;  // 0: use the default derived from the schedule
  double fires_per_cycle = 1.0;
  unsigned threads = 1;
  std::string report_out = "sim_report.json";
  std::string trace_out;
  sim_cmd->add_option("--trials", trials, "number of trials (default 10000)");
  sim_cmd->add_option("--seed", seed, "run seed (default 1)");
  sim_cmd->add_option("--horizon", horizon,
                      "trial cutoff in seconds (default 50 schedule cycles)");
  sim_cmd->add_option("--fires-per-cycle", fires_per_cycle,
                      "best-effort tap firings per schedule cycle (default 1)")
      ->check(CLI::PositiveNumber);
  sim_cmd->add_option("--threads", threads, "worker threads (default 1)");
  sim_cmd->add_option("--report-out", report_out, "simulation report output path");
  sim_cmd->add_option("--trace-out", trace_out,
                      "per-trial trace dump (JSON lines), written when set");

  auto* dot_cmd = app.add_subcommand("export-dot", "plan and write a DOT graph");
  dot_cmd->add_option("kb", kb_path, "knowledge base JSON file")->required();
  PlannerFlags dot_flags;
  dot_flags.attach(dot_cmd);
  std::string dot_out = "plan_graph.dot";
  dot_cmd->add_option("--out", dot_out, "DOT output path");

  auto* compare_cmd = app.add_subcommand(
      "compare", "tabulate probabilistic vs depth-first planning on one base");
  compare_cmd->add_option("kb", kb_path, "knowledge base JSON file")->required();
  PlannerFlags compare_flags;
  compare_flags.attach(compare_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (validate->parsed()) {
      tapplan::KnowledgeBase kb;
      try {
        kb = tapplan::parse_knowledge_base_file(kb_path);
      } catch (const tapplan::ParseError& e) {
        emit_error("parse", e.what());
        return kExitFailure;
      } catch (const tapplan::ReferenceError& e) {
        emit_error("reference", e.what());
        return kExitFailure;
      }
      auto violations = tapplan::validate_knowledge_base(kb);
      for (const auto& v : violations) {
        std::cout << "[" << v.rule << "] " << v.message;
        if (v.witness) std::cout << " witness " << kb.describe(*v.witness);
        std::cout << "\n";
      }
      if (violations.empty()) {
        std::cout << "OK: " << kb.features.size() << " features, "
                  << kb.actions.size() << " actions, " << kb.temporal_sets.size()
                  << " temporal sets\n";
        return kExitOk;
      }
      return kExitFailure;
    }

    if (plan_cmd->parsed()) {
      auto kb = tapplan::load_knowledge_base_file(kb_path);
      auto result = tapplan::plan_and_schedule(kb, plan_flags.config());
      write_file(graph_out, tapplan::plan_graph_to_json(result.graph, kb));
      write_file(schedule_out, tapplan::schedule_to_json(result.schedule, kb));
      print_plan_summary(result);
      return kExitOk;
    }

    if (sim_cmd->parsed()) {
      auto kb = tapplan::load_knowledge_base_file(kb_path);
      auto planned = tapplan::plan_and_schedule(kb, sim_flags.config());
      double h = horizon > 0.0 ? horizon : tapplan::default_horizon(planned.schedule);
      tapplan::SimOptions options;
      options.fires_per_cycle = fires_per_cycle;
      options.threads = threads;

      std::ofstream trace_file;
      std::function<void(std::size_t, const tapplan::TrialOutcome&)> on_trial;
      if (!trace_out.empty()) {
        trace_file.open(trace_out, std::ios::binary);
        if (!trace_file) throw std::runtime_error("cannot write " + trace_out);
        on_trial = [&](std::size_t i, const tapplan::TrialOutcome& o) {
          trace_file << tapplan::trial_to_json_line(i, o, kb) << "\n";
        };
      }

      auto report = tapplan::estimate(planned.graph, planned.schedule, kb, trials, h,
                                      seed, options, on_trial);
      write_file(report_out, tapplan::sim_report_to_json(report));
      std::cout << "trials                 " << report.trials << "\n"
                << "goal frequency         " << report.goal.frequency << " +/- "
                << report.goal.ci_half_width << "\n"
                << "failure frequency      " << report.failure.frequency << "\n"
                << "planner goal prob      " << report.planner_goal_prob << "\n";
      return kExitOk;
    }

    if (dot_cmd->parsed()) {
      auto kb = tapplan::load_knowledge_base_file(kb_path);
      auto graph = tapplan::plan(kb, dot_flags.config());
      write_file(dot_out, tapplan::plan_graph_to_dot(graph, kb));
      std::cout << "wrote " << dot_out << " (" << graph.states.size() << " states)\n";
      return kExitOk;
    }

    if (compare_cmd->parsed()) {
      auto kb = tapplan::load_knowledge_base_file(kb_path);
      auto cfg = compare_flags.config();
      cfg.order = tapplan::ExpansionOrder::probabilistic;
      auto prob = tapplan::plan_and_schedule(kb, cfg);
      cfg.order = tapplan::ExpansionOrder::depth_first;
      auto depth = tapplan::plan_and_schedule(kb, cfg);
      std::cout << std::left << std::setw(16) << "mode" << std::setw(18)
                << "states expanded" << "goal path probability\n";
      std::cout << std::setw(16) << "probabilistic" << std::setw(18)
                << prob.graph.expansions << prob.graph.goal_path_probability << "\n";
      std::cout << std::setw(16) << "depth_first" << std::setw(18)
                << depth.graph.expansions << depth.graph.goal_path_probability
                << "\n";
      return kExitOk;
    }
  } catch (const tapplan::ParseError& e) {
    emit_error("parse", e.what());
    return kExitFailure;
  } catch (const tapplan::ReferenceError& e) {
    emit_error("reference", e.what());
    return kExitFailure;
  } catch (const tapplan::ValidationError& e) {
    emit_error("validation", e.what());
    return kExitFailure;
  } catch (const tapplan::UnguardableStateError& e) {
    emit_error("unguardable", std::string(e.what()) + " at " + e.witness());
    return kExitFailure;
  } catch (const tapplan::PlanningError& e) {
    emit_error("planning", e.what());
    return kExitFailure;
  } catch (const tapplan::SchedulingError& e) {
    emit_error("scheduling", e.what());
    return kExitFailure;
  } catch (const tapplan::SimulationError& e) {
    emit_error("simulation", e.what());
    return kExitFailure;
  } catch (const std::exception& e) {
    emit_error("internal", e.what());
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace

int main(int argc, char** argv) { return run_dispatch(argc, argv); }
