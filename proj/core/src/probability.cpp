#include "tapplan/probability.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "tapplan/errors.hpp"

namespace tapplan {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kProbTol = 1e-9;
}

double critical_time(CriticalTimeCase c, std::optional<double> ttf_deadline,
                     const std::optional<CriticalTimeContext>& ctx) {
  switch (c) {
    case CriticalTimeCase::preemptive:
      if (!ttf_deadline)
        throw std::invalid_argument("critical_time: preemptive case needs a deadline");
      return *ttf_deadline;
    case CriticalTimeCase::nonpreemptive: {
      if (!ctx)
        throw std::invalid_argument("critical_time: nonpreemptive case needs a context");
      return ctx->total_test_wcet * static_cast<double>(ctx->action_count) / 8.0 +
             ctx->total_action_wcet / 4.0 + ctx->t_delay;
    }
    case CriticalTimeCase::no_action:
      return kInf;
  }
  throw std::invalid_argument("critical_time: unknown case");
}

std::vector<OffspringContribution> offspring_probabilities(
    const StateVector& parent_vector, double parent_prob,
    const std::vector<TemporalTransition>& temporals,
    const ActionTransition* action, ActionKind action_kind, double t) {
  if (!(parent_prob > 0.0 && parent_prob <= 1.0 + kProbTol))
    throw std::invalid_argument("offspring_probabilities: parent probability must be in (0,1]");

  std::vector<OffspringContribution> out;
  out.reserve(temporals.size() + 1);

  double temporal_sum = 0.0;
  for (const auto& m : temporals) {
    OffspringContribution c;
    c.target = m.post.apply_to(parent_vector);
    c.via = m.name;
    c.to_failure = m.is_failure;
    c.fraction = cum_prob(m.curve, t);
    c.mass = c.fraction * parent_prob;
    temporal_sum += c.fraction;
    out.push_back(std::move(c));
  }
  if (temporal_sum > 1.0 + kProbTol)
    throw ValidationError(
        "temporal cumulative probabilities sum to more than 1 at the critical time; "
        "the knowledge base is inconsistent");

  if (action != nullptr && action_kind != ActionKind::none) {
    double p = 1.0 - temporal_sum;
    if (p < 0.0) p = 0.0;  // only rounding can get here, given the sum check
    OffspringContribution c;
    c.target = action->post.apply_to(parent_vector);
    c.via = action->name;
    c.from_action = true;
    c.fraction = (action_kind == ActionKind::preemptive) ? p : p / 2.0;
    c.mass = c.fraction * parent_prob;
    out.push_back(std::move(c));
  }
  return out;
}

MergeResult merge_contribution(std::optional<double> existing_prob,
                               bool already_expanded, double new_mass) {
  MergeResult r;
  if (!existing_prob) {
    r.value = new_mass;
  } else if (already_expanded) {
    r.value = *existing_prob;
    r.discarded = new_mass;
  } else {
    r.value = *existing_prob + new_mass;
  }
  if (r.value > 1.0) {
    r.clamped = r.value > 1.0 + kProbTol;
    r.value = 1.0;
  }
  return r;
}

std::optional<double> min_ttf_epsilon_time(const TransitionSet* set, double epsilon) {
  if (set == nullptr) return std::nullopt;
  std::optional<double> best;
  for (const auto& m : set->members) {
    if (!m.is_failure) continue;
    double t = epsilon_time(m.curve, epsilon);
    if (!best || t < *best) best = t;
  }
  return best;
}

}  // namespace tapplan
