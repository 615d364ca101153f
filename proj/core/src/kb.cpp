#include "tapplan/kb.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "tapplan/errors.hpp"

namespace tapplan {

using nlohmann::ordered_json;

std::optional<FeatureId> KnowledgeBase::feature_id(const std::string& name) const {
  for (std::size_t i = 0; i < features.size(); ++i)
    if (features[i].name == name) return static_cast<FeatureId>(i);
  return std::nullopt;
}

std::optional<ValueId> KnowledgeBase::value_id(FeatureId f, const std::string& value) const {
  const auto& vals = features[f].values;
  for (std::size_t i = 0; i < vals.size(); ++i)
    if (vals[i] == value) return static_cast<ValueId>(i);
  return std::nullopt;
}

std::string KnowledgeBase::describe(const StateVector& s) const {
  std::ostringstream os;
  os << '{';
  for (std::size_t f = 0; f < features.size(); ++f) {
    if (f) os << ", ";
    os << features[f].name << '=' << features[f].values[s.values[f]];
  }
  os << '}';
  return os.str();
}

std::string KnowledgeBase::describe(const Condition& c) const {
  std::ostringstream os;
  os << '{';
  bool first = true;
  for (const auto& [f, v] : c.clauses) {
    if (!first) os << ", ";
    first = false;
    os << features[f].name << '=' << features[f].values[v];
  }
  os << '}';
  return os.str();
}

std::uint64_t KnowledgeBase::state_space_size() const {
  std::uint64_t n = 1;
  for (const auto& f : features) {
    if (f.values.empty()) return 0;
    if (n > std::numeric_limits<std::uint64_t>::max() / 2 / f.values.size())
      return std::numeric_limits<std::uint64_t>::max() / 2;
    n *= f.values.size();
  }
  return n;
}

namespace {

double require_finite_nonneg(const ordered_json& j, const char* key,
                             const std::string& ctx) {
  if (!j.contains(key))
    throw ParseError(ctx + ": missing \"" + key + "\"");
  if (!j.at(key).is_number())
    throw ParseError(ctx + ": \"" + key + "\" must be a number");
  double v = j.at(key).get<double>();
  if (!std::isfinite(v) || v < 0.0)
    throw ParseError(ctx + ": \"" + key + "\" must be finite and >= 0");
  return v;
}

Condition parse_condition(const ordered_json& j, const KnowledgeBase& kb,
                          const std::string& ctx) {
  if (!j.is_object())
    throw ParseError(ctx + ": condition must be a JSON object");
  Condition c;
  for (const auto& [fname, vj] : j.items()) {
    auto f = kb.feature_id(fname);
    if (!f) throw ReferenceError(ctx + ": unknown feature \"" + fname + "\"");
    if (!vj.is_string())
      throw ParseError(ctx + ": value for \"" + fname + "\" must be a string");
    auto v = kb.value_id(*f, vj.get<std::string>());
    if (!v)
      throw ReferenceError(ctx + ": unknown value \"" + vj.get<std::string>() +
                           "\" for feature \"" + fname + "\"");
    c.clauses.emplace_back(*f, *v);
  }
  std::sort(c.clauses.begin(), c.clauses.end());
  for (std::size_t i = 1; i < c.clauses.size(); ++i)
    if (c.clauses[i].first == c.clauses[i - 1].first)
      throw ParseError(ctx + ": feature constrained twice");
  return c;
}

StateVector parse_state(const ordered_json& j, const KnowledgeBase& kb,
                        const std::string& ctx) {
  Condition c = parse_condition(j, kb, ctx);
  if (c.clauses.size() != kb.features.size())
    throw ParseError(ctx + ": state must assign every feature exactly once");
  StateVector s;
  s.values.resize(kb.features.size());
  for (const auto& [f, v] : c.clauses) s.values[f] = v;
  return s;
}

TemporalCurve parse_curve(const ordered_json& j, const std::string& ctx) {
  if (!j.is_object() || !j.contains("kind"))
    throw ParseError(ctx + ": curve must be an object with a \"kind\"");
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "piecewise") {
    if (!j.contains("knots") || !j.at("knots").is_array())
      throw ParseError(ctx + ": piecewise curve needs a \"knots\" array");
    std::vector<std::pair<double, double>> knots;
    for (const auto& k : j.at("knots")) {
      if (!k.is_array() || k.size() != 2)
        throw ParseError(ctx + ": each knot must be a [time, cum] pair");
      knots.emplace_back(k[0].get<double>(), k[1].get<double>());
    }
    double asym = require_finite_nonneg(j, "asymptote", ctx);
    return TemporalCurve::piecewise(std::move(knots), asym);
  }
  if (kind == "delayed_exponential") {
    double t0 = require_finite_nonneg(j, "t0", ctx);
    if (!j.contains("lambda") || !j.at("lambda").is_number())
      throw ParseError(ctx + ": delayed_exponential needs numeric \"lambda\"");
    double lambda = j.at("lambda").get<double>();
    double p_max = require_finite_nonneg(j, "p_max", ctx);
    return TemporalCurve::delayed_exponential(t0, lambda, p_max);
  }
  throw ParseError(ctx + ": unknown curve kind \"" + kind + "\"");
}

ordered_json condition_to_json(const Condition& c, const KnowledgeBase& kb) {
  ordered_json j = ordered_json::object();
  for (const auto& [f, v] : c.clauses)
    j[kb.features[f].name] = kb.features[f].values[v];
  return j;
}

ordered_json state_to_json(const StateVector& s, const KnowledgeBase& kb) {
  ordered_json j = ordered_json::object();
  for (std::size_t f = 0; f < kb.features.size(); ++f)
    j[kb.features[f].name] = kb.features[f].values[s.values[f]];
  return j;
}

ordered_json curve_to_json(const TemporalCurve& c) {
  ordered_json j = ordered_json::object();
  if (const auto* pw = std::get_if<PiecewiseCurve>(&c.repr)) {
    j["kind"] = "piecewise";
    auto knots = ordered_json::array();
    for (const auto& [t, p] : pw->knots) knots.push_back({t, p});
    j["knots"] = std::move(knots);
    j["asymptote"] = pw->asymptote;
  } else {
    const auto& de = std::get<DelayedExponentialCurve>(c.repr);
    j["kind"] = "delayed_exponential";
    j["t0"] = de.t0;
    j["lambda"] = de.lambda;
    j["p_max"] = de.p_max;
  }
  return j;
}

// Two conjunctive preconditions overlap iff no feature is pinned to
// different values by both; exact, and independent of state-space size.
bool conditions_compatible(const Condition& a, const Condition& b) {
  for (const auto& [f, v] : a.clauses) {
    auto other = b.value_of(f);
    if (other && *other != v) return false;
  }
  return true;
}

StateVector merged_witness(const Condition& a, const Condition& b,
                           const KnowledgeBase& kb) {
  StateVector s;
  s.values.assign(kb.features.size(), 0);
  for (const auto& [f, v] : a.clauses) s.values[f] = v;
  for (const auto& [f, v] : b.clauses) s.values[f] = v;
  return s;
}

}  // namespace

KnowledgeBase parse_knowledge_base(const std::string& json_text) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("knowledge base is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("knowledge base must be a JSON object");

  KnowledgeBase kb;
  try {
    if (!doc.contains("features") || !doc.at("features").is_array())
      throw ParseError("missing \"features\" array");
    for (const auto& fj : doc.at("features")) {
      Feature f;
      f.name = fj.at("name").get<std::string>();
      for (const auto& vj : fj.at("values")) f.values.push_back(vj.get<std::string>());
      kb.features.push_back(std::move(f));
    }

    if (!doc.contains("initial_states") || !doc.at("initial_states").is_array())
      throw ParseError("missing \"initial_states\" array");
    for (const auto& sj : doc.at("initial_states"))
      kb.initial_states.push_back(parse_state(sj, kb, "initial_states"));

    kb.goal = parse_condition(doc.value("goal", ordered_json::object()), kb, "goal");

    for (const auto& aj : doc.value("actions", ordered_json::array())) {
      ActionTransition a;
      a.name = aj.at("name").get<std::string>();
      const std::string ctx = "action \"" + a.name + "\"";
      a.pre = parse_condition(aj.value("pre", ordered_json::object()), kb, ctx);
      a.post = parse_condition(aj.at("post"), kb, ctx);
      a.t_delay = require_finite_nonneg(aj, "t_delay", ctx);
      a.test_wcet = require_finite_nonneg(aj, "test_wcet", ctx);
      a.action_wcet = require_finite_nonneg(aj, "action_wcet", ctx);
      kb.actions.push_back(std::move(a));
    }

    for (const auto& tj : doc.value("temporal_sets", ordered_json::array())) {
      TransitionSet set;
      set.pre = parse_condition(tj.value("pre", ordered_json::object()), kb,
                                "temporal set pre");
      if (!tj.contains("members") || !tj.at("members").is_array())
        throw ParseError("temporal set missing \"members\" array");
      for (const auto& mj : tj.at("members")) {
        TemporalTransition m;
        m.name = mj.at("name").get<std::string>();
        const std::string ctx = "temporal transition \"" + m.name + "\"";
        m.post = parse_condition(mj.at("post"), kb, ctx);
        m.curve = parse_curve(mj.at("curve"), ctx);
        m.is_failure = mj.value("is_failure", false);
        set.members.push_back(std::move(m));
      }
      kb.temporal_sets.push_back(std::move(set));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed knowledge base: ") + e.what());
  }
  return kb;
}

KnowledgeBase parse_knowledge_base_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open knowledge base file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_knowledge_base(buf.str());
}

KnowledgeBase load_knowledge_base(const std::string& json_text) {
  KnowledgeBase kb = parse_knowledge_base(json_text);
  auto violations = validate_knowledge_base(kb);
  if (!violations.empty()) {
    std::ostringstream os;
    os << "knowledge base failed validation (" << violations.size() << " violation"
       << (violations.size() == 1 ? "" : "s") << "):";
    for (const auto& v : violations) {
      os << "\n  [" << v.rule << "] " << v.message;
      if (v.witness) os << " witness " << kb.describe(*v.witness);
    }
    throw ValidationError(os.str());
  }
  return kb;
}

KnowledgeBase load_knowledge_base_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open knowledge base file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_knowledge_base(buf.str());
}

std::string save_knowledge_base(const KnowledgeBase& kb) {
  ordered_json doc;
  auto features = ordered_json::array();
  for (const auto& f : kb.features)
    features.push_back({{"name", f.name}, {"values", f.values}});
  doc["features"] = std::move(features);

  auto initials = ordered_json::array();
  for (const auto& s : kb.initial_states) initials.push_back(state_to_json(s, kb));
  doc["initial_states"] = std::move(initials);

  doc["goal"] = condition_to_json(kb.goal, kb);

  auto actions = ordered_json::array();
  for (const auto& a : kb.actions) {
    ordered_json aj;
    aj["name"] = a.name;
    aj["pre"] = condition_to_json(a.pre, kb);
    aj["post"] = condition_to_json(a.post, kb);
    aj["t_delay"] = a.t_delay;
    aj["test_wcet"] = a.test_wcet;
    aj["action_wcet"] = a.action_wcet;
    actions.push_back(std::move(aj));
  }
  doc["actions"] = std::move(actions);

  auto sets = ordered_json::array();
  for (const auto& set : kb.temporal_sets) {
    ordered_json sj;
    sj["pre"] = condition_to_json(set.pre, kb);
    auto members = ordered_json::array();
    for (const auto& m : set.members) {
      ordered_json mj;
      mj["name"] = m.name;
      mj["post"] = condition_to_json(m.post, kb);
      mj["curve"] = curve_to_json(m.curve);
      mj["is_failure"] = m.is_failure;
      members.push_back(std::move(mj));
    }
    sj["members"] = std::move(members);
    sets.push_back(std::move(sj));
  }
  doc["temporal_sets"] = std::move(sets);
  return doc.dump(2) + "\n";
}

std::vector<Violation> validate_knowledge_base(const KnowledgeBase& kb) {
  std::vector<Violation> out;
  auto add = [&](std::string rule, std::string msg,
                 std::optional<StateVector> witness = std::nullopt) {
    out.push_back({std::move(rule), std::move(msg), std::move(witness)});
  };

  if (kb.features.empty()) add("features", "knowledge base declares no features");
  std::set<std::string> fnames;
  for (const auto& f : kb.features) {
    if (!fnames.insert(f.name).second)
      add("features", "duplicate feature name \"" + f.name + "\"");
    if (f.values.size() < 2)
      add("features", "feature \"" + f.name + "\" needs at least two values");
    std::set<std::string> vnames(f.values.begin(), f.values.end());
    if (vnames.size() != f.values.size())
      add("features", "feature \"" + f.name + "\" has duplicate values");
  }

  if (kb.initial_states.empty())
    add("initial-states", "at least one initial state is required");
  for (std::size_t i = 0; i < kb.initial_states.size(); ++i)
    for (std::size_t j = i + 1; j < kb.initial_states.size(); ++j)
      if (kb.initial_states[i] == kb.initial_states[j])
        add("initial-states", "initial states must be pairwise distinct",
            kb.initial_states[i]);

  for (const auto& a : kb.actions) {
    if (a.post.clauses.empty())
      add("action", "action \"" + a.name + "\" has an empty postcondition");
    bool changes_something = false;
    for (const auto& [f, v] : a.post.clauses) {
      auto pinned = a.pre.value_of(f);
      if (!pinned || *pinned != v) changes_something = true;
    }
    if (!a.post.clauses.empty() && !changes_something)
      add("action", "action \"" + a.name +
                        "\" never changes a feature where its precondition applies");
  }

  for (std::size_t si = 0; si < kb.temporal_sets.size(); ++si) {
    const auto& set = kb.temporal_sets[si];
    double asym_sum = 0.0;
    for (const auto& m : set.members) {
      if (m.post.clauses.empty())
        add("temporal", "temporal transition \"" + m.name +
                            "\" has an empty postcondition");
      for (const auto& problem : curve_problems(m.curve))
        add("curve", "curve of \"" + m.name + "\": " + problem);
      asym_sum += asymptotic_prob(m.curve);
    }
    if (asym_sum > 1.0 + 1e-9) {
      std::ostringstream os;
      os << "asymptotes in set " << si << " (pre " << kb.describe(set.pre)
         << ") sum to " << asym_sum << " > 1";
      add("asymptote-sum", os.str());
    }
  }

  // Set precondition exclusivity. Exhaustive enumeration up to 10^6 states,
  // exact pairwise compatibility beyond that.
  const std::uint64_t space = kb.state_space_size();
  if (!kb.features.empty() && kb.temporal_sets.size() >= 2) {
    if (space <= 1000000ull) {
      std::set<std::pair<std::size_t, std::size_t>> reported;
      StateVector s;
      s.values.assign(kb.features.size(), 0);
      bool done = false;
      while (!done) {
        int first_match = -1;
        for (std::size_t si = 0; si < kb.temporal_sets.size(); ++si) {
          if (!kb.temporal_sets[si].pre.matches(s)) continue;
          if (first_match < 0) {
            first_match = static_cast<int>(si);
          } else {
            auto key = std::make_pair<std::size_t>(first_match, si);
            if (reported.insert(key).second) {
              std::ostringstream os;
              os << "temporal sets " << first_match << " and " << si
                 << " both match a state";
              add("set-overlap", os.str(), s);
            }
          }
        }
        // odometer increment over the full state space
        done = true;
        for (std::size_t f = kb.features.size(); f-- > 0;) {
          if (++s.values[f] < kb.features[f].values.size()) {
            done = false;
            break;
          }
          s.values[f] = 0;
        }
      }
    } else {
      for (std::size_t i = 0; i < kb.temporal_sets.size(); ++i)
        for (std::size_t j = i + 1; j < kb.temporal_sets.size(); ++j)
          if (conditions_compatible(kb.temporal_sets[i].pre,
                                    kb.temporal_sets[j].pre)) {
            std::ostringstream os;
            os << "temporal sets " << i << " and " << j
               << " have compatible preconditions";
            add("set-overlap", os.str(),
                merged_witness(kb.temporal_sets[i].pre, kb.temporal_sets[j].pre, kb));
          }
    }
  }

  return out;
}

MatchResult matching_transitions(const StateVector& state, const KnowledgeBase& kb) {
  MatchResult r;
  for (std::size_t si = 0; si < kb.temporal_sets.size(); ++si) {
    if (!kb.temporal_sets[si].pre.matches(state)) continue;
    if (r.temporal_set != nullptr)
      throw std::logic_error(
          "two temporal sets match state " + kb.describe(state) +
          "; the knowledge base was not validated");
    r.temporal_set = &kb.temporal_sets[si];
    r.temporal_set_index = static_cast<int>(si);
  }
  for (const auto& a : kb.actions)
    if (a.pre.matches(state)) r.actions.push_back(&a);
  return r;
}

}  // namespace tapplan
