#include "tapplan/curve.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace tapplan {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

TemporalCurve TemporalCurve::piecewise(std::vector<std::pair<double, double>> knots,
                                       double asymptote) {
  return TemporalCurve{PiecewiseCurve{std::move(knots), asymptote}};
}

TemporalCurve TemporalCurve::delayed_exponential(double t0, double lambda,
                                                 double p_max) {
  return TemporalCurve{DelayedExponentialCurve{t0, lambda, p_max}};
}

double cum_prob(const TemporalCurve& curve, double t) {
  if (t < 0.0 || std::isnan(t))
    throw std::invalid_argument("cum_prob: time must be >= 0");

  if (const auto* pw = std::get_if<PiecewiseCurve>(&curve.repr)) {
    if (pw->knots.empty()) return pw->asymptote;
    if (t < pw->knots.front().first) return 0.0;
    // right-continuous: any step up to the asymptote lands at t_last itself,
    // so the generalized inverse is attained and the sampler law stays exact
    if (t >= pw->knots.back().first) return pw->asymptote;
    for (std::size_t i = 1; i < pw->knots.size(); ++i) {
      const auto& [t1, c1] = pw->knots[i];
      if (t > t1) continue;
      const auto& [t0, c0] = pw->knots[i - 1];
      if (t1 == t0) return c1;  // vertical step
      return c0 + (c1 - c0) * (t - t0) / (t1 - t0);
    }
    return pw->asymptote;  // unreachable for sorted knots
  }

  const auto& de = std::get<DelayedExponentialCurve>(curve.repr);
  if (t < de.t0) return 0.0;
  if (t == kInf) return de.p_max;
  return de.p_max * (1.0 - std::exp(-de.lambda * (t - de.t0)));
}

double asymptotic_prob(const TemporalCurve& curve) {
  if (const auto* pw = std::get_if<PiecewiseCurve>(&curve.repr))
    return pw->asymptote;
  return std::get<DelayedExponentialCurve>(curve.repr).p_max;
}

double inverse_cum_prob(const TemporalCurve& curve, double p) {
  if (p <= 0.0) return 0.0;

  if (const auto* pw = std::get_if<PiecewiseCurve>(&curve.repr)) {
    if (pw->knots.empty()) return p <= pw->asymptote ? 0.0 : kInf;
    for (std::size_t i = 0; i < pw->knots.size(); ++i) {
      const auto& [ti, ci] = pw->knots[i];
      if (ci < p) continue;
      if (i == 0) return ti;  // C jumps from 0 to c0 at t0
      const auto& [tp, cp] = pw->knots[i - 1];
      if (ci == cp || ti == tp) return ti;
      return tp + (ti - tp) * (p - cp) / (ci - cp);
    }
    // past the last knot C equals the asymptote (step at t_last)
    if (p <= pw->asymptote) return pw->knots.back().first;
    return kInf;
  }

  const auto& de = std::get<DelayedExponentialCurve>(curve.repr);
  if (p >= de.p_max) return kInf;  // p_max is attained only in the limit
  return de.t0 - std::log(1.0 - p / de.p_max) / de.lambda;
}

double epsilon_time(const TemporalCurve& curve, double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 1.0))
    throw std::invalid_argument("epsilon_time: epsilon must lie in (0,1)");
  return inverse_cum_prob(curve, epsilon);
}

std::vector<std::string> curve_problems(const TemporalCurve& curve) {
  std::vector<std::string> problems;
  auto bad = [&](const std::string& msg) { problems.push_back(msg); };

  if (const auto* pw = std::get_if<PiecewiseCurve>(&curve.repr)) {
    if (!(pw->asymptote >= 0.0 && pw->asymptote <= 1.0))
      bad("asymptote outside [0,1]");
    double prev_t = -kInf, prev_c = -kInf;
    for (const auto& [t, c] : pw->knots) {
      if (!(t >= 0.0) || std::isnan(t)) bad("knot time negative or NaN");
      if (t < prev_t) bad("knot times not nondecreasing");
      if (c < prev_c) bad("cumulative values not nondecreasing");
      if (!(c >= 0.0 && c <= 1.0)) bad("cumulative value outside [0,1]");
      prev_t = t;
      prev_c = c;
    }
    if (!pw->knots.empty() && pw->knots.back().second > pw->asymptote + 1e-9)
      bad("last knot value exceeds asymptote");
  } else {
    const auto& de = std::get<DelayedExponentialCurve>(curve.repr);
    if (!(de.t0 >= 0.0)) bad("onset time t0 negative");
    if (!(de.lambda > 0.0)) bad("rate lambda must be positive");
    if (!(de.p_max >= 0.0 && de.p_max <= 1.0)) bad("p_max outside [0,1]");
  }
  return problems;
}

}  // namespace tapplan
