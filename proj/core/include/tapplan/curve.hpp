#pragma once

#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace tapplan {

// Cumulative probability of an uncontrolled transition as a function of time
// spent in the matching state. Two families:
//
//  - piecewise-linear: knots [(t_i, c_i)] sorted by t; C(t) = 0 before the
//    first knot, linear between knots, equal to `asymptote` from the last
//    knot onward. A last knot value below the asymptote is a right-continuous
//    step at t_last (the jump value holds at t_last itself).
//  - delayed exponential: C(t) = 0 for t < t0, else
//    p_max * (1 - exp(-lambda * (t - t0))).
//
// The asymptote is the limit of C; 1 - asymptote is the probability the
// transition never fires.
struct PiecewiseCurve {
  std::vector<std::pair<double, double>> knots;  // (time, cumulative)
  double asymptote = 0.0;
};

struct DelayedExponentialCurve {
  double t0 = 0.0;
  double lambda = 1.0;
  double p_max = 1.0;
};

struct TemporalCurve {
  std::variant<PiecewiseCurve, DelayedExponentialCurve> repr;

  static TemporalCurve piecewise(std::vector<std::pair<double, double>> knots,
                                 double asymptote);
  static TemporalCurve delayed_exponential(double t0, double lambda, double p_max);
};

// C(t). Throws std::invalid_argument for t < 0. t may be +infinity.
double cum_prob(const TemporalCurve& curve, double t);

// The limit of C as t -> infinity.
double asymptotic_prob(const TemporalCurve& curve);

// Generalized inverse: smallest t >= 0 with C(t) >= p, +infinity if C never
// reaches p. For a piecewise curve whose asymptote exceeds its last knot
// value the step at t_last is honored (returns t_last for p in that gap).
double inverse_cum_prob(const TemporalCurve& curve, double p);

// Smallest t with C(t) >= epsilon (the guard deadline source): 0 when
// C(0) >= epsilon, +infinity when the curve never reaches epsilon.
// Requires 0 < epsilon < 1.
double epsilon_time(const TemporalCurve& curve, double epsilon);

// Structural well-formedness problems, empty when the curve is valid:
// monotonicity of knots, values within [0, asymptote], asymptote in [0,1],
// positive rate, nonnegative onset.
std::vector<std::string> curve_problems(const TemporalCurve& curve);

}  // namespace tapplan
