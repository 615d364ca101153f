#pragma once

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "tapplan/curve.hpp"

namespace test_helpers {

inline std::string fixture(const std::string& name) {
  return std::string(TAPPLAN_FIXTURE_DIR) + "/" + name;
}

// Random well-formed curves for property tests.
inline tapplan::TemporalCurve random_piecewise(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::uniform_int_distribution<int> nknots(1, 6);
  int n = nknots(rng);
  double t = u01(rng) * 10.0;
  double c = 0.0;
  std::vector<std::pair<double, double>> knots;
  for (int i = 0; i < n; ++i) {
    knots.emplace_back(t, c);
    t += u01(rng) * 20.0 + 1e-3;
    c = std::min(1.0, c + u01(rng) * (1.0 - c));
  }
  double asymptote = knots.back().second + u01(rng) * (1.0 - knots.back().second);
  return tapplan::TemporalCurve::piecewise(std::move(knots), asymptote);
}

inline tapplan::TemporalCurve random_delayed_exp(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  return tapplan::TemporalCurve::delayed_exponential(
      u01(rng) * 10.0, 0.01 + u01(rng) * 2.0, u01(rng));
}

inline tapplan::TemporalCurve random_curve(std::mt19937_64& rng) {
  return (rng() & 1) ? random_piecewise(rng) : random_delayed_exp(rng);
}

// Test-side curve evaluator, independent of the library path it checks.
inline double oracle_cum(const tapplan::TemporalCurve& curve, double t) {
  if (const auto* pw = std::get_if<tapplan::PiecewiseCurve>(&curve.repr)) {
    if (pw->knots.empty()) return pw->asymptote;
    if (t < pw->knots.front().first) return 0.0;
    if (t >= pw->knots.back().first) return pw->asymptote;
    for (std::size_t i = pw->knots.size(); i-- > 0;) {
      auto [ti, ci] = pw->knots[i];
      if (t < ti) continue;
      if (t == ti) return ci;
      auto [tn, cn] = pw->knots[i + 1];
      return ci + (cn - ci) * (t - ti) / (tn - ti);
    }
    return pw->asymptote;
  }
  const auto& de = std::get<tapplan::DelayedExponentialCurve>(curve.repr);
  if (t < de.t0) return 0.0;
  if (std::isinf(t)) return de.p_max;
  return de.p_max - de.p_max * std::exp(-de.lambda * (t - de.t0));
}

}  // namespace test_helpers
