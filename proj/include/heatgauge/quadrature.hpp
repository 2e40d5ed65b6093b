#pragma once

// Thin layer over Boost.Math quadrature: adaptive Gauss-Kronrod on finite
// panels with tail extension, and fixed Gauss-Legendre rules.

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>

#include "heatgauge/errors.hpp"

namespace heatgauge::quad {

inline constexpr double kRelTol = 1e-13;

/// Adaptive G7/K15 on [a, b]. Throws NumericError when the error estimate
/// stays above `max(abs_floor, rel_tol * |I|)` after refinement.
template <class F>
double integrate(F&& f, double a, double b, double rel_tol = kRelTol, double abs_floor = 1e-300,
                 unsigned max_depth = 18) {
  if (a == b) return 0.0;
  using GK = boost::math::quadrature::gauss_kronrod<double, 15>;
  double err = 0.0, l1 = 0.0;
  const auto target_for = [&](double v) { return std::max(abs_floor, 1e3 * rel_tol * std::max(std::abs(v), l1)); };
  // one panel first: Boost's recursive estimate can come back far larger
  // than the unsplit one on short smooth intervals
  double value = GK::integrate(f, a, b, 0, rel_tol, &err, &l1);
  if (std::isfinite(value) && err <= target_for(value)) return value;
  value = GK::integrate(f, a, b, max_depth, rel_tol, &err, &l1);
  const double target = target_for(value);
  if (!std::isfinite(value) || err > target) {
    char msg[160];
    std::snprintf(msg, sizeof msg, "adaptive quadrature did not converge on [%.6g, %.6g]: value %.3g, error %.3g",
                  a, b, value, err);
    throw NumericError(msg, err);
  }
  return value;
}

/// Integral over [a, inf): panels of width `step` are added until a panel
/// contributes less than `tail_rel` of the running total (and the integrand
/// has been seen to decay).
template <class F>
double integrate_to_infinity(F&& f, double a, double step, double tail_rel = 1e-15,
                             double rel_tol = kRelTol, int max_panels = 400, double abs_floor = 1e-300) {
  double total = 0.0;
  double lo = a;
  for (int k = 0; k < max_panels; ++k) {
    // panels far below the running total only need absolute accuracy
    const double piece = integrate(f, lo, lo + step, rel_tol, std::max(abs_floor, 1e-16 * std::abs(total)));
    total += piece;
    lo += step;
    if (k >= 2 && std::abs(piece) <= tail_rel * std::abs(total)) return total;
    if (k >= 2 && total == 0.0 && piece == 0.0) return 0.0;
  }
  throw NumericError("tail of integral on [" + std::to_string(a) + ", inf) did not decay",
                     total);
}

/// Integral over the whole real line around a centre.
template <class F>
double integrate_real_line(F&& f, double centre, double step, double tail_rel = 1e-15) {
  const double right = integrate_to_infinity(f, centre, step, tail_rel);
  const double left = integrate_to_infinity([&](double u) { return f(2.0 * centre - u); }, centre,
                                            step, tail_rel);
  return left + right;
}

/// Fixed N-point Gauss-Legendre on [a, b].
template <unsigned N, class F>
double gauss_legendre(F&& f, double a, double b) {
  return boost::math::quadrature::gauss<double, N>::integrate(f, a, b);
}

}  // namespace heatgauge::quad
