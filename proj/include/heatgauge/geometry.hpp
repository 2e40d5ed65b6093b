#pragma once

// Model geometries: Euclidean space R^n, hyperbolic 3-space H^3 in the
// upper half-space chart (x1, x2, y), and the Heisenberg group H^1 in
// exponential coordinates (x, y, z).
//
// All heat kernels are those of the generator (1/2)Delta, respectively
// (1/2)(Y1^2 + Y2^2); closed forms written for d/dt = Delta are evaluated
// at t/2.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <initializer_list>
#include <numbers>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "heatgauge/errors.hpp"
#include "heatgauge/gamma_calculus.hpp"
#include "heatgauge/polynomial.hpp"
#include "heatgauge/quadrature.hpp"

namespace heatgauge {

enum class GeometryKind { euclidean, hyperbolic3, heisenberg };

struct GeometryId {
  GeometryKind kind = GeometryKind::euclidean;
  int n = 1;  // chart dimension

  static GeometryId euclidean(int n) {
    if (n < 1 || n > 16) throw InvalidInput("euclidean dimension must be in [1, 16]");
    return {GeometryKind::euclidean, n};
  }
  static GeometryId hyperbolic3() { return {GeometryKind::hyperbolic3, 3}; }
  static GeometryId heisenberg() { return {GeometryKind::heisenberg, 3}; }

  /// "euclidean:n", "hyperbolic3" or "heisenberg".
  static GeometryId parse(std::string_view s) {
    if (s == "hyperbolic3") return hyperbolic3();
    if (s == "heisenberg") return heisenberg();
    if (s.starts_with("euclidean:")) {
      const std::string digits(s.substr(10));
      if (digits.empty() || digits.find_first_not_of("0123456789") != std::string::npos)
        throw InvalidInput("bad euclidean dimension in '" + std::string(s) + "'");
      return euclidean(std::stoi(digits));
    }
    throw InvalidInput("unknown geometry '" + std::string(s) + "'");
  }

  std::string id() const {
    switch (kind) {
      case GeometryKind::euclidean: return "euclidean:" + std::to_string(n);
      case GeometryKind::hyperbolic3: return "hyperbolic3";
      case GeometryKind::heisenberg: return "heisenberg";
    }
    return "?";
  }

  int dim() const { return n; }
  bool has_exact_kernel() const { return kind != GeometryKind::heisenberg; }

  /// K with Ric >= -K (Riemannian geometries only).
  double ricci_lower_bound() const {
    switch (kind) {
      case GeometryKind::euclidean: return 0.0;
      case GeometryKind::hyperbolic3: return 2.0;
      case GeometryKind::heisenberg: break;
    }
    throw Unsupported("heisenberg has no Ricci lower bound; use cd_params()");
  }

  gamma_calculus::CDParams cd_params() const {
    if (kind != GeometryKind::heisenberg) throw Unsupported(id() + " has no CD parameters");
    return gamma_calculus::kHeisenbergCD;
  }

  friend bool operator==(const GeometryId&, const GeometryId&) = default;
};

/// Point in the chart of a geometry.
class Point {
 public:
  Point() = default;
  Point(std::initializer_list<double> c) : c_(c) {}
  explicit Point(std::vector<double> c) : c_(std::move(c)) {}
  explicit Point(std::span<const double> c) : c_(c.begin(), c.end()) {}

  std::size_t size() const { return c_.size(); }
  double operator[](std::size_t i) const { return c_[i]; }
  double& operator[](std::size_t i) { return c_[i]; }
  std::span<const double> coords() const { return c_; }
  operator std::span<const double>() const { return c_; }  // NOLINT(google-explicit-constructor)
  const std::vector<double>& vec() const { return c_; }

  friend bool operator==(const Point&, const Point&) = default;

 private:
  std::vector<double> c_;
};

inline Point origin(const GeometryId& g) {
  std::vector<double> c(static_cast<std::size_t>(g.dim()), 0.0);
  if (g.kind == GeometryKind::hyperbolic3) c[2] = 1.0;
  return Point(std::move(c));
}

inline void validate_point(const GeometryId& g, std::span<const double> p) {
  if (static_cast<int>(p.size()) != g.dim())
    throw InvalidInput(g.id() + " expects " + std::to_string(g.dim()) + " coordinates, got " +
                       std::to_string(p.size()));
  for (double v : p)
    if (!std::isfinite(v)) throw InvalidInput("point coordinates must be finite");
  if (g.kind == GeometryKind::hyperbolic3 && !(p[2] > 0.0))
    throw InvalidInput("hyperbolic3 point needs y > 0");
}

// ---------------------------------------------------------------------------
// Heisenberg group law
// ---------------------------------------------------------------------------

namespace heisenberg {

inline Point multiply(std::span<const double> a, std::span<const double> b) {
  return {a[0] + b[0], a[1] + b[1], a[2] + b[2] + 0.5 * (a[0] * b[1] - a[1] * b[0])};
}

inline Point inverse(std::span<const double> a) { return {-a[0], -a[1], -a[2]}; }

inline Point dilate(double lambda, std::span<const double> a) {
  return {lambda * a[0], lambda * a[1], lambda * lambda * a[2]};
}

namespace detail {

// m(theta) = (theta - sin theta) / (8 sin^2(theta/2)): the ratio |z| / rho^2 of
// the endpoint of a unit-speed geodesic whose horizontal projection turns by
// theta. Increasing from 0 (theta = 0) to +inf (theta = 2 pi).
inline double area_ratio(double theta) {
  const double s = std::sin(0.5 * theta);
  double num;
  if (theta < 1e-3) {
    const double t2 = theta * theta;
    num = theta * t2 / 6.0 * (1.0 - t2 / 20.0 * (1.0 - t2 / 42.0));
  } else {
    num = theta - std::sin(theta);
  }
  return num / (8.0 * s * s);
}

inline double area_ratio_derivative(double theta) {
  const double s = std::sin(0.5 * theta), c = std::cos(0.5 * theta);
  if (theta < 1e-3) return 1.0 / 12.0 + theta * theta / 240.0;
  return (2.0 * s * s * s - c * (theta - std::sin(theta))) / (8.0 * s * s * s);
}

}  // namespace detail

/// Carnot-Caratheodory distance from the identity to (x, y, z).
///
/// The minimizing geodesic projects to a circular arc of turning angle theta
/// in (0, 2 pi); theta solves m(theta) = |z| / (x^2 + y^2) and the length is
/// rho theta / (2 sin(theta/2)). Safeguarded Newton on the bracket (0, 2 pi).
inline double cc_norm(double x, double y, double z) {
  const double rho = std::hypot(x, y);
  const double az = std::abs(z);
  if (az == 0.0) return rho;
  if (rho == 0.0) return std::sqrt(4.0 * std::numbers::pi * az);
  const double target = az / (rho * rho);

  constexpr double two_pi = 2.0 * std::numbers::pi;
  double lo = 0.0, hi = two_pi;
  double theta;
  if (target < 0.05) theta = 12.0 * target;
  else if (target > 10.0) theta = two_pi - 2.0 * std::asin(std::sqrt(std::numbers::pi / (4.0 * target)));
  else theta = std::numbers::pi;

  double residual = 0.0;
  for (int it = 0; it < 200; ++it) {
    residual = detail::area_ratio(theta) - target;
    if (residual > 0.0) hi = theta;
    else lo = theta;
    if (std::abs(residual) <= 1e-15 * std::max(1.0, target)) break;
    const double step = residual / detail::area_ratio_derivative(theta);
    double next = theta - step;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - theta) <= 1e-16 * two_pi) {
      theta = next;
      break;
    }
    theta = next;
  }
  residual = detail::area_ratio(theta) - target;
  if (!(std::abs(residual) <= 1e-9 * std::max(1.0, target)))
    throw NumericError("Carnot-Caratheodory root finder did not converge", residual);
  return rho * theta / (2.0 * std::sin(0.5 * theta));
}

inline double cc_norm(std::span<const double> p) { return cc_norm(p[0], p[1], p[2]); }

}  // namespace heisenberg

// ---------------------------------------------------------------------------
// Distances
// ---------------------------------------------------------------------------

inline double hyperbolic_distance(std::span<const double> a, std::span<const double> b) {
  const double dx = a[0] - b[0], dx2 = a[1] - b[1], dy = a[2] - b[2];
  const double chord = std::sqrt(dx * dx + dx2 * dx2 + dy * dy);
  // cosh d = 1 + chord^2 / (2 y y'), written to stay accurate near d = 0
  return 2.0 * std::asinh(chord / (2.0 * std::sqrt(a[2] * b[2])));
}

inline double distance(const GeometryId& g, std::span<const double> a, std::span<const double> b) {
  validate_point(g, a);
  validate_point(g, b);
  switch (g.kind) {
    case GeometryKind::euclidean: {
      double s = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
      return std::sqrt(s);
    }
    case GeometryKind::hyperbolic3: return hyperbolic_distance(a, b);
    case GeometryKind::heisenberg:
      return heisenberg::cc_norm(heisenberg::multiply(heisenberg::inverse(a), b));
  }
  return 0.0;
}

/// Image of `p` under the isometry (left translation) taking origin(g) to `x`.
/// The samplers are equivariant under these maps, so endpoints simulated
/// from the origin can be moved to any start point.
inline void transport_into(const GeometryId& g, std::span<const double> x, std::span<const double> p,
                           std::span<double> out) {
  switch (g.kind) {
    case GeometryKind::euclidean:
      for (std::size_t i = 0; i < p.size(); ++i) out[i] = x[i] + p[i];
      return;
    case GeometryKind::hyperbolic3:
      out[0] = x[0] + x[2] * p[0];
      out[1] = x[1] + x[2] * p[1];
      out[2] = x[2] * p[2];
      return;
    case GeometryKind::heisenberg:
      out[0] = x[0] + p[0];
      out[1] = x[1] + p[1];
      out[2] = x[2] + p[2] + 0.5 * (x[0] * p[1] - x[1] * p[0]);
      return;
  }
}

inline Point transport(const GeometryId& g, std::span<const double> x, std::span<const double> p) {
  std::vector<double> out(p.size());
  transport_into(g, x, p, out);
  return Point(std::move(out));
}

/// Point at geodesic distance r from `centre` in the direction with polar
/// cosine u (against the vertical axis) and azimuth phi. Euclidean charts
/// of dimension 1..3 and H^3 only.
inline Point geodesic_point(const GeometryId& g, std::span<const double> centre, double r, double u,
                            double phi) {
  const double sin_polar = std::sqrt(std::max(0.0, 1.0 - u * u));
  switch (g.kind) {
    case GeometryKind::euclidean: {
      if (g.n == 1) return {centre[0] + r * (u >= 0.0 ? 1.0 : -1.0)};
      if (g.n == 2) return {centre[0] + r * std::cos(phi), centre[1] + r * std::sin(phi)};
      if (g.n == 3)
        return {centre[0] + r * sin_polar * std::cos(phi), centre[1] + r * sin_polar * std::sin(phi),
                centre[2] + r * u};
      break;
    }
    case GeometryKind::hyperbolic3: {
      // geodesics from (0,0,1) in the half-space, moved to `centre`
      const double er = std::exp(-r);
      const double denom = 0.5 * (er * (1.0 + u) + (1.0 - u) / er);
      const double sh = std::sinh(r);
      const double b = centre[2];
      return {centre[0] + b * sin_polar * std::cos(phi) * sh / denom,
              centre[1] + b * sin_polar * std::sin(phi) * sh / denom, b / denom};
    }
    case GeometryKind::heisenberg: break;
  }
  throw Unsupported("geodesic_point not available on " + g.id());
}

// ---------------------------------------------------------------------------
// Exact heat kernels
// ---------------------------------------------------------------------------

namespace detail {

/// log(sinh(r) / r), stable for small and large r.
inline double log_sinhc(double r) {
  r = std::abs(r);
  if (r < 1e-4) return r * r / 6.0;
  if (r > 20.0) return r - std::numbers::ln2 + std::log1p(-std::exp(-2.0 * r)) - std::log(r);
  return std::log(std::sinh(r) / r);
}

inline void require_exact_kernel(const GeometryId& g) {
  if (!g.has_exact_kernel())
    throw Unsupported("no exact heat kernel for " + g.id() + "; use Monte Carlo");
}

inline void require_positive_time(double t) {
  if (!(t > 0.0)) throw InvalidInput("heat kernel needs t > 0");
}

}  // namespace detail

/// log mu_t as a function of the geodesic distance r.
inline double log_heat_kernel_radial(const GeometryId& g, double t, double r) {
  detail::require_exact_kernel(g);
  detail::require_positive_time(t);
  if (g.kind == GeometryKind::euclidean)
    return -0.5 * g.n * std::log(2.0 * std::numbers::pi * t) - r * r / (2.0 * t);
  return -1.5 * std::log(2.0 * std::numbers::pi * t) - detail::log_sinhc(r) - 0.5 * t -
         r * r / (2.0 * t);
}

inline double heat_kernel_radial(const GeometryId& g, double t, double r) {
  return std::exp(log_heat_kernel_radial(g, t, r));
}

inline double heat_kernel_density(const GeometryId& g, double t, std::span<const double> a,
                                  std::span<const double> b) {
  detail::require_exact_kernel(g);
  detail::require_positive_time(t);
  return heat_kernel_radial(g, t, distance(g, a, b));
}

inline double log_heat_kernel_density(const GeometryId& g, double t, std::span<const double> a,
                                      std::span<const double> b) {
  detail::require_exact_kernel(g);
  detail::require_positive_time(t);
  return log_heat_kernel_radial(g, t, distance(g, a, b));
}

/// log of the area of the geodesic sphere of radius r.
inline double log_sphere_area(const GeometryId& g, double r) {
  if (g.kind == GeometryKind::hyperbolic3) {
    const double ls = detail::log_sinhc(r) + std::log(r);
    return std::log(4.0 * std::numbers::pi) + 2.0 * ls;
  }
  if (g.kind == GeometryKind::euclidean) {
    const double n = g.n;
    const double log_omega =
        std::numbers::ln2 + 0.5 * n * std::log(std::numbers::pi) - std::lgamma(0.5 * n);
    return n == 1 ? std::numbers::ln2 : log_omega + (n - 1.0) * std::log(r);
  }
  throw Unsupported("sphere area not available on " + g.id());
}

/// Density of d(o, X_t) on [0, inf).
inline double radial_density(const GeometryId& g, double t, double r) {
  if (r <= 0.0) return g.kind == GeometryKind::euclidean && g.n == 1 ? 2.0 * heat_kernel_radial(g, t, 0.0) : 0.0;
  return std::exp(log_heat_kernel_radial(g, t, r) + log_sphere_area(g, r));
}

/// Radial profile of a function f(d(c, .)); `jumps` lists radii where f is
/// discontinuous.
struct RadialProfile {
  std::function<double(double)> f;
  std::vector<double> jumps;
};

namespace detail {

inline double panel_width(const GeometryId& g, double t) {
  (void)g;
  return std::max(0.25, std::sqrt(t));
}

/// Integral over [0, inf) split at the given interior breakpoints.
template <class F>
double integrate_half_line(F&& f, std::vector<double> breaks, double step) {
  std::sort(breaks.begin(), breaks.end());
  // coarse magnitude of the integral, so that segments carrying a negligible
  // share of it are only resolved to an absolute floor
  double scale = 0.0;
  const double reach = 8.0 * step + (breaks.empty() ? 0.0 : breaks.back());
  for (int k = 0; k < 64; ++k) scale = std::max(scale, std::abs(f((k + 0.5) * reach / 64.0)) * step);
  const double floor = std::max(1e-300, 1e-16 * scale);
  double total = 0.0, lo = 0.0;
  for (double b : breaks) {
    if (!(b > lo + 1e-6)) continue;  // slivers carry no mass worth resolving
    total += quad::integrate(f, lo, b, quad::kRelTol, floor);
    lo = b;
  }
  return total + quad::integrate_to_infinity(f, lo, step, 1e-15, quad::kRelTol, 400, floor);
}

}  // namespace detail

/// Integral of f(r) mu_t(r) A(r) dr over [0, inf), i.e. E[f(d(o, X_t))].
inline double radial_quadrature(const GeometryId& g, const std::function<double(double)>& integrand,
                                double t, std::vector<double> breaks = {}) {
  detail::require_exact_kernel(g);
  detail::require_positive_time(t);
  const auto weighted = [&](double r) {
    const double w = radial_density(g, t, r);
    return w == 0.0 ? 0.0 : integrand(r) * w;
  };
  return detail::integrate_half_line(weighted, std::move(breaks), detail::panel_width(g, t));
}

/// Mean of f over the geodesic sphere S(centre, r). Euclidean dimension
/// <= 3 and H^3. `abs_tol` is an absolute error floor for the mean.
inline double sphere_mean(const GeometryId& g, std::span<const double> centre, double r,
                          const std::function<double(std::span<const double>)>& f,
                          double rel_tol = 1e-11, double abs_tol = 1e-300) {
  const double two_pi = 2.0 * std::numbers::pi;
  if (g.kind == GeometryKind::euclidean && g.n == 1)
    return 0.5 * (f(geodesic_point(g, centre, r, 1.0, 0.0)) + f(geodesic_point(g, centre, r, -1.0, 0.0)));
  if (g.kind == GeometryKind::euclidean && g.n == 2) {
    const double v = quad::integrate(
        [&](double phi) { return f(geodesic_point(g, centre, r, 0.0, phi)); }, 0.0, two_pi, rel_tol,
        abs_tol * two_pi);
    return v / two_pi;
  }
  if ((g.kind == GeometryKind::euclidean && g.n == 3) || g.kind == GeometryKind::hyperbolic3) {
    const double v = quad::integrate(
        [&](double u) {
          return quad::integrate([&](double phi) { return f(geodesic_point(g, centre, r, u, phi)); },
                                 0.0, two_pi, rel_tol, abs_tol * two_pi);
        },
        -1.0, 1.0, rel_tol, 2.0 * abs_tol * two_pi);
    return v / (2.0 * two_pi);
  }
  throw Unsupported("sphere_mean not available on " + g.id());
}

/// Integral of f against the heat kernel measure mu_t^x, in geodesic polar
/// coordinates around x. Each sphere mean gets an absolute error budget
/// inversely proportional to the radial weight it is multiplied by.
inline double integrate_against_kernel(const GeometryId& g, std::span<const double> x, double t,
                                       const std::function<double(std::span<const double>)>& f,
                                       std::vector<double> breaks = {}) {
  return radial_quadrature(
      g,
      [&](double r) {
        if (r == 0.0) return f(x);
        const double w = radial_density(g, t, r);
        return sphere_mean(g, x, r, f, 1e-11, 1e-14 / std::max(w, 1e-290));
      },
      t, std::move(breaks));
}

/// (e^{sL} f)(x) for f radial about a centre c, at a point x with
/// d(c, x) = rho. A one-dimensional integral in three dimensions, the law of
/// cosines in polar coordinates around x otherwise.
inline double radial_heat_op(const GeometryId& g, const RadialProfile& profile, double s, double rho) {
  detail::require_exact_kernel(g);
  if (s == 0.0) return profile.f(rho);
  detail::require_positive_time(s);
  if (g.kind == GeometryKind::euclidean && g.n == 1) {
    return radial_quadrature(
        g, [&](double r) { return 0.5 * (profile.f(std::abs(rho + r)) + profile.f(std::abs(rho - r))); },
        s, [&] {
          std::vector<double> b;
          for (double j : profile.jumps) {
            b.push_back(std::abs(j - rho));
            b.push_back(j + rho);
          }
          return b;
        }());
  }
  const bool hyp = g.kind == GeometryKind::hyperbolic3;
  if (hyp || g.n == 3) {
    // The mean of mu_s(x, .) over the sphere S(c, r) has a closed form in
    // three dimensions: with S = sinh (H^3) or the identity (R^3),
    //   A(r) * mean = 2 pi C s (S(r)/S(rho)) e^{-(rho-r)^2/2s} (1 - e^{-2 rho r/s}),
    // C = (2 pi s)^{-3/2} (times e^{-s/2} on H^3).
    const auto log_S = [hyp](double v) {
      if (!hyp) return std::log(v);
      return v + std::log(-std::expm1(-2.0 * v)) - std::numbers::ln2;
    };
    const double log_c = -1.5 * std::log(2.0 * std::numbers::pi * s) - (hyp ? 0.5 * s : 0.0) +
                         std::log(2.0 * std::numbers::pi * s);
    const auto weight = [&](double r) {
      if (r <= 0.0) return 0.0;
      if (rho < 1e-7) {
        // rho -> 0 limit: 4 pi C r S(r) e^{-r^2/2s}
        return std::exp(log_c + std::log(2.0 / s) + std::log(r) + log_S(r) - r * r / (2.0 * s));
      }
      const double d = rho - r;
      return std::exp(log_c + log_S(r) - log_S(rho) - d * d / (2.0 * s) + std::log(-std::expm1(-2.0 * rho * r / s)));
    };
    const double step = detail::panel_width(g, s);
    std::vector<double> breaks;
    if (rho > 0.05 * step) breaks.push_back(rho);
    for (double j : profile.jumps) breaks.push_back(j);
    return detail::integrate_half_line(
        [&](double r) {
          const double w = weight(r);
          return w == 0.0 ? 0.0 : profile.f(r) * w;
        },
        std::move(breaks), step);
  }
  const double n = g.n;
  // d(c, y) for y at distance r from x, at angle phi from the direction of c
  const auto dist_c = [&](double r, double phi) {
    const double cphi = std::cos(phi);
    if (hyp) {
      const double ch = std::cosh(rho) * std::cosh(r) - std::sinh(rho) * std::sinh(r) * cphi;
      return std::acosh(std::max(1.0, ch));
    }
    return std::sqrt(std::max(0.0, rho * rho + r * r - 2.0 * rho * r * cphi));
  };
  const auto cos_at = [&](double r, double radius) {
    if (hyp)
      return (std::cosh(rho) * std::cosh(r) - std::cosh(radius)) / (std::sinh(rho) * std::sinh(r));
    return (rho * rho + r * r - radius * radius) / (2.0 * rho * r);
  };
  const double norm = quad::integrate([&](double phi) { return std::pow(std::sin(phi), n - 2.0); },
                                      0.0, std::numbers::pi);
  const auto mean_at = [&](double r) {
    if (r == 0.0 || rho == 0.0) return profile.f(r == 0.0 ? rho : r);
    std::vector<double> cuts{0.0};
    for (double j : profile.jumps) {
      const double c = cos_at(r, j);
      if (c > -1.0 && c < 1.0) cuts.push_back(std::acos(c));
    }
    cuts.push_back(std::numbers::pi);
    std::sort(cuts.begin(), cuts.end());
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
      acc += quad::integrate(
          [&](double phi) { return profile.f(dist_c(r, phi)) * std::pow(std::sin(phi), n - 2.0); },
          cuts[i], cuts[i + 1], 1e-12);
    return acc / norm;
  };
  std::vector<double> breaks;
  for (double j : profile.jumps) {
    breaks.push_back(std::abs(j - rho));
    breaks.push_back(j + rho);
  }
  return radial_quadrature(g, mean_at, s, std::move(breaks));
}

// ---------------------------------------------------------------------------
// Test functions
// ---------------------------------------------------------------------------

enum class FunctionClass { harmonic, subharmonic, generic };
enum class Growth { bounded, polynomial, exponential };

inline std::string_view to_string(FunctionClass c) {
  switch (c) {
    case FunctionClass::harmonic: return "harmonic";
    case FunctionClass::subharmonic: return "subharmonic";
    case FunctionClass::generic: return "generic";
  }
  return "?";
}

inline std::string_view to_string(Growth g) {
  switch (g) {
    case Growth::bounded: return "bounded";
    case Growth::polynomial: return "polynomial";
    case Growth::exponential: return "exponential";
  }
  return "?";
}

struct TestFunction {
  std::string id;
  std::function<double(std::span<const double>)> eval;
  FunctionClass cls = FunctionClass::generic;
  Growth growth = Growth::polynomial;
  /// Exact form in chart coordinates (Heisenberg catalog).
  std::optional<Polynomial> polynomial;
  /// f(p) = radial->f(d(radial_centre, p)).
  std::optional<RadialProfile> radial;
  Point radial_centre;
  /// f(p) = coordinate->second(p[coordinate->first]).
  std::optional<std::pair<int, std::function<double(double)>>> coordinate;
  /// H^3 only: f(p) = q(p)^power with q = y / ((x1-xi1)^2 + (x2-xi2)^2 + y^2),
  /// the Poisson kernel at the boundary point xi.
  struct Horo {
    std::array<double, 2> xi{};
    double power = 1.0;
    double scale = 1.0;  // f = scale * q^power
  };
  std::optional<Horo> horo;
  /// H^3 only: f(p) = plane(s) with s = asinh(x1 / y) the signed distance to
  /// the totally geodesic plane {x1 = 0}.
  std::optional<std::function<double(double)>> plane;
  /// R^n only: f(p) = exp(exp_rate * p[0]); enables closed forms.
  std::optional<double> exp_rate;

  double operator()(std::span<const double> p) const { return eval(p); }
};

/// q at p for a boundary point xi of the half-space chart.
inline double poisson_kernel(std::array<double, 2> xi, std::span<const double> p) {
  const double a = p[0] - xi[0], b = p[1] - xi[1];
  return p[2] / (a * a + b * b + p[2] * p[2]);
}

/// Mean of (q / q(centre))^b over the geodesic sphere of radius r in H^3:
/// sinh((b-1) r) / ((b-1) sinh r).
inline double horo_sphere_mean(double b, double r) {
  if (r == 0.0) return 1.0;
  const double c = b - 1.0;
  if (std::abs(c * r) < 1e-8) return r / std::sinh(r);
  const auto log_sinh = [](double v) { return v + std::log(-std::expm1(-2.0 * v)) - std::log(2.0); };
  const double num = c > 0.0 ? log_sinh(c * r) - std::log(c) : log_sinh(-c * r) - std::log(-c);
  return std::exp(num - log_sinh(r));
}

namespace detail {

inline TestFunction make_poly(std::string id, Polynomial p, FunctionClass cls) {
  TestFunction f;
  f.id = std::move(id);
  f.eval = [p](std::span<const double> q) { return p(q); };
  f.cls = cls;
  f.growth = p.degree() <= 0 ? Growth::bounded : Growth::polynomial;
  f.polynomial = std::move(p);
  return f;
}

inline TestFunction make(std::string id, std::function<double(std::span<const double>)> eval,
                         FunctionClass cls, Growth growth) {
  TestFunction f;
  f.id = std::move(id);
  f.eval = std::move(eval);
  f.cls = cls;
  f.growth = growth;
  return f;
}

}  // namespace detail

/// Built-in harmonic / subharmonic / generic functions of a geometry.
inline std::vector<TestFunction> catalog_functions(const GeometryId& g) {
  using detail::make;
  std::vector<TestFunction> out;
  const auto H = FunctionClass::harmonic;
  const auto S = FunctionClass::subharmonic;
  const auto G = FunctionClass::generic;
  switch (g.kind) {
    case GeometryKind::euclidean: {
      const int n = g.n;
      for (int i = 0; i < n; ++i) {
        auto f = make("x" + std::to_string(i + 1), [i](std::span<const double> p) { return p[i]; }, H,
                      Growth::polynomial);
        f.coordinate = {{i, [](double v) { return v; }}};
        out.push_back(std::move(f));
      }
      if (n >= 2) {
        out.push_back(make("x1*x2", [](std::span<const double> p) { return p[0] * p[1]; }, H,
                           Growth::polynomial));
        out.push_back(make("x1^2-x2^2",
                           [](std::span<const double> p) { return p[0] * p[0] - p[1] * p[1]; }, H,
                           Growth::polynomial));
      }
      {
        auto f = make("x1^2", [](std::span<const double> p) { return p[0] * p[0]; }, S,
                      Growth::polynomial);
        f.coordinate = {{0, [](double v) { return v * v; }}};
        out.push_back(std::move(f));
      }
      {
        auto f = make("|x|^2",
                      [](std::span<const double> p) {
                        double s = 0.0;
                        for (double v : p) s += v * v;
                        return s;
                      },
                      S, Growth::polynomial);
        f.radial = RadialProfile{[](double r) { return r * r; }, {}};
        f.radial_centre = origin(g);
        out.push_back(std::move(f));
      }
      {
        auto f = make("exp(x1)", [](std::span<const double> p) { return std::exp(p[0]); }, S,
                      Growth::exponential);
        f.coordinate = {{0, [](double v) { return std::exp(v); }}};
        f.exp_rate = 1.0;
        out.push_back(std::move(f));
      }
      break;
    }
    case GeometryKind::hyperbolic3: {
      {
        auto f = make("x1", [](std::span<const double> p) { return p[0]; }, H, Growth::exponential);
        f.polynomial = Polynomial::x();
        out.push_back(std::move(f));
      }
      // Poisson kernel at the boundary point 0; equals y^2 after the
      // inversion through the unit sphere, an isometry fixing (0,0,1).
      {
        auto f = make("poisson",
                      [](std::span<const double> p) {
                        const double q = p[2] / (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
                        return q * q;
                      },
                      H, Growth::exponential);
        f.horo = TestFunction::Horo{{0.0, 0.0}, 2.0};
        out.push_back(std::move(f));
      }
      // harmonic measure of the boundary half-plane {x1 > 0}, rescaled to (-1, 1)
      {
        auto f = make("halfspace", [](std::span<const double> p) { return p[0] / std::hypot(p[0], p[2]); },
                      H, Growth::bounded);
        f.plane = [](double d) { return std::tanh(d); };
        out.push_back(std::move(f));
      }
      {
        auto f = make("x1^2", [](std::span<const double> p) { return p[0] * p[0]; }, S,
                      Growth::exponential);
        f.polynomial = Polynomial::x() * Polynomial::x();
        out.push_back(std::move(f));
      }
      {
        const Point c = origin(g);
        auto f = make("ball1",
                      [c](std::span<const double> p) { return hyperbolic_distance(c, p) <= 1.0 ? 1.0 : 0.0; },
                      G, Growth::bounded);
        f.radial = RadialProfile{[](double r) { return r <= 1.0 ? 1.0 : 0.0; }, {1.0}};
        f.radial_centre = c;
        out.push_back(std::move(f));
      }
      break;
    }
    case GeometryKind::heisenberg: {
      using detail::make_poly;
      const auto x = Polynomial::x(), y = Polynomial::y(), z = Polynomial::z();
      out.push_back(make_poly("x", x, H));
      out.push_back(make_poly("y", y, H));
      out.push_back(make_poly("z", z, H));
      out.push_back(make_poly("xy", x * y, H));
      out.push_back(make_poly("x^2-y^2", x * x - y * y, H));
      out.push_back(make_poly("x^2", x * x, S));
      out.push_back(make_poly("x^2+y^2", x * x + y * y, S));
      break;
    }
  }
  return out;
}

inline TestFunction find_function(const GeometryId& g, std::string_view id) {
  for (auto& f : catalog_functions(g))
    if (f.id == id) return f;
  throw InvalidInput("no function '" + std::string(id) + "' in the " + g.id() + " catalog");
}

/// exp(a x1) on R^n, subharmonic.
inline TestFunction exponential_function(const GeometryId& g, double a) {
  if (g.kind != GeometryKind::euclidean) throw InvalidInput("exponential family lives on R^n");
  std::ostringstream id;
  id << "exp(" << a << "*x1)";
  auto f = detail::make(id.str(), [a](std::span<const double> p) { return std::exp(a * p[0]); },
                        FunctionClass::subharmonic, Growth::exponential);
  f.coordinate = {{0, [a](double v) { return std::exp(a * v); }}};
  f.exp_rate = a;
  return f;
}

inline TestFunction constant_function(double c) {
  auto f = detail::make("const", [c](std::span<const double>) { return c; }, FunctionClass::harmonic,
                        Growth::bounded);
  f.polynomial = Polynomial(c);
  return f;
}

// ---------------------------------------------------------------------------
// Harmonicity certification
// ---------------------------------------------------------------------------

inline constexpr double kFiniteDifferenceStep = 1e-4;
inline constexpr double kHarmonicTol = 1e-5;

/// Chart Laplacian (Delta, respectively Y1^2 + Y2^2; without the 1/2) of f
/// at p by second-order central differences with step h.
inline double fd_laplacian(const GeometryId& g, const TestFunction& f, std::span<const double> p,
                           double h = kFiniteDifferenceStep) {
  std::vector<double> q(p.begin(), p.end());
  const double f0 = f(p);
  const auto at = [&](int i, double di, int j, double dj) {
    q.assign(p.begin(), p.end());
    q[i] += di;
    if (j >= 0) q[j] += dj;
    return f(q);
  };
  const auto d2 = [&](int i) { return (at(i, h, -1, 0) - 2.0 * f0 + at(i, -h, -1, 0)) / (h * h); };
  const auto d1 = [&](int i) { return (at(i, h, -1, 0) - at(i, -h, -1, 0)) / (2.0 * h); };
  const auto dij = [&](int i, int j) {
    return (at(i, h, j, h) - at(i, h, j, -h) - at(i, -h, j, h) + at(i, -h, j, -h)) / (4.0 * h * h);
  };
  switch (g.kind) {
    case GeometryKind::euclidean: {
      double s = 0.0;
      for (int i = 0; i < g.n; ++i) s += d2(i);
      return s;
    }
    case GeometryKind::hyperbolic3: {
      const double y = p[2];
      return y * y * (d2(0) + d2(1) + d2(2)) - y * d1(2);
    }
    case GeometryKind::heisenberg: {
      const double x = p[0], y = p[1];
      // Y1^2 = dxx - y dxz + (y^2/4) dzz,  Y2^2 = dyy + x dyz + (x^2/4) dzz
      return d2(0) - y * dij(0, 2) + d2(1) + x * dij(1, 2) + 0.25 * (x * x + y * y) * d2(2);
    }
  }
  return 0.0;
}

/// Certifies the class of f on the sample. Returns max |Lf| for harmonic f,
/// min Lf for subharmonic f, 0 for generic f. Heisenberg polynomials are
/// handled symbolically; everything else by finite differences.
inline double verify_harmonicity(const GeometryId& g, const TestFunction& f,
                                 std::span<const Point> sample, double tol = kHarmonicTol) {
  if (sample.empty()) throw InvalidInput("verify_harmonicity needs a non-empty sample");
  if (f.cls == FunctionClass::generic) return 0.0;
  std::optional<Polynomial> lf;
  if (g.kind == GeometryKind::heisenberg && f.polynomial)
    lf = gamma_calculus::L_op(*f.polynomial, gamma_calculus::kHalfSumOfSquares);
  double worst = f.cls == FunctionClass::harmonic ? 0.0 : std::numeric_limits<double>::infinity();
  bool ok = true;
  for (const auto& p : sample) {
    validate_point(g, p);
    const double v = lf ? (*lf)(p) : 0.5 * fd_laplacian(g, f, p);
    const double scale = lf ? 0.0 : tol * std::max(1.0, std::abs(f(p)));
    if (f.cls == FunctionClass::harmonic) {
      worst = std::max(worst, std::abs(v));
      if (std::abs(v) > scale) ok = false;
    } else {
      worst = std::min(worst, v);
      if (v < -scale) ok = false;
    }
  }
  if (!ok) throw ClassificationFailure(f.id, worst);
  return worst;
}

}  // namespace heatgauge
