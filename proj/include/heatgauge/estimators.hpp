#pragma once

// L^p norms and heat-operator values under heat kernel measures, by Monte
// Carlo over endpoint batches or by quadrature against exact kernels.

#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "heatgauge/diffusion.hpp"
#include "heatgauge/errors.hpp"
#include "heatgauge/geometry.hpp"

namespace heatgauge {

enum class Method { mc, quadrature, closed_form };

inline std::string_view to_string(Method m) {
  switch (m) {
    case Method::mc: return "mc";
    case Method::quadrature: return "quadrature";
    case Method::closed_form: return "closed-form";
  }
  return "?";
}

struct LpEstimate {
  double value = 0.0;
  double stderr_ = 0.0;
  std::uint64_t n = 0;
  Method method = Method::mc;
};

struct HeatOpEstimate {
  double value = 0.0;
  double stderr_ = 0.0;
  std::uint64_t n = 0;
  Method method = Method::mc;
};

/// Context of an estimate, for report rows.
struct EstimateRow {
  std::string op;
  std::string geometry;
  std::string function;
  std::vector<double> o;
  double T = 0.0;
  double t = 0.0;
  double p = 0.0;
  double value = 0.0;
  double stderr_ = 0.0;
  std::uint64_t n = 0;
  std::string method;
  std::uint64_t seed = 0;
};

namespace detail {

inline void require_finite_p(double p) {
  if (!(p >= 1.0)) throw InvalidInput("L^p estimator needs p >= 1");
  if (std::isinf(p)) throw InvalidInput("p = inf is not estimable from samples; use finite spaces");
}

struct Moments {
  double mean = 0.0;
  double sd = 0.0;
  std::uint64_t n = 0;
};

/// Mean and standard deviation of values, two-pass, fixed order.
inline Moments moments(std::span<const double> v) {
  Moments m;
  m.n = v.size();
  if (v.empty()) return m;
  double s = 0.0;
  for (double x : v) s += x;
  m.mean = s / static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - m.mean) * (x - m.mean);
    m.sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return m;
}

}  // namespace detail

/// ((1/n) sum |f(X_i)|^p)^(1/p), stderr by the delta method on the p-th
/// moment: m^(1/p - 1) sd(|f|^p) / (p sqrt(n)).
inline LpEstimate lp_norm_batch(const EndpointBatch& batch, const TestFunction& f, double p) {
  detail::require_finite_p(p);
  std::vector<double> v(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const double a = std::abs(f(batch[i]));
    v[i] = p == 1.0 ? a : p == 2.0 ? a * a : std::pow(a, p);
    if (!std::isfinite(v[i]))
      throw NumericError("|f|^p overflowed for '" + f.id + "' (growth " +
                         std::string(to_string(f.growth)) + ")");
  }
  const auto m = detail::moments(v);
  LpEstimate e;
  e.n = m.n;
  e.method = Method::mc;
  e.value = std::pow(m.mean, 1.0 / p);
  e.stderr_ = m.mean > 0.0 ? std::pow(m.mean, 1.0 / p - 1.0) * m.sd / (p * std::sqrt(static_cast<double>(m.n)))
                           : 0.0;
  return e;
}

inline LpEstimate lp_norm_mc(const GeometryId& g, const TestFunction& f, const Point& o, double T, double p,
                             const SimConfig& cfg) {
  detail::require_finite_p(p);
  return lp_norm_batch(simulate(g, o, T, cfg), f, p);
}

namespace detail {

/// E[f(X_T)] (no power) or E[|f(X_T)|^power] for X_T ~ mu_T^x, by the
/// cheapest available deterministic reduction of f.
inline double kernel_moment(const GeometryId& g, const TestFunction& f, const Point& x, double T,
                            std::optional<double> power) {
  require_exact_kernel(g);
  const auto outer = [&](double v) { return power ? std::pow(std::abs(v), *power) : v; };
  if (T == 0.0) return outer(f(x));
  if (f.horo && g.kind == GeometryKind::hyperbolic3) {
    const double b = f.horo->power * power.value_or(1.0);
    const double q0 = poisson_kernel(f.horo->xi, x);
    const double c = power ? std::pow(std::abs(f.horo->scale), *power) : f.horo->scale;
    return c * std::pow(q0, b) * radial_quadrature(g, [b](double r) { return horo_sphere_mean(b, r); }, T, {});
  }
  if (f.plane && g.kind == GeometryKind::hyperbolic3) {
    // s(X_t) is a 1-D diffusion with generator (1/2)(d^2 + 2 tanh(s) d); the
    // substitution v = w / cosh(s) turns it into a killed Brownian motion
    const double s0 = std::asinh(x[0] / x[2]);
    const double sd = std::sqrt(T);
    const auto integrand = [&](double s) {
      const double u = (s - s0) / sd;
      const double w = std::exp(-0.5 * u * u + std::abs(s) - 0.5 * T) * 0.5 * (1.0 + std::exp(-2.0 * std::abs(s))) /
                       (sd * std::sqrt(2.0 * std::numbers::pi));
      return w == 0.0 ? 0.0 : outer((*f.plane)(s)) * w;
    };
    return quad::integrate_real_line(integrand, s0, sd) / std::cosh(s0);
  }
  if (f.radial) {
    const double rho = distance(g, f.radial_centre, x);
    if (rho == 0.0)
      return radial_quadrature(
          g, [&](double r) { return outer(f.radial->f(r)); }, T, f.radial->jumps);
    if (g.kind == GeometryKind::euclidean && g.n > 3)
      throw Unsupported("radial function off-centre in dimension > 3");
    const auto value_at = [&](std::span<const double> y) { return outer(f(y)); };
    std::vector<double> breaks;
    for (double j : f.radial->jumps) {
      breaks.push_back(std::abs(j - rho));
      breaks.push_back(j + rho);
    }
    return integrate_against_kernel(g, x, T, value_at, breaks);
  }
  if (f.coordinate && g.kind == GeometryKind::euclidean) {
    const auto& [axis, h] = *f.coordinate;
    const double centre = x[static_cast<std::size_t>(axis)];
    const double sd = std::sqrt(T);
    const auto integrand = [&](double v) {
      const double u = (v - centre) / sd;
      const double w = std::exp(-0.5 * u * u) / (sd * std::sqrt(2.0 * std::numbers::pi));
      return w == 0.0 ? 0.0 : outer(h(v)) * w;
    };
    return quad::integrate_real_line(integrand, centre, sd);
  }
  if ((g.kind == GeometryKind::euclidean && g.n <= 3) || g.kind == GeometryKind::hyperbolic3)
    return integrate_against_kernel(g, x, T, [&](std::span<const double> y) { return outer(f(y)); });
  throw Unsupported("function '" + f.id + "' admits no quadrature reduction on " + g.id());
}

}  // namespace detail

/// ||f||_{L^p(mu_T^o)} by deterministic quadrature (stderr 0).
inline LpEstimate lp_norm_quadrature(const GeometryId& g, const TestFunction& f, const Point& o, double T,
                                     double p) {
  detail::require_finite_p(p);
  validate_point(g, o);
  if (!(T >= 0.0)) throw InvalidInput("T must be >= 0");
  const double m = detail::kernel_moment(g, f, o, T, p);
  return {std::pow(m, 1.0 / p), 0.0, 0, Method::quadrature};
}

/// (e^{tL} f)(x) from an endpoint batch started at x.
inline HeatOpEstimate heat_op_batch(const EndpointBatch& batch, const TestFunction& f) {
  std::vector<double> v(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    v[i] = f(batch[i]);
    if (!std::isfinite(v[i])) throw NumericError("f overflowed for '" + f.id + "'");
  }
  const auto m = detail::moments(v);
  return {m.mean, m.sd / std::sqrt(static_cast<double>(m.n)), m.n, Method::mc};
}

/// (e^{tL} f)(x) by Monte Carlo.
inline HeatOpEstimate heat_op_mc(const GeometryId& g, const TestFunction& f, const Point& x, double t,
                                 const SimConfig& cfg) {
  if (!(t >= 0.0)) throw InvalidInput("heat operator needs t >= 0");
  if (t == 0.0) return {f(x), 0.0, cfg.n_paths, Method::mc};
  return heat_op_batch(simulate(g, x, t, cfg), f);
}

/// (e^{tL} f)(x) by quadrature against the exact kernel.
inline HeatOpEstimate heat_op_quadrature(const GeometryId& g, const TestFunction& f, const Point& x, double t) {
  if (!(t >= 0.0)) throw InvalidInput("heat operator needs t >= 0");
  validate_point(g, x);
  if (t == 0.0) return {f(x), 0.0, 0, Method::quadrature};
  if (f.radial && g.kind != GeometryKind::euclidean) {
    // one radial integral against the sphere-averaged kernel
    return {radial_heat_op(g, *f.radial, t, distance(g, f.radial_centre, x)), 0.0, 0, Method::quadrature};
  }
  return {detail::kernel_moment(g, f, x, t, std::nullopt), 0.0, 0, Method::quadrature};
}

/// Convenience dispatcher: quadrature on exact-kernel geometries when
/// `prefer_quadrature`, else Monte Carlo.
inline HeatOpEstimate heat_op(const GeometryId& g, const TestFunction& f, const Point& x, double t,
                              const SimConfig& cfg, bool prefer_quadrature = true) {
  if (t == 0.0) {
    validate_point(g, x);
    return {f(x), 0.0, 0, prefer_quadrature && g.has_exact_kernel() ? Method::quadrature : Method::mc};
  }
  if (prefer_quadrature && g.has_exact_kernel()) return heat_op_quadrature(g, f, x, t);
  return heat_op_mc(g, f, x, t, cfg);
}

/// e^{sL} f as a test function, keeping a quadrature reduction so that
/// norms of it can again be computed by quadrature. Throws Unsupported when
/// f has no reduction that survives the heat flow.
inline TestFunction heat_evolved(const GeometryId& g, const TestFunction& f, double s) {
  if (!(s >= 0.0)) throw InvalidInput("heat flow time must be >= 0");
  if (s == 0.0) return f;
  detail::require_exact_kernel(g);
  TestFunction out;
  out.id = "e^{" + std::to_string(s) + "L}" + f.id;
  out.cls = f.cls;
  out.growth = f.growth;
  if (f.exp_rate && g.kind == GeometryKind::euclidean) {
    const double a = *f.exp_rate;
    const double c = std::exp(0.5 * a * a * s);
    out.eval = [a, c](std::span<const double> p) { return c * std::exp(a * p[0]); };
    out.coordinate = {{0, [a, c](double v) { return c * std::exp(a * v); }}};
    return out;
  }
  if (f.horo && g.kind == GeometryKind::hyperbolic3) {
    // L q^b = b (b - 2) q^b / 2
    auto h = *f.horo;
    h.scale *= std::exp(0.5 * h.power * (h.power - 2.0) * s);
    out.eval = [h](std::span<const double> p) { return h.scale * std::pow(poisson_kernel(h.xi, p), h.power); };
    out.horo = h;
    return out;
  }
  if (f.plane && g.kind == GeometryKind::hyperbolic3) {
    const auto base = f.plane;
    const auto profile = [base, s](double s0) {
      const double sd = std::sqrt(s);
      const auto integrand = [&](double v) {
        const double u = (v - s0) / sd;
        const double w = std::exp(-0.5 * u * u + std::abs(v) - 0.5 * s) * 0.5 *
                         (1.0 + std::exp(-2.0 * std::abs(v))) / (sd * std::sqrt(2.0 * std::numbers::pi));
        return w == 0.0 ? 0.0 : (*base)(v) * w;
      };
      return quad::integrate_real_line(integrand, s0, sd) / std::cosh(s0);
    };
    out.plane = profile;
    out.eval = [profile](std::span<const double> p) { return profile(std::asinh(p[0] / p[2])); };
    return out;
  }
  if (f.coordinate && g.kind == GeometryKind::euclidean) {
    const auto [axis, h] = *f.coordinate;
    const auto profile = [h, s](double v) {
      const double sd = std::sqrt(s);
      const auto integrand = [&](double w) {
        const double u = (w - v) / sd;
        return h(w) * std::exp(-0.5 * u * u) / (sd * std::sqrt(2.0 * std::numbers::pi));
      };
      return quad::integrate_real_line(integrand, v, sd);
    };
    out.coordinate = {{axis, profile}};
    out.eval = [axis, profile](std::span<const double> p) { return profile(p[static_cast<std::size_t>(axis)]); };
    return out;
  }
  if (f.radial && (g.kind == GeometryKind::hyperbolic3 || g.n <= 3)) {
    const auto prof = *f.radial;
    const Point c = f.radial_centre;
    const auto evolved = [g, prof, s](double r) { return radial_heat_op(g, prof, s, r); };
    out.radial = RadialProfile{evolved, {}};
    out.radial_centre = c;
    out.eval = [g, c, evolved](std::span<const double> p) { return evolved(distance(g, c, p)); };
    return out;
  }
  throw Unsupported("no reduction of '" + f.id + "' survives the heat flow on " + g.id());
}

/// (e^{tL} f)(x) for many x, reusing one batch simulated from the origin and
/// moved to each x by the isometry taking the origin to x. Values are
/// unbiased, but estimates at different x share their noise.
inline std::vector<double> heat_op_transported(const EndpointBatch& from_origin, const TestFunction& f,
                                               std::span<const Point> xs) {
  const GeometryId& g = from_origin.geometry;
  if (!(from_origin.start == origin(g)))
    throw InvalidInput("transported heat operator needs a batch started at the origin");
  std::vector<double> out(xs.size());
  parallel_for(xs.size(), [&](std::uint64_t j) {
    std::vector<double> buf(static_cast<std::size_t>(g.dim()));
    double acc = 0.0;
    for (std::size_t i = 0; i < from_origin.size(); ++i) {
      transport_into(g, xs[j], from_origin[i], buf);
      acc += f(buf);
    }
    out[j] = acc / static_cast<double>(from_origin.size());
  }, 16);
  return out;
}

}  // namespace heatgauge
