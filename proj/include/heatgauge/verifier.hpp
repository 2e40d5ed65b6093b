#pragma once

// Inequality checks. Each check evaluates both sides of one claim by the
// most accurate available route (closed form, quadrature, Monte Carlo) and
// returns report rows with a verdict.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "heatgauge/diffusion.hpp"
#include "heatgauge/errors.hpp"
#include "heatgauge/estimators.hpp"
#include "heatgauge/gamma_calculus.hpp"
#include "heatgauge/geometry.hpp"
#include "heatgauge/measure_core.hpp"
#include "heatgauge/polynomial.hpp"
#include "heatgauge/quadrature.hpp"
#include "heatgauge/report.hpp"
#include "heatgauge/rng.hpp"

namespace heatgauge {

/// Shared state of one verification run: tolerances, the optional endpoint
/// cache and the log of estimates behind the rows.
struct RunContext {
  TolerancePolicy tol;
  std::optional<std::filesystem::path> cache_dir;
  std::vector<EstimateRow> estimates;

  EndpointBatch sample(const GeometryId& g, const Point& x, double t, const SimConfig& cfg) const {
    if (cache_dir) return simulate_cached(*cache_dir, g, x, t, cfg);
    return simulate(g, x, t, cfg);
  }

  void record(std::string op, const GeometryId& g, const std::string& function, const Point& o, double T,
              double t, double p, double value, double stderr_, std::uint64_t n, std::string_view method,
              std::uint64_t seed) {
    estimates.push_back({std::move(op), g.id(), function, o.vec(), T, t, p, value, stderr_, n,
                         std::string(method), seed});
  }
};

/// Options common to the Monte Carlo checks.
struct CheckOptions {
  SimConfig sim;
  std::uint64_t n_inner = 10000;  // inner sample for nested heat-operator estimates
};

// ---------------------------------------------------------------------------
// Exponents and closed forms
// ---------------------------------------------------------------------------

/// q = 1 + (p-1)(1 - e^{-KT}) / (1 - e^{-Kt}), with the K -> 0 limit
/// 1 + (p-1) T / t.
inline double hypercontractive_exponent(double K, double p, double T, double t) {
  if (!(t > 0.0 && t < T)) throw InvalidInput("hypercontractive exponent needs 0 < t < T");
  if (!(p >= 1.0)) throw InvalidInput("hypercontractive exponent needs p >= 1");
  if (K == 0.0) return 1.0 + (p - 1.0) * T / t;
  return 1.0 + (p - 1.0) * std::expm1(-K * T) / std::expm1(-K * t);
}

/// Coefficient c of d^2 in |f(x)| <= ||f||_p exp(c d^2) for Ric >= -K.
inline double riemannian_pointwise_rate(double K, double p, double T) {
  if (!(T > 0.0)) throw InvalidInput("pointwise bound needs T > 0");
  if (K == 0.0) return (p - 1.0) / (2.0 * T);
  return K * (p - 1.0) / (-2.0 * std::expm1(-K * T));
}

/// Coefficient of d^2 in the subelliptic bound under CD(rho1, rho2, kappa, d).
inline double subelliptic_pointwise_rate(const gamma_calculus::CDParams& c, double p, double t) {
  if (!(t > 0.0)) throw InvalidInput("subelliptic bound needs t > 0");
  if (!(p > 1.0)) throw InvalidInput("subelliptic bound needs p > 1");
  const double rho1_minus = std::max(-c.rho1, 0.0);
  return (p / (p - 1.0)) * (1.0 + 2.0 * c.kappa / c.rho2 + 2.0 * rho1_minus * t) / (4.0 * t);
}

namespace closed_form {

/// ||exp(a x1)||_{L^p(mu_T^o)} on R^n.
inline double exp_lp_norm(double a, double o1, double T, double p) {
  return std::exp(a * o1 + 0.5 * p * a * a * T);
}

/// ||e^{sL} exp(a x1)||_{L^q(mu_t^o)} on R^n.
inline double exp_evolved_lp_norm(double a, double o1, double s, double t, double q) {
  return std::exp(0.5 * a * a * s) * exp_lp_norm(a, o1, t, q);
}

/// P(sup_{u <= t} |B_u| >= r) for standard Brownian motion in R^1, by the
/// reflection-principle series for the exit time of (-r, r).
inline double brownian_exit_probability(double r, double t) {
  if (t <= 0.0) return 0.0;
  const double s = std::sqrt(t);
  const auto tail = [&](double x) { return 0.5 * std::erfc(x / (s * std::sqrt(2.0))); };
  double stay = 0.0;
  for (int k = -50; k <= 50; ++k) {
    const double a = (4 * k - 1) * r, b = (4 * k + 1) * r, c = (4 * k + 3) * r;
    stay += (tail(a) - tail(b)) - (tail(b) - tail(c));
  }
  return std::clamp(1.0 - stay, 0.0, 1.0);
}

}  // namespace closed_form

namespace detail {

inline std::uint64_t sub_seed(std::uint64_t seed, std::uint64_t k) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (k + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

inline InequalityReport make_row(std::string claim, std::string suite, const GeometryId& g,
                                 std::string function) {
  InequalityReport r;
  r.claim = std::move(claim);
  r.suite = std::move(suite);
  r.geometry = g.id();
  r.function = std::move(function);
  return r;
}

inline std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

inline std::string point_str(std::span<const double> p) {
  std::string s = "(";
  for (std::size_t i = 0; i < p.size(); ++i) s += (i ? "," : "") + fmt(p[i]);
  return s + ")";
}

/// Sample points around x used to certify harmonicity near x.
inline std::vector<Point> certification_sample(const GeometryId& g, const Point& x) {
  std::vector<Point> out{x};
  CounterRng rng(0xCE57, 0);
  const int d = g.dim();
  for (int k = 0; k < 24; ++k) {
    std::vector<double> off(static_cast<std::size_t>(d));
    for (auto& v : off) v = 0.8 * (2.0 * rng.uniform() - 1.0);
    if (g.kind == GeometryKind::hyperbolic3) off[2] = std::exp(off[2]);
    out.push_back(transport(g, x, Point(off)));
  }
  return out;
}

inline void require_certified(const GeometryId& g, const TestFunction& f, const Point& x, FunctionClass want) {
  if (f.cls != want && !(want == FunctionClass::subharmonic && f.cls == FunctionClass::harmonic))
    throw ClassificationFailure(f.id, std::numeric_limits<double>::quiet_NaN());
  const auto sample = certification_sample(g, x);
  verify_harmonicity(g, f, sample);
}

/// ||f||_{L^p(mu_T^o)} by the best available route.
struct Norm {
  double value = 0.0;
  double stderr_ = 0.0;
  std::uint64_t n = 0;
  Method method = Method::quadrature;
};

inline Norm norm_of(const GeometryId& g, const TestFunction& f, const Point& o, double T, double p,
                    const CheckOptions& opt, RunContext& ctx, std::uint64_t seed_tag) {
  if (T == 0.0) return {std::abs(f(o)), 0.0, 0, Method::closed_form};
  if (f.exp_rate && g.kind == GeometryKind::euclidean) {
    const double v = closed_form::exp_lp_norm(*f.exp_rate, o[0], T, p);
    ctx.record("lp_norm", g, f.id, o, T, 0.0, p, v, 0.0, 0, "closed-form", 0);
    return {v, 0.0, 0, Method::closed_form};
  }
  if (g.has_exact_kernel()) {
    try {
      const auto e = lp_norm_quadrature(g, f, o, T, p);
      ctx.record("lp_norm", g, f.id, o, T, 0.0, p, e.value, 0.0, 0, "quadrature", 0);
      return {e.value, 0.0, 0, Method::quadrature};
    } catch (const Unsupported&) {
    }
  }
  SimConfig cfg = opt.sim;
  cfg.seed = sub_seed(opt.sim.seed, seed_tag);
  const auto e = lp_norm_batch(ctx.sample(g, o, T, cfg), f, p);
  ctx.record("lp_norm", g, f.id, o, T, 0.0, p, e.value, e.stderr_, e.n, "mc", cfg.seed);
  return {e.value, e.stderr_, e.n, Method::mc};
}

inline void set_provenance(InequalityReport& r, const SimConfig& cfg, std::uint64_t n, Method m, double dt) {
  r.provenance.seed = m == Method::mc ? cfg.seed : 0;
  r.provenance.n = n;
  r.provenance.dt = dt;
  r.provenance.method = std::string(to_string(m));
}

inline Method combine(Method a, Method b) {
  if (a == Method::mc || b == Method::mc) return Method::mc;
  if (a == Method::quadrature || b == Method::quadrature) return Method::quadrature;
  return Method::closed_form;
}

inline void verdict_for(InequalityReport& r, Method m, const TolerancePolicy& tol) {
  if (m == Method::mc) statistical_verdict(r, tol);
  else exact_verdict(r, tol);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Semigroup contraction
// ---------------------------------------------------------------------------

/// ||e^{tL} f||_{L^p(mu_{T-t}^o)} <= ||f||_{L^p(mu_T^o)}.
inline InequalityReport check_semigroup_contraction(const GeometryId& g, const TestFunction& f, const Point& o,
                                                    double T, double t, double p, const CheckOptions& opt,
                                                    RunContext& ctx) {
  if (!(t >= 0.0 && t < T)) throw InvalidInput("semigroup contraction needs 0 <= t < T");
  validate_point(g, o);
  auto r = detail::make_row("semigroup-contraction", "semigroup-contraction", g, f.id);
  r.param = t;
  const auto rhs = detail::norm_of(g, f, o, T, p, opt, ctx, 1);
  r.rhs = rhs.value;
  r.rhs_stderr = rhs.stderr_;
  Method lhs_method = Method::closed_form;
  if (t == 0.0) {
    r.lhs = rhs.value;
    r.lhs_stderr = rhs.stderr_;
    lhs_method = rhs.method;
    r.relation = Relation::equal;
    r.note = "t = 0: identity operator";
  } else if (f.exp_rate && g.kind == GeometryKind::euclidean) {
    r.lhs = closed_form::exp_evolved_lp_norm(*f.exp_rate, o[0], t, T - t, p);
  } else {
    std::optional<double> quad_lhs;
    if (g.has_exact_kernel()) {
      try {
        quad_lhs = lp_norm_quadrature(g, heat_evolved(g, f, t), o, T - t, p).value;
      } catch (const Unsupported&) {
      }
    }
    if (quad_lhs) {
      r.lhs = *quad_lhs;
      lhs_method = Method::quadrature;
    } else {
      // nested Monte Carlo: outer endpoints from o at T - t, inner sample of
      // increments from the origin at t moved onto each outer endpoint
      SimConfig outer = opt.sim, inner = opt.sim;
      outer.seed = detail::sub_seed(opt.sim.seed, 2);
      inner.seed = detail::sub_seed(opt.sim.seed, 3);
      inner.n_paths = std::max<std::uint64_t>(opt.n_inner, 10000);
      const auto xb = ctx.sample(g, o, T - t, outer);
      const auto yb = ctx.sample(g, origin(g), t, inner);
      std::vector<Point> xs;
      xs.reserve(xb.size());
      for (std::size_t i = 0; i < xb.size(); ++i) xs.emplace_back(xb[i]);
      std::vector<double> inner_var(xs.size());
      std::vector<double> vals(xs.size());
      parallel_for(xs.size(), [&](std::uint64_t j) {
        std::vector<double> buf(static_cast<std::size_t>(g.dim()));
        double s = 0.0, ss = 0.0;
        for (std::size_t i = 0; i < yb.size(); ++i) {
          transport_into(g, xs[j], yb[i], buf);
          const double v = f(buf);
          s += v;
          ss += v * v;
        }
        const double n = static_cast<double>(yb.size());
        vals[j] = s / n;
        inner_var[j] = std::max(0.0, (ss / n - vals[j] * vals[j]) * n / (n - 1.0));
      }, 16);
      std::vector<double> pw(vals.size());
      double bias = 0.0;
      for (std::size_t j = 0; j < vals.size(); ++j) {
        const double a = std::abs(vals[j]);
        pw[j] = std::pow(a, p);
        // second-order Jensen inflation of E|A_hat|^p
        bias += 0.5 * p * (p - 1.0) * std::pow(a, p - 2.0) * inner_var[j] / static_cast<double>(yb.size());
      }
      bias /= static_cast<double>(vals.size());
      const auto m = detail::moments(pw);
      r.lhs = std::pow(m.mean, 1.0 / p);
      r.lhs_stderr = std::pow(m.mean, 1.0 / p - 1.0) * m.sd / (p * std::sqrt(static_cast<double>(m.n)));
      lhs_method = Method::mc;
      r.note = "nested mc: outer n=" + std::to_string(xb.size()) + ", inner n=" + std::to_string(yb.size()) +
               "; Jensen bias inflates lhs by about " + detail::fmt(bias / (p * std::pow(m.mean, 1.0 - 1.0 / p))) +
               " (one-sided safe)";
      ctx.record("lp_norm", g, "e^{tL}" + f.id, o, T - t, t, p, r.lhs, r.lhs_stderr, m.n, "mc", outer.seed);
    }
  }
  const Method m = detail::combine(lhs_method, rhs.method);
  detail::set_provenance(r, opt.sim, rhs.n, m, 0.0);
  detail::verdict_for(r, m, ctx.tol);
  return r;
}

// ---------------------------------------------------------------------------
// Harmonic fixed points and subharmonic growth
// ---------------------------------------------------------------------------

namespace detail {

struct HeatValue {
  double value = 0.0;
  double stderr_ = 0.0;
  double bias = 0.0;
  std::uint64_t n = 0;
  double dt = 0.0;
  Method method = Method::quadrature;
  std::string note;
};

/// (e^{tL} f)(x) at each t. Exact-kernel geometries with a reduction use
/// quadrature; H^3 otherwise uses coupled Euler paths at dt, 2dt, 4dt for a
/// bias allowance; the Heisenberg group uses one set of paths for all t.
inline std::vector<HeatValue> heat_values(const GeometryId& g, const TestFunction& f, const Point& x,
                                          const std::vector<double>& ts, const CheckOptions& opt, RunContext& ctx,
                                          bool prefer_quadrature) {
  std::vector<HeatValue> out(ts.size());
  std::vector<std::size_t> todo;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    if (ts[i] == 0.0) {
      out[i] = {f(x), 0.0, 0.0, 0, 0.0, Method::closed_form, "t = 0"};
      continue;
    }
    if (prefer_quadrature && g.has_exact_kernel()) {
      try {
        out[i].value = heat_op_quadrature(g, f, x, ts[i]).value;
        out[i].method = Method::quadrature;
        ctx.record("heat_op", g, f.id, x, 0.0, ts[i], 0.0, out[i].value, 0.0, 0, "quadrature", 0);
        continue;
      } catch (const Unsupported&) {
      }
    }
    todo.push_back(i);
  }
  if (todo.empty()) return out;
  SimConfig cfg = opt.sim;
  cfg.seed = sub_seed(opt.sim.seed, 4);
  if (g.kind == GeometryKind::hyperbolic3) {
    for (std::size_t i : todo) {
      SimConfig c = cfg;
      c.dt = opt.sim.dt > 0.0 ? opt.sim.dt : default_dt(g, ts[i]);
      const auto levels = simulate_coupled(g, x, ts[i], c, 3);
      const auto fine = heat_op_batch(levels[0], f);
      std::vector<double> d12(levels[0].size()), d24(levels[0].size());
      for (std::size_t k = 0; k < d12.size(); ++k) {
        const double a = f(levels[0][k]), b = f(levels[1][k]), c4 = f(levels[2][k]);
        d12[k] = a - b;
        d24[k] = b - c4;
      }
      const auto m12 = moments(d12), m24 = moments(d24);
      const double se12 = m12.sd / std::sqrt(static_cast<double>(m12.n));
      // weak order one: bias(dt) ~ -(m(dt) - m(2dt))
      out[i] = {fine.value, fine.stderr_, std::abs(m12.mean) + 3.0 * se12, fine.n, levels[0].dt, Method::mc,
                "euler dt=" + fmt(levels[0].dt) + "; m(dt)-m(2dt)=" + fmt(m12.mean) + " (se " + fmt(se12) +
                    "), m(2dt)-m(4dt)=" + fmt(m24.mean)};
      ctx.record("heat_op", g, f.id, x, 0.0, ts[i], 0.0, fine.value, fine.stderr_, fine.n, "mc", c.seed);
    }
    return out;
  }
  std::vector<double> times;
  for (std::size_t i : todo) times.push_back(ts[i]);
  const auto snaps = simulate_snapshots(g, x, times, cfg);
  for (std::size_t j = 0; j < todo.size(); ++j) {
    const std::size_t i = todo[j];
    const auto& b = *std::find_if(snaps.begin(), snaps.end(), [&](const EndpointBatch& s) {
      return std::abs(s.t - ts[i]) <= 0.5 * std::max(s.dt, 1e-12);
    });
    const auto e = heat_op_batch(b, f);
    out[i] = {e.value, e.stderr_, 0.0, e.n, b.dt, Method::mc, ""};
    ctx.record("heat_op", g, f.id, x, 0.0, ts[i], 0.0, e.value, e.stderr_, e.n, "mc", cfg.seed);
  }
  return out;
}

}  // namespace detail

/// (e^{tL} f)(x) = f(x) for harmonic f, one row per t.
inline std::vector<InequalityReport> check_harmonic_fixed_point(const GeometryId& g, const TestFunction& f,
                                                                const Point& x, const std::vector<double>& ts,
                                                                const CheckOptions& opt, RunContext& ctx) {
  validate_point(g, x);
  detail::require_certified(g, f, x, FunctionClass::harmonic);
  const bool prefer_quadrature = g.kind == GeometryKind::euclidean;
  const auto vals = detail::heat_values(g, f, x, ts, opt, ctx, prefer_quadrature);
  std::vector<InequalityReport> rows;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    auto r = detail::make_row("harmonic-fixed-point", "harmonic-fixed-point", g, f.id);
    r.relation = Relation::equal;
    r.param = ts[i];
    r.lhs = vals[i].value;
    r.lhs_stderr = vals[i].stderr_;
    r.rhs = f(x);
    r.bias_allowance = vals[i].bias;
    r.note = "x=" + detail::point_str(x) + (vals[i].note.empty() ? "" : "; " + vals[i].note);
    detail::set_provenance(r, opt.sim, vals[i].n, vals[i].method, vals[i].dt);
    if (vals[i].method == Method::mc) r.provenance.seed = detail::sub_seed(opt.sim.seed, 4);
    detail::verdict_for(r, vals[i].method, ctx.tol);
    rows.push_back(std::move(r));
  }
  return rows;
}

/// f(x) <= (e^{tL} f)(x) for subharmonic f, and (e^{tL} f)(x) non-decreasing
/// along the t grid.
inline std::vector<InequalityReport> check_subharmonic_growth(const GeometryId& g, const TestFunction& f,
                                                              const Point& x, std::vector<double> ts,
                                                              const CheckOptions& opt, RunContext& ctx) {
  validate_point(g, x);
  detail::require_certified(g, f, x, FunctionClass::subharmonic);
  std::sort(ts.begin(), ts.end());
  const bool prefer_quadrature = g.kind == GeometryKind::euclidean;
  const auto vals = detail::heat_values(g, f, x, ts, opt, ctx, prefer_quadrature);
  std::vector<InequalityReport> rows;
  const auto finish = [&](InequalityReport& r, const detail::HeatValue& v) {
    detail::set_provenance(r, opt.sim, v.n, v.method, v.dt);
    if (v.method == Method::mc) r.provenance.seed = detail::sub_seed(opt.sim.seed, 4);
    detail::verdict_for(r, v.method, ctx.tol);
  };
  for (std::size_t i = 0; i < ts.size(); ++i) {
    auto r = detail::make_row("subharmonic-growth", "subharmonic-growth", g, f.id);
    r.param = ts[i];
    r.lhs = f(x);
    r.rhs = vals[i].value;
    r.rhs_stderr = vals[i].stderr_;
    r.bias_allowance = vals[i].bias;
    r.note = "x=" + detail::point_str(x) + (vals[i].note.empty() ? "" : "; " + vals[i].note);
    finish(r, vals[i]);
    rows.push_back(std::move(r));
  }
  for (std::size_t i = 0; i + 1 < ts.size(); ++i) {
    auto r = detail::make_row("subharmonic-monotone-in-t", "subharmonic-growth", g, f.id);
    r.param = ts[i + 1];
    r.lhs = vals[i].value;
    r.lhs_stderr = vals[i].stderr_;
    r.rhs = vals[i + 1].value;
    r.rhs_stderr = vals[i + 1].stderr_;
    r.bias_allowance = vals[i].bias + vals[i + 1].bias;
    r.note = "t " + detail::fmt(ts[i]) + " -> " + detail::fmt(ts[i + 1]);
    auto v = vals[i + 1];
    v.method = detail::combine(vals[i].method, vals[i + 1].method);
    finish(r, v);
    rows.push_back(std::move(r));
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Norm monotonicity and hypercontractivity
// ---------------------------------------------------------------------------

/// ||f||_{L^p(mu_s^o)} <= ||f||_{L^p(mu_t^o)} <= ||f||_{L^p(mu_T^o)}; two rows.
inline std::vector<InequalityReport> check_norm_monotonicity(const GeometryId& g, const TestFunction& f,
                                                             const Point& o, double s, double t, double T,
                                                             double p, const CheckOptions& opt,
                                                             RunContext& ctx) {
  if (!(0.0 <= s && s <= t && t <= T)) throw InvalidInput("norm monotonicity needs 0 <= s <= t <= T");
  validate_point(g, o);
  if (f.cls == FunctionClass::generic)
    throw ClassificationFailure(f.id, std::numeric_limits<double>::quiet_NaN());
  const std::array<double, 3> times{s, t, T};
  std::array<detail::Norm, 3> norms;
  bool mc = false;
  for (std::size_t i = 0; i < 3; ++i) {
    if (times[i] == 0.0) {
      norms[i] = {std::abs(f(o)), 0.0, 0, Method::closed_form};
      continue;
    }
    if (f.exp_rate && g.kind == GeometryKind::euclidean) {
      norms[i] = {closed_form::exp_lp_norm(*f.exp_rate, o[0], times[i], p), 0.0, 0, Method::closed_form};
      continue;
    }
    if (g.has_exact_kernel()) {
      try {
        norms[i] = {lp_norm_quadrature(g, f, o, times[i], p).value, 0.0, 0, Method::quadrature};
        ctx.record("lp_norm", g, f.id, o, times[i], 0.0, p, norms[i].value, 0.0, 0, "quadrature", 0);
        continue;
      } catch (const Unsupported&) {
      }
    }
    mc = true;
    norms[i].method = Method::mc;
  }
  SimConfig cfg = opt.sim;
  cfg.seed = detail::sub_seed(opt.sim.seed, 5);
  if (mc) {
    std::vector<double> need;
    for (std::size_t i = 0; i < 3; ++i)
      if (norms[i].method == Method::mc) need.push_back(times[i]);
    const auto snaps = simulate_snapshots(g, o, need, cfg);
    for (std::size_t i = 0; i < 3; ++i) {
      if (norms[i].method != Method::mc) continue;
      const auto& b = *std::find_if(snaps.begin(), snaps.end(), [&](const EndpointBatch& x) {
        return std::abs(x.t - times[i]) <= 0.5 * std::max(x.dt, 1e-12);
      });
      const auto e = lp_norm_batch(b, f, p);
      norms[i] = {e.value, e.stderr_, e.n, Method::mc};
      ctx.record("lp_norm", g, f.id, o, times[i], 0.0, p, e.value, e.stderr_, e.n, "mc", cfg.seed);
    }
  }
  std::vector<InequalityReport> rows;
  for (std::size_t i = 0; i < 2; ++i) {
    auto r = detail::make_row("norm-monotonicity", "norm-monotonicity", g, f.id);
    r.param = times[i + 1];
    r.lhs = norms[i].value;
    r.lhs_stderr = norms[i].stderr_;
    r.rhs = norms[i + 1].value;
    r.rhs_stderr = norms[i + 1].stderr_;
    r.note = "p=" + detail::fmt(p) + ", times " + detail::fmt(times[i]) + " <= " + detail::fmt(times[i + 1]);
    const Method m = detail::combine(norms[i].method, norms[i + 1].method);
    detail::set_provenance(r, cfg, std::max(norms[i].n, norms[i + 1].n), m, 0.0);
    detail::verdict_for(r, m, ctx.tol);
    rows.push_back(std::move(r));
  }
  return rows;
}

/// ||e^{(T-t)L} f||_{L^q(mu_t^o)} <= ||f||_{L^p(mu_T^o)} with q from the
/// Ricci bound. `q_factor` != 1 perturbs q (falsification control).
inline InequalityReport check_hypercontractivity(const GeometryId& g, const TestFunction& f, const Point& o,
                                                 double T, double t, double p, RunContext& ctx,
                                                 double q_factor = 1.0) {
  if (g.kind == GeometryKind::heisenberg)
    throw Unsupported("hypercontractivity check needs a Ricci lower bound");
  if (!(p > 1.0)) throw InvalidInput("hypercontractivity needs p > 1");
  validate_point(g, o);
  const double K = g.ricci_lower_bound();
  const double q = hypercontractive_exponent(K, p, T, t) * q_factor;
  auto r = detail::make_row("hypercontractivity", "hypercontractivity", g, f.id);
  r.param = t;
  r.control = q_factor != 1.0;
  Method m = Method::quadrature;
  if (f.exp_rate && g.kind == GeometryKind::euclidean) {
    r.lhs = closed_form::exp_evolved_lp_norm(*f.exp_rate, o[0], T - t, t, q);
    r.rhs = closed_form::exp_lp_norm(*f.exp_rate, o[0], T, p);
    m = Method::closed_form;
    if (q_factor == 1.0 && std::abs((T - t) + q * t - p * T) < 1e-12 * T) r.relation = Relation::equal;
  } else {
    r.lhs = lp_norm_quadrature(g, heat_evolved(g, f, T - t), o, t, q).value;
    r.rhs = lp_norm_quadrature(g, f, o, T, p).value;
  }
  ctx.record("lp_norm", g, "e^{(T-t)L}" + f.id, o, t, T - t, q, r.lhs, 0.0, 0, to_string(m), 0);
  ctx.record("lp_norm", g, f.id, o, T, 0.0, p, r.rhs, 0.0, 0, to_string(m), 0);
  r.note = "K=" + detail::fmt(K) + ", p=" + detail::fmt(p) + ", q=" + detail::fmt(q) +
           (r.control ? " (q inflated x" + detail::fmt(q_factor) + ")" : "");
  detail::set_provenance(r, SimConfig{}, 0, m, 0.0);
  exact_verdict(r, ctx.tol);
  return r;
}

// ---------------------------------------------------------------------------
// Pointwise bounds
// ---------------------------------------------------------------------------

/// |f(x)| <= ||f||_{L^p(mu_T^o)} exp(c d(x,o)^2) at each x. On Riemannian
/// geometries c comes from the Ricci bound; on the Heisenberg group from the
/// CD parameters at the free time `t_sub` (defaults to T).
inline std::vector<InequalityReport> check_pointwise_bound(const GeometryId& g, const TestFunction& f,
                                                           const Point& o, double T, double p,
                                                           std::span<const Point> xs, const CheckOptions& opt,
                                                           RunContext& ctx, std::optional<double> t_sub = {},
                                                           double rate_sign = 1.0) {
  if (!(p > 1.0)) throw InvalidInput("pointwise bound needs p > 1");
  validate_point(g, o);
  if (g.kind == GeometryKind::heisenberg) detail::require_certified(g, f, o, FunctionClass::harmonic);
  else detail::require_certified(g, f, o, FunctionClass::subharmonic);
  const auto norm = detail::norm_of(g, f, o, T, p, opt, ctx, 6);
  double c = 0.0;
  std::string form;
  if (g.kind == GeometryKind::heisenberg) {
    const double ts = t_sub.value_or(T);
    c = subelliptic_pointwise_rate(g.cd_params(), p, ts);
    form = "subelliptic, t=" + detail::fmt(ts);
  } else {
    const double K = g.ricci_lower_bound();
    c = riemannian_pointwise_rate(K, p, T);
    form = K > 0.0 ? "K>0 form" : "K=0 form";
  }
  std::vector<InequalityReport> rows;
  for (const auto& x : xs) {
    validate_point(g, x);
    const double d = distance(g, x, o);
    auto r = detail::make_row("pointwise-bound", "pointwise-bound", g, f.id);
    r.param = d;
    r.lhs = std::abs(f(x));
    const double factor = std::exp(rate_sign * c * d * d);
    r.rhs = norm.value * factor;
    r.rhs_stderr = norm.stderr_ * factor;
    r.control = rate_sign != 1.0;
    r.note = form + ", rate=" + detail::fmt(rate_sign * c) + ", x=" + detail::point_str(x);
    detail::set_provenance(r, opt.sim, norm.n, norm.method, 0.0);
    if (norm.method == Method::mc) r.provenance.seed = detail::sub_seed(opt.sim.seed, 6);
    detail::verdict_for(r, norm.method, ctx.tol);
    rows.push_back(std::move(r));
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Li-Yau Harnack inequality with explicit constants
// ---------------------------------------------------------------------------

struct HarnackTuple {
  double t = 0.0, T = 0.0;
  Point x, z, y;
};

/// Deterministic grid of (t, T, x, z, y) with points within distance
/// `radius` of the origin; includes coincident x = z and t near T.
inline std::vector<HarnackTuple> harnack_grid(const GeometryId& g, std::size_t count, std::uint64_t seed,
                                              double radius = 4.0) {
  if (!g.has_exact_kernel() || (g.kind == GeometryKind::euclidean && g.n > 3))
    throw Unsupported("harnack grid needs R^1..R^3 or H^3");
  CounterRng rng(seed, 0x4C59);
  const Point o = origin(g);
  const auto random_point = [&] {
    const double r = radius * std::cbrt(rng.uniform());
    return geodesic_point(g, o, r, 2.0 * rng.uniform() - 1.0, 2.0 * std::numbers::pi * rng.uniform());
  };
  const std::array<double, 6> fixed_t{0.25, 0.5, 0.1, 0.9, 0.99, 0.999};
  std::vector<HarnackTuple> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    HarnackTuple h;
    h.T = 1.0;
    h.t = k % 2 == 0 ? fixed_t[(k / 2) % fixed_t.size()] : 0.02 + 0.97 * rng.uniform();
    h.x = random_point();
    h.z = k % 5 == 0 ? h.x : random_point();
    h.y = random_point();
    out.push_back(std::move(h));
  }
  return out;
}

/// Li-Yau: mu_t(x,y) <= mu_T(z,y) (T/t)^D exp(d(x,z)^2/(T-t) + D K (T-t)/4),
/// over a grid, in log space. With `drop_volume_factor` the (T/t)^D factor
/// is omitted (falsification control). One aggregate row.
inline InequalityReport check_harnack_liyau(const GeometryId& g, std::span<const HarnackTuple> grid,
                                            RunContext& ctx, bool drop_volume_factor = false) {
  if (!g.has_exact_kernel()) throw Unsupported("Li-Yau check needs an exact kernel");
  if (grid.empty()) throw InvalidInput("empty Li-Yau grid");
  const double D = g.dim();
  const double K = g.ricci_lower_bound();
  double worst = -std::numeric_limits<double>::infinity();
  std::size_t worst_at = 0, violations = 0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const auto& h = grid[k];
    if (!(h.t > 0.0 && h.t < h.T)) throw InvalidInput("Li-Yau tuple needs 0 < t < T");
    const double lhs = log_heat_kernel_density(g, h.t, h.x, h.y);
    const double dxz = distance(g, h.x, h.z);
    const double rhs = log_heat_kernel_density(g, h.T, h.z, h.y) +
                       (drop_volume_factor ? 0.0 : D * std::log(h.T / h.t)) + dxz * dxz / (h.T - h.t) +
                       D * K * (h.T - h.t) / 4.0;
    const double gap = lhs - rhs;  // log of lhs/rhs
    if (gap > std::log1p(ctx.tol.exact_rel_tol)) ++violations;
    if (gap > worst) {
      worst = gap;
      worst_at = k;
    }
  }
  auto r = detail::make_row("li-yau-harnack", "li-yau-harnack", g, "heat-kernel");
  r.control = drop_volume_factor;
  r.param = static_cast<double>(grid.size());
  r.lhs = worst;
  r.rhs = 0.0;
  const auto& w = grid[worst_at];
  r.note = "max log(lhs/rhs) over " + std::to_string(grid.size()) + " tuples; violations=" +
           std::to_string(violations) + "; worst at t=" + detail::fmt(w.t) + " T=" + detail::fmt(w.T) +
           (drop_volume_factor ? "; (T/t)^D factor dropped" : "");
  detail::set_provenance(r, SimConfig{}, grid.size(), Method::closed_form, 0.0);
  // relative slack of 1e-9 on the ratio is log1p(1e-9) in log space
  r.margin = r.rhs - r.lhs;
  r.verdict = r.margin >= -std::log1p(ctx.tol.exact_rel_tol) ? Verdict::pass_exact : Verdict::fail;
  if (!std::isfinite(worst)) r.verdict = Verdict::inconclusive;
  return r;
}

// ---------------------------------------------------------------------------
// Forms with existential constants
// ---------------------------------------------------------------------------

/// Sample of log mu_t at distance d.
struct KernelSample {
  double t = 0.0;
  double d = 0.0;
  double log_mu = 0.0;
};

/// Relative stability band for fitted constants.
inline constexpr double kFitStability = 0.2;

namespace detail {

/// Least squares of y against the columns of X (normal equations, small k).
inline std::optional<std::vector<double>> least_squares(const std::vector<std::vector<double>>& X,
                                                        const std::vector<double>& y) {
  const std::size_t n = y.size();
  if (n == 0) return std::nullopt;
  const std::size_t k = X.front().size();
  if (n < k + 1) return std::nullopt;
  std::vector<std::vector<double>> A(k, std::vector<double>(k + 1, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t a = 0; a < k; ++a) {
      for (std::size_t b = 0; b < k; ++b) A[a][b] += X[i][a] * X[i][b];
      A[a][k] += X[i][a] * y[i];
    }
  double scale = 0.0;
  for (std::size_t a = 0; a < k; ++a) scale = std::max(scale, std::abs(A[a][a]));
  for (std::size_t c = 0; c < k; ++c) {
    std::size_t piv = c;
    for (std::size_t rr = c + 1; rr < k; ++rr)
      if (std::abs(A[rr][c]) > std::abs(A[piv][c])) piv = rr;
    if (std::abs(A[piv][c]) <= 1e-10 * scale) return std::nullopt;
    std::swap(A[c], A[piv]);
    for (std::size_t rr = 0; rr < k; ++rr) {
      if (rr == c) continue;
      const double m = A[rr][c] / A[c][c];
      for (std::size_t cc = c; cc <= k; ++cc) A[rr][cc] -= m * A[c][cc];
    }
  }
  std::vector<double> out(k);
  for (std::size_t c = 0; c < k; ++c) out[c] = A[c][k] / A[c][c];
  return out;
}

inline InequalityReport stability_row(std::string claim, const GeometryId& g, std::string what,
                                      std::optional<double> a, std::optional<double> b, std::string note) {
  auto r = make_row(std::move(claim), "kernel-bound-forms", g, std::move(what));
  r.relation = Relation::equal;
  r.lhs = a.value_or(std::numeric_limits<double>::quiet_NaN());
  r.rhs = b.value_or(std::numeric_limits<double>::quiet_NaN());
  r.margin = r.rhs - r.lhs;
  r.provenance.method = "fit";
  const bool ok = a && b && std::isfinite(*a) && std::isfinite(*b) && *a > 0.0 && *b > 0.0 &&
                  std::abs(*a - *b) <= kFitStability * std::max(*a, *b);
  r.verdict = ok ? Verdict::pass : Verdict::inconclusive;
  r.note = std::move(note) + (ok ? "" : "; fit unstable or underdetermined");
  return r;
}

}  // namespace detail

/// Fits log mu_t = c0 + (nu/2) log(1 + 1/(2t)) + c1 t - kappa d^2/(2t) and
/// returns kappa, or nothing when the fit is underdetermined.
inline std::optional<double> fit_gaussian_rate(std::span<const KernelSample> samples, double nu) {
  std::vector<std::vector<double>> X;
  std::vector<double> y;
  for (const auto& s : samples) {
    if (!std::isfinite(s.log_mu)) continue;
    X.push_back({1.0, s.t, -s.d * s.d / (2.0 * s.t)});
    y.push_back(s.log_mu - 0.5 * nu * std::log1p(1.0 / (2.0 * s.t)));
  }
  if (y.size() < 4) return std::nullopt;
  const auto c = detail::least_squares(X, y);
  if (!c) return std::nullopt;
  return (*c)[2];
}

/// Gaussian-type form of the kernel: fits kappa on two disjoint sample sets
/// and reports whether the fitted constant is finite, positive and stable.
inline InequalityReport check_gaussian_form(const GeometryId& g, std::span<const KernelSample> grid_a,
                                            std::span<const KernelSample> grid_b, double nu) {
  const auto ka = fit_gaussian_rate(grid_a, nu);
  const auto kb = fit_gaussian_rate(grid_b, nu);
  std::string note = "fitted kappa on disjoint grids (" + std::to_string(grid_a.size()) + ", " +
                     std::to_string(grid_b.size()) + " samples)";
  if (ka) note += "; kappa_a=" + detail::fmt(*ka);
  if (kb) note += "; kappa_b=" + detail::fmt(*kb);
  return detail::stability_row("gaussian-form-fit", g, "heat-kernel", ka, kb, note);
}

/// Lower-bound form exp(-2n^2/T - (D-1)^2 k T/8 - (D-1) sqrt(k) n) for
/// inf_{B(x,2n)} mu_T(x, .) = mu_T at radius 2n, k = K/(D-1).
inline double liyau_lower_form(double n, double T, double D, double K) {
  const double k = K / (D - 1.0);
  return -2.0 * n * n / T - (D - 1.0) * (D - 1.0) * k * T / 8.0 - (D - 1.0) * std::sqrt(k) * n;
}

/// Fits C(D,T) = min over a grid of mu_T(2n) / form(n) for each T on grid A
/// and grid B; returns a stability row and a hold-out row per T (the
/// constant fitted on A must bound the kernel on B from below).
inline std::vector<InequalityReport> check_lower_bound_form(const GeometryId& g, std::span<const double> Ts,
                                                            std::span<const double> ns_a,
                                                            std::span<const double> ns_b, RunContext& ctx) {
  if (!g.has_exact_kernel()) throw Unsupported("lower-bound form needs an exact kernel");
  const double D = g.dim();
  const double K = g.ricci_lower_bound();
  if (K == 0.0) throw Unsupported("lower-bound form is stated for K > 0");
  std::vector<InequalityReport> rows;
  for (double T : Ts) {
    const auto fit = [&](std::span<const double> ns) -> std::optional<double> {
      if (ns.size() < 2) return std::nullopt;
      double best = std::numeric_limits<double>::infinity();
      for (double n : ns) best = std::min(best, log_heat_kernel_radial(g, T, 2.0 * n) - liyau_lower_form(n, T, D, K));
      return std::exp(best);
    };
    const auto ca = fit(ns_a), cb = fit(ns_b);
    rows.push_back(detail::stability_row("lower-bound-form-fit", g, "heat-kernel", ca, cb,
                                         "C(D,T) by min ratio, T=" + detail::fmt(T)));
    rows.back().param = T;
    if (ca) {
      double worst = std::numeric_limits<double>::infinity();
      for (double n : ns_b)
        worst = std::min(worst, log_heat_kernel_radial(g, T, 2.0 * n) - liyau_lower_form(n, T, D, K) - std::log(*ca));
      auto r = detail::make_row("lower-bound-form-holdout", "kernel-bound-forms", g, "heat-kernel");
      r.param = T;
      r.lhs = 0.0;
      r.rhs = worst;  // min log(mu / (C form)) on held-out points
      r.note = "held-out min log(mu/(C form)) with C fitted on grid A";
      detail::set_provenance(r, SimConfig{}, ns_b.size(), Method::closed_form, 0.0);
      exact_verdict(r, ctx.tol);
      rows.push_back(std::move(r));
    }
  }
  return rows;
}

/// Heisenberg heat kernel estimated from endpoint counts in coordinate boxes
/// of half-widths (eps, eps, eps_z) centred at each target; boxes are in
/// exponential coordinates, where Haar measure is Lebesgue measure.
inline std::vector<double> histogram_density(const EndpointBatch& b, std::span<const Point> targets, double eps,
                                             double eps_z) {
  std::vector<double> out(targets.size(), 0.0);
  const double vol = 8.0 * eps * eps * eps_z;
  for (std::size_t j = 0; j < targets.size(); ++j) {
    std::uint64_t hits = 0;
    for (std::size_t i = 0; i < b.size(); ++i) {
      const auto p = b[i];
      hits += std::abs(p[0] - targets[j][0]) <= eps && std::abs(p[1] - targets[j][1]) <= eps &&
              std::abs(p[2] - targets[j][2]) <= eps_z;
    }
    out[j] = static_cast<double>(hits) / (static_cast<double>(b.size()) * vol);
  }
  return out;
}

/// Parabolic Harnack form mu_s(x,y) <= mu_t(z,y) exp(K (t/s + d(x,z)^2/(2(t-s)))):
/// the smallest admissible K on a set of (s, t, x, z) samples with y = e.
inline std::optional<double> fit_parabolic_harnack(std::span<const double> log_mu_s,
                                                   std::span<const double> log_mu_t,
                                                   std::span<const double> weights) {
  double best = -std::numeric_limits<double>::infinity();
  bool any = false;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (!std::isfinite(log_mu_s[i]) || !std::isfinite(log_mu_t[i])) continue;
    best = std::max(best, (log_mu_s[i] - log_mu_t[i]) / weights[i]);
    any = true;
  }
  if (!any || weights.size() < 2) return std::nullopt;
  return std::max(best, 0.0);
}

// ---------------------------------------------------------------------------
// Curvature-dimension
// ---------------------------------------------------------------------------

/// CD inequality for one polynomial: rhs = worst margin, lhs = 0.
inline InequalityReport check_cd_row(const std::string& id, const Polynomial& f, const gamma_calculus::CDParams& prm,
                                     std::span<const std::array<double, 3>> points, std::span<const double> nus,
                                     RunContext& ctx, bool control = false) {
  const auto rep = gamma_calculus::check_cd(f, prm, points, nus, gamma_calculus::kSumOfSquares);
  auto r = detail::make_row("curvature-dimension", "cd-check", GeometryId::heisenberg(), id);
  r.control = control;
  r.lhs = 0.0;
  r.rhs = rep.worst_margin;
  r.param = rep.witness_nu;
  r.note = "CD(" + detail::fmt(prm.rho1) + "," + detail::fmt(prm.rho2) + "," + detail::fmt(prm.kappa) + "," +
           detail::fmt(prm.d) + ") c=1; witness " + detail::point_str(rep.witness_point) +
           " nu=" + detail::fmt(rep.witness_nu);
  detail::set_provenance(r, SimConfig{}, points.size() * nus.size(), Method::closed_form, 0.0);
  r.provenance.method = "symbolic";
  r.margin = r.rhs - r.lhs;
  r.verdict = rep.worst_margin >= -ctx.tol.abs_tol ? Verdict::pass_exact : Verdict::fail;
  return r;
}

// ---------------------------------------------------------------------------
// Finite spaces
// ---------------------------------------------------------------------------

/// Random sweep over finite Markov kernels: one aggregate contraction row
/// per exponent, plus mass conservation, duality, the Jensen step and A1 = 1.
/// The control claims the reversed inequality.
inline std::vector<InequalityReport> check_finite_sweep(std::size_t instances, std::uint64_t seed) {
  using namespace measure;
  CounterRng rng(seed, 0xF1);
  std::vector<RandomInstance> inst;
  inst.reserve(instances);
  for (std::size_t i = 0; i < instances; ++i) inst.push_back(random_instance(rng));
  std::vector<InequalityReport> rows;
  const auto aggregate = [&](std::string claim, double worst, std::size_t bad, double tol, double param,
                             std::string note) {
    InequalityReport r;
    r.claim = std::move(claim);
    r.suite = "finite-sweep";
    r.geometry = "finite";
    r.function = "random";
    r.lhs = worst;
    r.rhs = 0.0;
    r.param = param;
    r.margin = -worst;
    r.provenance = {seed, instances, 0.0, "exact"};
    r.verdict = worst <= tol ? Verdict::pass_exact : Verdict::fail;
    r.note = std::move(note) + "; violations=" + std::to_string(bad) + " of " + std::to_string(instances);
    rows.push_back(std::move(r));
  };
  for (double p : kSweepExponents) {
    double worst = -kInfinity;
    std::size_t bad = 0;
    for (const auto& in : inst) {
      const auto r = check_contraction(in.kernel, in.nu1, in.f, p);
      worst = std::max(worst, r.lhs - r.rhs);
      bad += r.verdict == Verdict::fail;
    }
    aggregate("markov-kernel-contraction", worst, bad, kContractionTol, p,
              "max ||Af||_p(nu1) - ||f||_p(nu2), p=" + detail::fmt(p));
  }
  {
    double worst = 0.0, dual = 0.0, jensen = -kInfinity, fixed = 0.0;
    std::size_t bad_mass = 0, bad_dual = 0, bad_jensen = 0, bad_fixed = 0;
    for (const auto& in : inst) {
      const auto nu2 = pushforward(in.kernel, in.nu1);
      const double dm = std::abs(nu2.total() - in.nu1.total());
      worst = std::max(worst, dm);
      bad_mass += dm > kStochasticTol;
      const double scale = 1.0 + std::abs(integrate(in.f, nu2));
      const double dd = std::abs(integrate(apply_kernel(in.kernel, in.f), in.nu1) - integrate(in.f, nu2)) / scale;
      dual = std::max(dual, dd);
      bad_dual += dd > kContractionTol;
      std::vector<double> absf(in.f.size());
      for (std::size_t y = 0; y < absf.size(); ++y) absf[y] = std::abs(in.f[y]);
      const FiniteFunction af(absf);
      const auto A1 = apply_kernel(in.kernel, af);
      for (double p : {1.5, 2.0, 3.0, 10.0}) {
        std::vector<double> pw(absf.size());
        for (std::size_t y = 0; y < pw.size(); ++y) pw[y] = std::pow(absf[y], p);
        const auto Ap = apply_kernel(in.kernel, FiniteFunction(pw));
        for (std::size_t x = 0; x < A1.size(); ++x) {
          const double gap = (std::pow(A1[x], p) - Ap[x]) / std::max(1.0, Ap[x]);
          jensen = std::max(jensen, gap);
          bad_jensen += gap > kContractionTol;
        }
      }
      const auto one = apply_kernel(in.kernel, FiniteFunction(std::vector<double>(in.f.size(), 1.0)));
      for (std::size_t x = 0; x < one.size(); ++x) {
        fixed = std::max(fixed, std::abs(one[x] - 1.0));
        bad_fixed += std::abs(one[x] - 1.0) > kStochasticTol;
      }
    }
    aggregate("mass-conservation", worst, bad_mass, kStochasticTol, 0.0, "max |nu2(Y) - nu1(X)|");
    aggregate("duality-identity", dual, bad_dual, kContractionTol, 0.0,
              "max relative |sum Af nu1 - sum f nu2|");
    aggregate("jensen-step", jensen, bad_jensen, kContractionTol, 0.0,
              "max ((A|f|)^p - A|f|^p) / max(1, A|f|^p), p in {1.5,2,3,10}");
    aggregate("constants-fixed", fixed, bad_fixed, kStochasticTol, 0.0, "max |A1 - 1|");
  }
  {
    double worst = -kInfinity;
    std::size_t bad = 0;
    for (const auto& in : inst) {
      const auto r = check_contraction(in.kernel, in.nu1, in.f, 2.0);
      worst = std::max(worst, r.rhs - r.lhs);
      bad += r.rhs - r.lhs > kContractionTol;
    }
    aggregate("markov-kernel-contraction-reversed", worst, bad, kContractionTol, 2.0,
              "control: claims ||f||_2(nu2) <= ||Af||_2(nu1)");
    rows.back().control = true;
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Simulator fidelity and probes
// ---------------------------------------------------------------------------

namespace detail {

inline InequalityReport moment_row(std::string claim, const GeometryId& g, std::string what, double t,
                                   const Moments& m, double target, double bias, const SimConfig& cfg, double dt,
                                   const TolerancePolicy& tol) {
  auto r = make_row(std::move(claim), "simulator-fidelity", g, std::move(what));
  r.relation = Relation::equal;
  r.param = t;
  r.lhs = m.mean;
  r.lhs_stderr = m.sd / std::sqrt(static_cast<double>(m.n));
  r.rhs = target;
  r.bias_allowance = bias;
  r.provenance = {cfg.seed, m.n, dt, "mc"};
  statistical_verdict(r, tol);
  return r;
}

}  // namespace detail

/// Heisenberg endpoint moments from the origin: E[X^2] = E[Y^2] = t,
/// E[Z] = 0, E[Z^2] = t^2/4. The polygonal area has E[Z^2] = t^2/4 (1 - h/t),
/// so t h / 4 is allowed as bias. The control claims E[Z^2] = t^2/2.
inline std::vector<InequalityReport> check_heisenberg_moments(double t, const SimConfig& cfg, RunContext& ctx) {
  const auto g = GeometryId::heisenberg();
  const auto b = ctx.sample(g, origin(g), t, cfg);
  std::vector<double> x2(b.size()), y2(b.size()), z(b.size()), z2(b.size());
  for (std::size_t i = 0; i < b.size(); ++i) {
    const auto p = b[i];
    x2[i] = p[0] * p[0];
    y2[i] = p[1] * p[1];
    z[i] = p[2];
    z2[i] = p[2] * p[2];
  }
  const double h = b.dt;
  std::vector<InequalityReport> rows;
  rows.push_back(detail::moment_row("endpoint-moment", g, "x^2", t, detail::moments(x2), t, 0.0, cfg, h, ctx.tol));
  rows.push_back(detail::moment_row("endpoint-moment", g, "y^2", t, detail::moments(y2), t, 0.0, cfg, h, ctx.tol));
  rows.push_back(detail::moment_row("endpoint-moment", g, "z", t, detail::moments(z), 0.0, 0.0, cfg, h, ctx.tol));
  const auto mz2 = detail::moments(z2);
  rows.push_back(detail::moment_row("endpoint-moment", g, "z^2", t, mz2, t * t / 4.0, t * h / 4.0, cfg, h, ctx.tol));
  rows.back().note = "allowance t*dt/4 for the polygonal area";
  rows.push_back(detail::moment_row("endpoint-moment-wrong", g, "z^2", t, mz2, t * t / 2.0, t * h / 4.0, cfg, h,
                                    ctx.tol));
  rows.back().control = true;
  rows.back().note = "control: claims E[z^2] = t^2/2";
  for (const auto& r : rows)
    ctx.record("moment", g, r.function, origin(g), 0.0, t, 0.0, r.lhs, r.lhs_stderr, r.provenance.n, "mc", cfg.seed);
  return rows;
}

/// CDF of d(o, X_t) on an exact-kernel geometry, tabulated on [0, r_max].
class RadialCdf {
 public:
  RadialCdf(const GeometryId& g, double t, std::size_t cells = 4000) : r_max_(0.0) {
    detail::require_exact_kernel(g);
    r_max_ = (g.kind == GeometryKind::hyperbolic3 ? t : 0.0) + 12.0 * std::sqrt(t) + 1.0;
    F_.assign(cells + 1, 0.0);
    for (std::size_t i = 1; i <= cells; ++i) {
      const double a = r_max_ * static_cast<double>(i - 1) / static_cast<double>(cells);
      const double b = r_max_ * static_cast<double>(i) / static_cast<double>(cells);
      F_[i] = F_[i - 1] + quad::integrate([&](double r) { return radial_density(g, t, r); }, a, b, 1e-10, 1e-16);
    }
  }
  double operator()(double r) const {
    const double cells = static_cast<double>(F_.size() - 1);
    const double x = r / r_max_ * cells;
    if (x >= cells) return F_.back();
    const auto k = static_cast<std::size_t>(x);
    return F_[k] + (x - static_cast<double>(k)) * (F_[k + 1] - F_[k]);
  }
  double total() const { return F_.back(); }

 private:
  double r_max_;
  std::vector<double> F_;
};

/// Kolmogorov-Smirnov distance between the radial endpoint distribution and
/// the exact CDF.
inline double radial_ks(const EndpointBatch& b, const RadialCdf& cdf) {
  std::vector<double> r(b.size());
  for (std::size_t i = 0; i < b.size(); ++i) r[i] = distance(b.geometry, b.start, b[i]);
  std::sort(r.begin(), r.end());
  const double n = static_cast<double>(r.size());
  double ks = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    const double F = cdf(r[i]);
    ks = std::max({ks, std::abs(F - static_cast<double>(i) / n), std::abs(F - static_cast<double>(i + 1) / n)});
  }
  return ks;
}

/// Ratio a halving of dt must achieve on the KS distance (first-order weak
/// error gives about 1/2).
inline constexpr double kKsHalvingRatio = 0.6;

/// KS distance of H^3 radial endpoints to the exact CDF on coupled Euler
/// levels dt, 2dt, ..., one row per halving: KS(dt) <= 0.6 KS(2dt). The
/// control claims the ratio 0.25.
inline std::vector<InequalityReport> check_ks_convergence(double t, const SimConfig& cfg, int levels,
                                                          RunContext& ctx) {
  const auto g = GeometryId::hyperbolic3();
  const auto batches = simulate_coupled(g, origin(g), t, cfg, levels);
  const RadialCdf cdf(g, t);
  std::vector<double> ks;
  for (const auto& b : batches) {
    ks.push_back(radial_ks(b, cdf));
    ctx.record("radial_ks", g, "d(o,X_t)", origin(g), 0.0, t, 0.0, ks.back(), 0.0, b.size(), "mc", cfg.seed);
  }
  // sampling floor of the KS statistic: sd about 0.26/sqrt(n)
  const double se = 0.26 / std::sqrt(static_cast<double>(batches.front().size()));
  std::vector<InequalityReport> rows;
  const auto row = [&](std::size_t l, double ratio, bool control) {
    auto r = detail::make_row(control ? "ks-halving-too-fast" : "ks-halving", "simulator-fidelity", g, "d(o,X_t)");
    r.control = control;
    r.param = batches[l].dt;
    r.lhs = ks[l];
    r.rhs = ratio * ks[l + 1];
    r.lhs_stderr = se;
    r.rhs_stderr = ratio * se;
    r.provenance = {cfg.seed, batches[l].size(), batches[l].dt, "mc"};
    r.note = "KS(dt=" + detail::fmt(batches[l].dt) + ")=" + detail::fmt(ks[l]) + ", KS(2dt)=" + detail::fmt(ks[l + 1]) +
             ", ratio bound " + detail::fmt(ratio);
    statistical_verdict(r, ctx.tol);
    rows.push_back(std::move(r));
  };
  for (std::size_t l = 0; l + 1 < ks.size(); ++l) row(l, kKsHalvingRatio, false);
  if (ks.size() >= 2) row(ks.size() - 2, 0.25, true);
  return rows;
}

/// R^1 probes against closed forms: P(|B_s| <= delta) = erf(delta / sqrt(2 s))
/// and the reflection-principle exit probability (the discrete skeleton can
/// only underestimate it). The control adds 0.02 to the locality oracle.
inline std::vector<InequalityReport> check_locality(double delta, double s, double r_exit, double t_exit,
                                                    const SimConfig& cfg, RunContext& ctx) {
  const auto g = GeometryId::euclidean(1);
  const Point x{0.0};
  std::vector<InequalityReport> rows;
  const auto loc = locality_probe(g, x, delta, s, cfg);
  const double oracle = std::erf(delta / std::sqrt(2.0 * s));
  for (bool control : {false, true}) {
    auto r = detail::make_row(control ? "locality-shifted" : "locality", "locality", g, "1{d<=delta}");
    r.control = control;
    r.relation = Relation::equal;
    r.param = s;
    r.lhs = loc.p;
    r.lhs_stderr = loc.stderr_;
    r.rhs = oracle + (control ? 0.02 : 0.0);
    r.provenance = {cfg.seed, loc.n, 0.0, "mc"};
    r.note = "delta=" + detail::fmt(delta) + (control ? "; control: oracle + 0.02" : "");
    statistical_verdict(r, ctx.tol);
    rows.push_back(std::move(r));
  }
  const auto ex = exit_time_probe(g, x, r_exit, t_exit, cfg);
  auto r = detail::make_row("exit-time", "locality", g, "1{tau<=t}");
  r.param = t_exit;
  r.lhs = ex.p;
  r.lhs_stderr = ex.stderr_;
  r.rhs = closed_form::brownian_exit_probability(r_exit, t_exit);
  r.provenance = {cfg.seed, ex.n, t_exit / 1024.0, "mc"};
  r.note = "r=" + detail::fmt(r_exit) + "; " + ex.note;
  statistical_verdict(r, ctx.tol);
  rows.push_back(std::move(r));
  ctx.record("locality", g, "1{d<=delta}", x, 0.0, s, 0.0, loc.p, loc.stderr_, loc.n, "mc", cfg.seed);
  ctx.record("exit_time", g, "1{tau<=t}", x, 0.0, t_exit, 0.0, ex.p, ex.stderr_, ex.n, "mc", cfg.seed);
  return rows;
}

// ---------------------------------------------------------------------------
// Curvature-dimension sweep
// ---------------------------------------------------------------------------

/// Bracket identity Y1 Y2 f - Y2 Y1 f = Z f and [Y_i, Z] = 0 on random
/// polynomials; lhs is the largest coefficient of any residual.
inline InequalityReport check_bracket_identity(std::size_t count, std::uint64_t seed) {
  using namespace gamma_calculus;
  CounterRng rng(seed, 0xB7);
  double worst = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    const auto f = random_polynomial(rng, 3);
    const auto a = Y1()(Y2()(f)) - Y2()(Y1()(f)) - Z()(f);
    const auto b = Y1()(Z()(f)) - Z()(Y1()(f));
    const auto c = Y2()(Z()(f)) - Z()(Y2()(f));
    worst = std::max({worst, a.max_abs_coeff(), b.max_abs_coeff(), c.max_abs_coeff()});
  }
  auto r = detail::make_row("bracket-identity", "cd-check", GeometryId::heisenberg(), "random cubic");
  r.relation = Relation::equal;
  r.lhs = worst;
  r.rhs = 0.0;
  r.margin = -worst;
  r.provenance = {seed, count, 0.0, "symbolic"};
  r.verdict = worst == 0.0 ? Verdict::pass_exact : Verdict::fail;
  r.note = "max coefficient of [Y1,Y2]f - Zf, [Y1,Z]f, [Y2,Z]f";
  return r;
}

/// CD margins over random polynomials of degree <= 3 at random points of
/// [-2,2]^3; one aggregate row.
inline InequalityReport check_cd_sweep(std::size_t polys, std::size_t points, std::span<const double> nus,
                                       const gamma_calculus::CDParams& prm, std::uint64_t seed, RunContext& ctx) {
  using namespace gamma_calculus;
  CounterRng rng(seed, 0xCD);
  double worst = std::numeric_limits<double>::infinity();
  std::size_t bad = 0;
  CDReport at;
  for (std::size_t i = 0; i < polys; ++i) {
    const auto f = random_polynomial(rng, 3);
    std::vector<std::array<double, 3>> pts(points);
    for (auto& p : pts)
      for (auto& v : p) v = 4.0 * rng.uniform() - 2.0;
    const auto rep = check_cd(f, prm, pts, nus);
    bad += rep.worst_margin < -kCdSlack;
    if (rep.worst_margin < worst) {
      worst = rep.worst_margin;
      at = rep;
    }
  }
  auto r = detail::make_row("curvature-dimension-sweep", "cd-check", GeometryId::heisenberg(), "random cubic");
  r.lhs = 0.0;
  r.rhs = worst;
  r.margin = worst;
  r.provenance = {seed, polys * points * nus.size(), 0.0, "symbolic"};
  r.verdict = worst >= -ctx.tol.abs_tol ? Verdict::pass_exact : Verdict::fail;
  r.note = std::to_string(polys) + " polynomials x " + std::to_string(points) + " points; violations=" +
           std::to_string(bad) + "; witness " + detail::point_str(at.witness_point) + " nu=" + detail::fmt(at.witness_nu);
  return r;
}

}  // namespace heatgauge
