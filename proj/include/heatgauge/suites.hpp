#pragma once

// Experiment configs, the suite catalog and report serialization.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "heatgauge/verifier.hpp"

namespace heatgauge {

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------

/// Malformed or inconsistent configuration. `line` is 1-based, 0 if unknown.
class ConfigError : public InvalidInput {
 public:
  ConfigError(std::string field, std::size_t line, const std::string& what)
      : InvalidInput(format(field, line, what)), field_(std::move(field)), line_(line), detail_(what) {}
  const std::string& field() const noexcept { return field_; }
  const std::string& detail() const noexcept { return detail_; }
  std::size_t line() const noexcept { return line_; }

 private:
  static std::string format(const std::string& field, std::size_t line, const std::string& what) {
    std::string s = "config";
    if (line) s += " line " + std::to_string(line);
    if (!field.empty()) s += " field '" + field + "'";
    return s + ": " + what;
  }
  std::string field_;
  std::size_t line_;
  std::string detail_;
};

/// A check failed numerically; carries the claim being evaluated.
class ClaimError : public Error {
 public:
  ClaimError(std::string claim, const std::string& what)
      : Error("claim '" + claim + "': " + what), claim_(std::move(claim)) {}
  const std::string& claim() const noexcept { return claim_; }

 private:
  std::string claim_;
};

struct TimeGrid {
  std::optional<double> s, t, T;
};

/// Every field is optional; unset fields keep the suite defaults.
struct ExperimentConfig {
  std::vector<std::string> suites;
  std::optional<std::string> geometry;
  std::vector<std::string> functions;
  std::optional<std::vector<double>> o;
  TimeGrid times;
  std::optional<double> p;
  std::optional<std::uint64_t> n_paths;
  std::optional<std::uint64_t> seed;
  std::optional<double> dt;
  TolerancePolicy tol;
  std::optional<std::string> cache_dir;

  void validate() const {
    const double s = times.s.value_or(0.0);
    const double t = times.t.value_or(s);
    const double T = times.T.value_or(std::max(t, 1.0));
    if (!(0.0 <= s && s <= t && t <= T)) throw ConfigError("times", 0, "need 0 <= s <= t <= T");
    if (p && !(*p >= 1.0 && std::isfinite(*p))) throw ConfigError("p", 0, "need 1 <= p < inf");
    if (n_paths && *n_paths < 1) throw ConfigError("n_paths", 0, "need n_paths >= 1");
    if (dt && !(*dt > 0.0)) throw ConfigError("dt", 0, "need dt > 0");
    if (geometry) (void)GeometryId::parse(*geometry);
    if (!(tol.sigmas > 0.0 && tol.abs_tol >= 0.0 && tol.exact_rel_tol >= 0.0))
      throw ConfigError("tolerance", 0, "tolerances must be non-negative");
  }
};

namespace detail {

inline std::size_t line_of_offset(const std::string& text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

inline std::size_t line_of_key(const std::string& text, const std::string& key) {
  const auto pos = text.find("\"" + key + "\"");
  return pos == std::string::npos ? 0 : line_of_offset(text, pos);
}

}  // namespace detail

/// Parses the JSON config schema
/// {suite, geometry, functions[], o, times{s,t,T}, p, n_paths, seed, dt,
///  tolerance{sigmas, abs_tol, exact_rel_tol}, cache_dir}.
inline ExperimentConfig parse_config(const std::string& text) {
  using nlohmann::json;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("", detail::line_of_offset(text, e.byte > 0 ? e.byte - 1 : 0), e.what());
  }
  if (!j.is_object()) throw ConfigError("", 1, "top level must be an object");
  ExperimentConfig c;
  const auto fail = [&](const std::string& key, const std::string& what) {
    throw ConfigError(key, detail::line_of_key(text, key), what);
  };
  const auto number = [&](const json& v, const std::string& key) {
    if (!v.is_number()) fail(key, "expected a number");
    return v.get<double>();
  };
  const auto count = [&](const json& v, const std::string& key) {
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
      fail(key, "expected a non-negative integer");
    return v.get<std::uint64_t>();
  };
  for (const auto& [key, v] : j.items()) {
    if (key == "suite" || key == "suites") {
      if (v.is_string()) c.suites.push_back(v.get<std::string>());
      else if (v.is_array()) {
        for (const auto& s : v) {
          if (!s.is_string()) fail(key, "expected suite names");
          c.suites.push_back(s.get<std::string>());
        }
      } else fail(key, "expected a string or an array of strings");
    } else if (key == "geometry") {
      if (!v.is_string()) fail(key, "expected a string");
      c.geometry = v.get<std::string>();
      try {
        (void)GeometryId::parse(*c.geometry);
      } catch (const InvalidInput& e) {
        fail(key, e.what());
      }
    } else if (key == "functions") {
      if (!v.is_array()) fail(key, "expected an array of function ids");
      for (const auto& s : v) {
        if (!s.is_string()) fail(key, "expected function ids");
        c.functions.push_back(s.get<std::string>());
      }
    } else if (key == "o") {
      if (!v.is_array() || v.empty()) fail(key, "expected an array of coordinates");
      std::vector<double> o;
      for (const auto& x : v) o.push_back(number(x, key));
      c.o = std::move(o);
    } else if (key == "times") {
      if (!v.is_object()) fail(key, "expected an object {s, t, T}");
      for (const auto& [tk, tv] : v.items()) {
        if (tk == "s") c.times.s = number(tv, tk);
        else if (tk == "t") c.times.t = number(tv, tk);
        else if (tk == "T") c.times.T = number(tv, tk);
        else fail(tk, "unknown time key (expected s, t, T)");
      }
    } else if (key == "p") {
      c.p = number(v, key);
    } else if (key == "n_paths") {
      c.n_paths = count(v, key);
    } else if (key == "seed") {
      c.seed = count(v, key);
    } else if (key == "dt") {
      c.dt = number(v, key);
    } else if (key == "tolerance") {
      if (!v.is_object()) fail(key, "expected an object");
      for (const auto& [tk, tv] : v.items()) {
        if (tk == "sigmas") c.tol.sigmas = number(tv, tk);
        else if (tk == "abs_tol") c.tol.abs_tol = number(tv, tk);
        else if (tk == "exact_rel_tol") c.tol.exact_rel_tol = number(tv, tk);
        else fail(tk, "unknown tolerance key");
      }
    } else if (key == "cache_dir") {
      if (!v.is_string()) fail(key, "expected a path");
      c.cache_dir = v.get<std::string>();
    } else {
      fail(key, "unknown field");
    }
  }
  try {
    c.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(e.field(), detail::line_of_key(text, e.field()), e.detail());
  }
  return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ConfigError("", 0, "cannot read " + file.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

// ---------------------------------------------------------------------------
// Suites
// ---------------------------------------------------------------------------

/// Resolves suite defaults against config overrides.
class SuiteScope {
 public:
  SuiteScope(std::string suite, const ExperimentConfig& cfg, RunContext& run)
      : suite_(std::move(suite)), cfg_(cfg), run_(run) {}

  RunContext& run() const { return run_; }
  const std::string& name() const { return suite_; }
  std::uint64_t seed() const { return cfg_.seed.value_or(1); }

  /// The defaults, or the configured geometry when the suite covers its kind.
  std::vector<GeometryId> geometries(std::vector<GeometryId> defaults) const {
    if (!cfg_.geometry) return defaults;
    const auto g = GeometryId::parse(*cfg_.geometry);
    for (const auto& d : defaults)
      if (d.kind == g.kind) return {g};
    throw ConfigError("geometry", 0, "suite '" + suite_ + "' does not cover " + g.id());
  }

  /// Configured functions present in g's catalog, or the defaults.
  std::vector<TestFunction> functions(const GeometryId& g, std::vector<std::string> defaults) const {
    std::vector<TestFunction> out;
    const auto& ids = cfg_.functions.empty() ? defaults : cfg_.functions;
    for (const auto& id : ids)
      if (auto f = lookup(g, id)) out.push_back(std::move(*f));
    return out;
  }

  Point point(const GeometryId& g, Point fallback) const {
    if (!cfg_.o) return fallback;
    if (static_cast<int>(cfg_.o->size()) != g.dim())
      throw ConfigError("o", 0, g.id() + " needs " + std::to_string(g.dim()) + " coordinates");
    Point p(*cfg_.o);
    try {
      validate_point(g, p);
    } catch (const InvalidInput& e) {
      throw ConfigError("o", 0, e.what());
    }
    return p;
  }

  double s(double d) const { return cfg_.times.s.value_or(d); }
  double t(double d) const { return cfg_.times.t.value_or(d); }
  double T(double d) const { return cfg_.times.T.value_or(d); }
  double p(double d) const { return cfg_.p.value_or(d); }
  bool has_t() const { return cfg_.times.t.has_value(); }

  CheckOptions options(std::uint64_t default_n, std::uint64_t tag) const {
    CheckOptions o;
    o.sim.n_paths = cfg_.n_paths.value_or(default_n);
    o.sim.seed = detail::sub_seed(seed(), tag);
    o.sim.dt = cfg_.dt.value_or(0.0);
    return o;
  }

  static std::optional<TestFunction> lookup(const GeometryId& g, const std::string& id) {
    if (id == "const") return constant_function(1.0);
    if (g.kind == GeometryKind::euclidean && id.rfind("exp(", 0) == 0 && id.size() > 8 &&
        id.substr(id.size() - 4) == "*x1)") {
      try {
        return exponential_function(g, std::stod(id.substr(4, id.size() - 8)));
      } catch (const std::logic_error&) {
        return std::nullopt;
      }
    }
    for (auto& f : catalog_functions(g))
      if (f.id == id) return f;
    return std::nullopt;
  }

 private:
  std::string suite_;
  const ExperimentConfig& cfg_;
  RunContext& run_;
};

namespace suites {

using Rows = std::vector<InequalityReport>;

}  // namespace suites

/// Histogram density fit and parabolic-Harnack fit on Heisenberg endpoints.
inline suites::Rows heisenberg_kernel_forms(const GeometryId& g, const SuiteScope& s);

namespace suites {

inline void append(Rows& out, Rows more) {
  for (auto& r : more) out.push_back(std::move(r));
}

inline Point unit_x(const GeometryId& g) {
  Point p = origin(g);
  p[0] = 1.0;
  return p;
}

inline Rows finite_sweep(const SuiteScope& s) {
  return check_finite_sweep(1000, s.seed());
}

inline Rows semigroup_contraction(const SuiteScope& s) {
  Rows rows;
  auto& ctx = s.run();
  const double T = s.T(1.0), p = s.p(2.0);
  const std::vector<double> ts = s.has_t() ? std::vector<double>{s.t(0.5)} : std::vector<double>{0.0, 0.25, 0.5, 0.75};
  for (const auto& g : s.geometries({GeometryId::euclidean(1), GeometryId::hyperbolic3(), GeometryId::heisenberg()})) {
    std::vector<std::string> defaults;
    switch (g.kind) {
      case GeometryKind::euclidean: defaults = {"exp(x1)", "x1^2"}; break;
      case GeometryKind::hyperbolic3: defaults = {"halfspace", "ball1"}; break;
      case GeometryKind::heisenberg: defaults = {"x^2"}; break;
    }
    const auto o = s.point(g, origin(g));
    for (const auto& f : s.functions(g, defaults))
      for (double t : ts) {
        if (t >= T) continue;
        const auto opt = s.options(10000, 10);
        rows.push_back(check_semigroup_contraction(g, f, o, T, t, p, opt, ctx));
      }
  }
  // p = 1 on exp(x1) is an equality case; shrinking the rhs must fail
  const auto g = GeometryId::euclidean(1);
  auto r = check_semigroup_contraction(g, exponential_function(g, 1.0), origin(g), 1.0, 0.5, 1.0,
                                       s.options(10000, 10), ctx);
  r.rhs *= 0.95;
  r.control = true;
  r.note = "control: rhs shrunk 5% on the p=1 equality case";
  exact_verdict(r, ctx.tol);
  rows.push_back(std::move(r));
  return rows;
}

inline Rows harmonic_fixed_point(const SuiteScope& s) {
  Rows rows;
  auto& ctx = s.run();
  const std::vector<double> ts = s.has_t() ? std::vector<double>{s.t(1.0)} : std::vector<double>{0.25, 0.5, 1.0};
  for (const auto& g : s.geometries({GeometryId::euclidean(2), GeometryId::hyperbolic3(), GeometryId::heisenberg()})) {
    std::vector<std::string> defaults;
    Point x = origin(g);
    switch (g.kind) {
      case GeometryKind::euclidean:
        defaults = {"x1", "x1*x2"};
        x = unit_x(g);
        if (g.n >= 2) x[1] = -0.5;
        break;
      case GeometryKind::hyperbolic3: defaults = {"poisson", "halfspace"}; break;
      case GeometryKind::heisenberg:
        defaults = {"z", "xy", "x^2-y^2"};
        x = unit_x(g);
        break;
    }
    x = s.point(g, x);
    for (const auto& f : s.functions(g, defaults)) {
      if (f.cls != FunctionClass::harmonic) continue;
      const std::uint64_t n = g.kind == GeometryKind::hyperbolic3 ? 20000 : 100000;
      append(rows, check_harmonic_fixed_point(g, f, x, ts, s.options(n, 20), ctx));
    }
  }
  // a subharmonic function claimed as a fixed point
  const auto g = GeometryId::heisenberg();
  const auto f = find_function(g, "x^2+y^2");
  const auto opt = s.options(20000, 21);
  const auto v = detail::heat_values(g, f, unit_x(g), {1.0}, opt, ctx, false);
  auto r = detail::make_row("harmonic-fixed-point", "harmonic-fixed-point", g, f.id);
  r.control = true;
  r.relation = Relation::equal;
  r.param = 1.0;
  r.lhs = v[0].value;
  r.lhs_stderr = v[0].stderr_;
  r.rhs = f(unit_x(g));
  r.note = "control: subharmonic function claimed as a fixed point";
  detail::set_provenance(r, opt.sim, v[0].n, v[0].method, v[0].dt);
  r.provenance.seed = detail::sub_seed(opt.sim.seed, 4);
  statistical_verdict(r, ctx.tol);
  rows.push_back(std::move(r));
  return rows;
}

inline Rows subharmonic_growth(const SuiteScope& s) {
  Rows rows;
  auto& ctx = s.run();
  const std::vector<double> ts = s.has_t() ? std::vector<double>{s.t(1.0)} : std::vector<double>{0.25, 0.5, 1.0};
  for (const auto& g : s.geometries({GeometryId::euclidean(1), GeometryId::hyperbolic3(), GeometryId::heisenberg()})) {
    std::vector<std::string> defaults;
    switch (g.kind) {
      case GeometryKind::euclidean: defaults = {"x1^2", "|x|^2"}; break;
      case GeometryKind::hyperbolic3: defaults = {"x1^2"}; break;
      case GeometryKind::heisenberg: defaults = {"x^2+y^2", "x^2"}; break;
    }
    const auto x = s.point(g, origin(g));
    for (const auto& f : s.functions(g, defaults)) {
      if (f.cls == FunctionClass::generic) continue;
      const std::uint64_t n = g.kind == GeometryKind::hyperbolic3 ? 20000 : 50000;
      append(rows, check_subharmonic_growth(g, f, x, ts, s.options(n, 30), ctx));
    }
  }
  // reversed claim: e^{tL} f(0) <= f(0) for f = x^2 + y^2
  const auto g = GeometryId::heisenberg();
  const auto f = find_function(g, "x^2+y^2");
  const auto opt = s.options(20000, 31);
  const auto v = detail::heat_values(g, f, origin(g), {1.0}, opt, ctx, false);
  auto r = detail::make_row("subharmonic-growth-reversed", "subharmonic-growth", g, f.id);
  r.control = true;
  r.param = 1.0;
  r.lhs = v[0].value;
  r.lhs_stderr = v[0].stderr_;
  r.rhs = f(origin(g));
  r.note = "control: claims e^{tL}f(0) <= f(0)";
  detail::set_provenance(r, opt.sim, v[0].n, v[0].method, v[0].dt);
  r.provenance.seed = detail::sub_seed(opt.sim.seed, 4);
  statistical_verdict(r, ctx.tol);
  rows.push_back(std::move(r));
  return rows;
}

inline Rows norm_monotonicity(const SuiteScope& s) {
  Rows rows;
  auto& ctx = s.run();
  const double S = s.s(0.25), t = s.t(0.5), T = s.T(1.0), p = s.p(2.0);
  for (const auto& g : s.geometries({GeometryId::euclidean(1), GeometryId::hyperbolic3(), GeometryId::heisenberg()})) {
    std::vector<std::string> defaults;
    switch (g.kind) {
      case GeometryKind::euclidean: defaults = {"x1", "const", "x1^2"}; break;
      case GeometryKind::hyperbolic3: defaults = {"halfspace", "poisson"}; break;
      case GeometryKind::heisenberg: defaults = {"xy"}; break;
    }
    const auto o = s.point(g, origin(g));
    for (const auto& f : s.functions(g, defaults)) {
      if (f.cls == FunctionClass::generic) continue;
      append(rows, check_norm_monotonicity(g, f, o, S, t, T, p, s.options(50000, 40), ctx));
    }
  }
  // reversed order on R^1, f = x1
  const auto g = GeometryId::euclidean(1);
  auto rev = check_norm_monotonicity(g, find_function(g, "x1"), origin(g), 0.25, 0.5, 1.0, 2.0,
                                     s.options(1000, 41), ctx);
  auto r = rev[0];
  std::swap(r.lhs, r.rhs);
  r.claim = "norm-monotonicity-reversed";
  r.control = true;
  r.note = "control: claims ||f||_p(mu_t) <= ||f||_p(mu_s)";
  exact_verdict(r, ctx.tol);
  rows.push_back(std::move(r));
  return rows;
}

inline Rows hypercontractivity(const SuiteScope& s) {
  Rows rows;
  auto& ctx = s.run();
  const double T = s.T(1.0), t = s.t(0.5), p = s.p(2.0);
  for (const auto& g : s.geometries({GeometryId::euclidean(1), GeometryId::hyperbolic3()})) {
    std::vector<std::string> defaults;
    if (g.kind == GeometryKind::euclidean) defaults = {"exp(x1)", "x1", "x1^2"};
    else defaults = {"ball1", "halfspace", "poisson"};
    const auto o = s.point(g, origin(g));
    for (const auto& f : s.functions(g, defaults)) rows.push_back(check_hypercontractivity(g, f, o, T, t, p, ctx));
  }
  const auto g = GeometryId::euclidean(1);
  rows.push_back(check_hypercontractivity(g, exponential_function(g, 1.0), origin(g), 1.0, 0.5, 2.0, ctx, 1.05));
  return rows;
}

/// Points at distances 0..d_max in a few directions.
inline std::vector<Point> distance_grid(const GeometryId& g, const Point& o, double d_max, int radii) {
  std::vector<Point> xs;
  for (int i = 0; i <= radii; ++i) {
    const double r = d_max * i / radii;
    if (g.kind == GeometryKind::euclidean && g.n == 1) {
      xs.push_back(geodesic_point(g, o, r, 1.0, 0.0));
      if (i > 0) xs.push_back(geodesic_point(g, o, r, -1.0, 0.0));
      continue;
    }
    for (double u : {-0.9, 0.0, 0.9})
      for (double phi : {0.0, 0.5 * std::numbers::pi, std::numbers::pi}) {
        xs.push_back(geodesic_point(g, o, r, u, phi));
        if (i == 0) break;
      }
  }
  return xs;
}

/// 50 Heisenberg points at CC distance up to about 3.
inline std::vector<Point> heisenberg_grid(const Point& o) {
  std::vector<Point> xs;
  CounterRng rng(0x4E15, 0);
  const auto g = GeometryId::heisenberg();
  xs.push_back(o);
  while (xs.size() < 50) {
    const double r = 2.0 * rng.uniform(), phi = 2.0 * std::numbers::pi * rng.uniform();
    const double z = 3.0 * (2.0 * rng.uniform() - 1.0);
    xs.push_back(transport(g, o, Point{r * std::cos(phi), r * std::sin(phi), z}));
  }
  return xs;
}

inline Rows pointwise_bound(const SuiteScope& s) {
  Rows rows;
  auto& ctx = s.run();
  const double T = s.T(1.0), p = s.p(2.0);
  for (const auto& g : s.geometries({GeometryId::euclidean(1), GeometryId::hyperbolic3(), GeometryId::heisenberg()})) {
    const auto o = s.point(g, origin(g));
    std::vector<std::string> defaults;
    switch (g.kind) {
      case GeometryKind::euclidean: defaults = {"x1", "x1^2"}; break;
      case GeometryKind::hyperbolic3: defaults = {"halfspace"}; break;
      case GeometryKind::heisenberg: defaults = {"x"}; break;
    }
    for (const auto& f : s.functions(g, defaults)) {
      if (g.kind == GeometryKind::heisenberg) {
        if (f.cls != FunctionClass::harmonic) continue;
        const auto xs = heisenberg_grid(o);
        const auto opt = s.options(100000, 50);
        append(rows, check_pointwise_bound(g, f, o, T, p, xs, opt, ctx, T));
        append(rows, check_pointwise_bound(g, f, o, T, p, xs, opt, ctx, 0.5 * T));
      } else {
        if (f.cls == FunctionClass::generic) continue;
        const auto xs = distance_grid(g, o, 4.0, 16);
        append(rows, check_pointwise_bound(g, f, o, T, p, xs, s.options(100000, 50), ctx));
      }
    }
  }
  // negated exponent on R^1, f = x1, at d = 1
  const auto g = GeometryId::euclidean(1);
  const std::vector<Point> xs{Point{1.0}};
  append(rows, check_pointwise_bound(g, find_function(g, "x1"), origin(g), 1.0, 2.0, xs, s.options(1000, 51), ctx,
                                     std::nullopt, -1.0));
  return rows;
}

inline Rows li_yau_harnack(const SuiteScope& s) {
  Rows rows;
  auto& ctx = s.run();
  const std::size_t n = 10000;
  for (const auto& g : s.geometries({GeometryId::euclidean(3), GeometryId::hyperbolic3()})) {
    const auto grid = harnack_grid(g, n, detail::sub_seed(s.seed(), 60));
    rows.push_back(check_harnack_liyau(g, grid, ctx));
  }
  const auto g = GeometryId::euclidean(3);
  const auto grid = harnack_grid(g, 2000, detail::sub_seed(s.seed(), 61));
  rows.push_back(check_harnack_liyau(g, grid, ctx, true));
  return rows;
}

/// Exact-kernel samples on a (t, d) grid.
inline std::vector<KernelSample> kernel_grid(const GeometryId& g, std::span<const double> ts,
                                             std::span<const double> ds) {
  std::vector<KernelSample> out;
  for (double t : ts)
    for (double d : ds) out.push_back({t, d, log_heat_kernel_radial(g, t, d)});
  return out;
}

inline Rows kernel_bound_forms(const SuiteScope& s) {
  Rows rows;
  auto& ctx = s.run();
  for (const auto& g : s.geometries({GeometryId::euclidean(1), GeometryId::hyperbolic3(), GeometryId::heisenberg()})) {
    if (g.kind == GeometryKind::euclidean) {
      const std::vector<double> ta{0.25, 0.5, 1.0, 2.0}, tb{0.35, 0.7, 1.4, 2.8};
      const std::vector<double> da{0.0, 0.5, 1.0, 1.5, 2.0}, db{0.25, 0.75, 1.25, 1.75, 2.25};
      const auto a = kernel_grid(g, ta, da), b = kernel_grid(g, tb, db);
      rows.push_back(check_gaussian_form(g, a, b, g.dim()));
      const std::vector<KernelSample> one{a.front()};
      rows.push_back(check_gaussian_form(g, one, one, g.dim()));
      rows.back().claim = "gaussian-form-fit-degenerate";
      rows.back().note += "; single-point grid";
    } else if (g.kind == GeometryKind::hyperbolic3) {
      const std::vector<double> Ts{0.5, 1.0, 2.0};
      std::vector<double> na, nb;
      for (int i = 0; i < 8; ++i) {
        na.push_back(0.25 + 0.5 * i);
        nb.push_back(0.5 + 0.5 * i);
      }
      append(rows, check_lower_bound_form(g, Ts, na, nb, ctx));
    } else {
      append(rows, heisenberg_kernel_forms(g, s));
    }
  }
  return rows;
}

inline Rows cd_check(const SuiteScope& s) {
  Rows rows;
  auto& ctx = s.run();
  const auto prm = gamma_calculus::kHeisenbergCD;
  std::vector<std::array<double, 3>> pts{{0.0, 0.0, 0.0}};
  for (double x : {-2.0, -1.0, 0.5, 2.0})
    for (double y : {-1.5, 0.0, 1.0})
      for (double z : {-1.0, 0.0, 2.0}) pts.push_back({x, y, z});
  const std::vector<double> nus{0.1, 1.0, 10.0};
  for (const auto& f : catalog_functions(GeometryId::heisenberg()))
    rows.push_back(check_cd_row(f.id, *f.polynomial, prm, pts, nus, ctx));
  rows.push_back(check_bracket_identity(500, detail::sub_seed(s.seed(), 70)));
  rows.push_back(check_cd_sweep(500, 20, nus, prm, detail::sub_seed(s.seed(), 71), ctx));
  auto doubled = prm;
  doubled.rho2 *= 2.0;
  rows.push_back(check_cd_row("z", Polynomial::z(), doubled, pts, nus, ctx, true));
  rows.back().note += "; control: rho2 doubled";
  return rows;
}

inline Rows simulator_fidelity(const SuiteScope& s) {
  Rows rows;
  auto& ctx = s.run();
  const double t = s.t(1.0);
  auto opt = s.options(100000, 80);
  append(rows, check_heisenberg_moments(t, opt.sim, ctx));
  auto ks = s.options(200000, 81).sim;
  ks.dt = t / 32.0;
  append(rows, check_ks_convergence(t, ks, 5, ctx));
  return rows;
}

inline Rows locality(const SuiteScope& s) {
  return check_locality(1.0, 0.25, 1.0, 0.25, s.options(100000, 90).sim, s.run());
}

}  // namespace suites

struct SuiteInfo {
  std::string name;
  std::function<suites::Rows(const SuiteScope&)> run;
};

inline const std::vector<SuiteInfo>& suite_catalog() {
  static const std::vector<SuiteInfo> all{
      {"finite-sweep", suites::finite_sweep},
      {"semigroup-contraction", suites::semigroup_contraction},
      {"harmonic-fixed-point", suites::harmonic_fixed_point},
      {"subharmonic-growth", suites::subharmonic_growth},
      {"norm-monotonicity", suites::norm_monotonicity},
      {"hypercontractivity", suites::hypercontractivity},
      {"pointwise-bound", suites::pointwise_bound},
      {"li-yau-harnack", suites::li_yau_harnack},
      {"kernel-bound-forms", suites::kernel_bound_forms},
      {"cd-check", suites::cd_check},
      {"simulator-fidelity", suites::simulator_fidelity},
      {"locality", suites::locality},
  };
  return all;
}

inline std::vector<std::string> suite_names() {
  std::vector<std::string> out;
  for (const auto& s : suite_catalog()) out.push_back(s.name);
  return out;
}

struct SuiteRun {
  std::vector<InequalityReport> rows;
  std::vector<EstimateRow> estimates;
};

/// Runs one suite. Numeric failures are rethrown as ClaimError naming the
/// suite; invalid configurations as ConfigError.
inline SuiteRun run_suite(const std::string& name, const ExperimentConfig& cfg) {
  const auto it = std::find_if(suite_catalog().begin(), suite_catalog().end(),
                               [&](const SuiteInfo& s) { return s.name == name; });
  if (it == suite_catalog().end()) throw ConfigError("suite", 0, "unknown suite '" + name + "'");
  RunContext ctx;
  ctx.tol = cfg.tol;
  if (cfg.cache_dir) ctx.cache_dir = *cfg.cache_dir;
  SuiteScope scope(name, cfg, ctx);
  SuiteRun out;
  try {
    out.rows = it->run(scope);
  } catch (const NumericError& e) {
    throw ClaimError(name, e.what());
  } catch (const ClassificationFailure& e) {
    throw ClaimError(name, e.what());
  }
  out.estimates = std::move(ctx.estimates);
  return out;
}

// ---------------------------------------------------------------------------
// Report output
// ---------------------------------------------------------------------------

struct Summary {
  std::size_t pass = 0, pass_exact = 0, inconclusive = 0, fail = 0;
  std::size_t controls = 0, controls_failed = 0;
  std::size_t unexpected = 0;  // claim rows that FAIL plus controls that do not
};

inline Summary summarize(const std::vector<InequalityReport>& rows) {
  Summary s;
  for (const auto& r : rows) {
    switch (r.verdict) {
      case Verdict::pass: ++s.pass; break;
      case Verdict::pass_exact: ++s.pass_exact; break;
      case Verdict::inconclusive: ++s.inconclusive; break;
      case Verdict::fail: ++s.fail; break;
    }
    if (r.control) {
      ++s.controls;
      s.controls_failed += r.verdict == Verdict::fail;
    }
    s.unexpected += !row_as_expected(r);
  }
  return s;
}

namespace detail {

/// JSON number that round-trips; non-finite values become strings.
inline nlohmann::json num(double v) {
  if (std::isfinite(v)) return v;
  return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
}

}  // namespace detail

inline nlohmann::json to_json(const InequalityReport& r) {
  using detail::num;
  return {{"claim", r.claim},
          {"suite", r.suite},
          {"geometry", r.geometry},
          {"function", r.function},
          {"relation", r.relation == Relation::equal ? "=" : "<="},
          {"param", num(r.param)},
          {"lhs", num(r.lhs)},
          {"rhs", num(r.rhs)},
          {"lhs_stderr", num(r.lhs_stderr)},
          {"rhs_stderr", num(r.rhs_stderr)},
          {"bias_allowance", num(r.bias_allowance)},
          {"margin", num(r.margin)},
          {"verdict", std::string(to_string(r.verdict))},
          {"control", r.control},
          {"provenance",
           {{"seed", r.provenance.seed},
            {"n", r.provenance.n},
            {"dt", num(r.provenance.dt)},
            {"method", r.provenance.method}}},
          {"note", r.note}};
}

inline nlohmann::json to_json(const EstimateRow& e) {
  using detail::num;
  nlohmann::json o = nlohmann::json::array();
  for (double v : e.o) o.push_back(num(v));
  return {{"op", e.op},         {"geometry", e.geometry}, {"function", e.function}, {"o", o},
          {"T", num(e.T)},      {"t", num(e.t)},          {"p", num(e.p)},          {"value", num(e.value)},
          {"stderr", num(e.stderr_)}, {"n", e.n},          {"method", e.method},     {"seed", e.seed}};
}

inline nlohmann::json report_json(const std::vector<InequalityReport>& rows, const std::vector<EstimateRow>& est) {
  nlohmann::json j;
  j["schema"] = 1;
  j["rows"] = nlohmann::json::array();
  for (const auto& r : rows) j["rows"].push_back(to_json(r));
  j["estimates"] = nlohmann::json::array();
  for (const auto& e : est) j["estimates"].push_back(to_json(e));
  const auto s = summarize(rows);
  j["summary"] = {{"rows", rows.size()},
                  {"pass", s.pass},
                  {"pass_exact", s.pass_exact},
                  {"inconclusive", s.inconclusive},
                  {"fail", s.fail},
                  {"controls", s.controls},
                  {"controls_failed_as_expected", s.controls_failed},
                  {"unexpected", s.unexpected}};
  return j;
}

namespace detail {

inline std::string csv_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string csv_text(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

}  // namespace detail

inline std::string report_csv(const std::vector<InequalityReport>& rows) {
  using detail::csv_num;
  using detail::csv_text;
  std::string out =
      "claim,suite,geometry,function,relation,param,lhs,rhs,lhs_stderr,rhs_stderr,bias_allowance,margin,verdict,"
      "control,seed,n,dt,method,note\n";
  for (const auto& r : rows) {
    out += csv_text(r.claim) + "," + csv_text(r.suite) + "," + csv_text(r.geometry) + "," + csv_text(r.function) +
           "," + (r.relation == Relation::equal ? "=" : "<=") + "," + csv_num(r.param) + "," + csv_num(r.lhs) + "," +
           csv_num(r.rhs) + "," + csv_num(r.lhs_stderr) + "," + csv_num(r.rhs_stderr) + "," +
           csv_num(r.bias_allowance) + "," + csv_num(r.margin) + "," + std::string(to_string(r.verdict)) + "," +
           (r.control ? "1" : "0") + "," + std::to_string(r.provenance.seed) + "," +
           std::to_string(r.provenance.n) + "," + csv_num(r.provenance.dt) + "," + csv_text(r.provenance.method) +
           "," + csv_text(r.note) + "\n";
  }
  return out;
}

/// (x, lhs, rhs) columns for plotting, one block per claim/geometry/function.
inline std::string plot_data_csv(const std::vector<InequalityReport>& rows) {
  using detail::csv_num;
  using detail::csv_text;
  std::string out = "claim,geometry,function,control,x,lhs,rhs,lhs_stderr,rhs_stderr\n";
  for (const auto& r : rows)
    out += csv_text(r.claim) + "," + csv_text(r.geometry) + "," + csv_text(r.function) + "," +
           (r.control ? "1" : "0") + "," + csv_num(r.param) + "," + csv_num(r.lhs) + "," + csv_num(r.rhs) + "," +
           csv_num(r.lhs_stderr) + "," + csv_num(r.rhs_stderr) + "\n";
  return out;
}

// ---------------------------------------------------------------------------
// Heisenberg kernel forms
// ---------------------------------------------------------------------------

inline suites::Rows heisenberg_kernel_forms(const GeometryId& g, const SuiteScope& s) {
  suites::Rows rows;
  const auto opt = s.options(200000, 100);
  const std::vector<double> ts{0.5, 0.75, 1.0, 1.5, 2.0};
  const auto snaps = simulate_snapshots(g, origin(g), ts, opt.sim);
  const double eps = 0.1, eps_z = 0.1;
  // targets along the x axis and the z axis, split into two disjoint sets
  std::vector<Point> ta, tb;
  for (int i = 0; i < 6; ++i) {
    const double r = 0.3 * i;
    (i % 2 == 0 ? ta : tb).push_back(Point{r, 0.0, 0.0});
    (i % 2 == 0 ? ta : tb).push_back(Point{0.0, 0.0, 0.25 * i});
  }
  std::vector<KernelSample> ga, gb;
  std::vector<std::vector<double>> dens_a, dens_b;
  for (std::size_t k = 0; k < snaps.size(); ++k) {
    const auto da = histogram_density(snaps[k], ta, eps, eps_z);
    const auto db = histogram_density(snaps[k], tb, eps, eps_z);
    for (std::size_t i = 0; i < ta.size(); ++i)
      if (da[i] > 0.0) ga.push_back({ts[k], heisenberg::cc_norm(ta[i]), std::log(da[i])});
    for (std::size_t i = 0; i < tb.size(); ++i)
      if (db[i] > 0.0) gb.push_back({ts[k], heisenberg::cc_norm(tb[i]), std::log(db[i])});
    dens_a.push_back(da);
    dens_b.push_back(db);
  }
  auto form = check_gaussian_form(g, ga, gb, 4.0);
  form.note += "; box density eps=" + detail::fmt(eps) + ", n=" + std::to_string(opt.sim.n_paths);
  form.provenance.seed = opt.sim.seed;
  form.provenance.n = opt.sim.n_paths;
  rows.push_back(std::move(form));
  // parabolic Harnack with x, z on the target sets and y = e: mu_s(x) <= mu_t(z) exp(K(t/s + d(x,z)^2/(2(t-s))))
  const auto fit = [&](const std::vector<Point>& tg, const std::vector<std::vector<double>>& dens) {
    std::vector<double> ls, lt, w;
    for (std::size_t a = 0; a < ts.size(); ++a)
      for (std::size_t b = a + 1; b < ts.size(); ++b)
        for (std::size_t i = 0; i < tg.size(); ++i)
          for (std::size_t j = 0; j < tg.size(); ++j) {
            if (dens[a][i] <= 0.0 || dens[b][j] <= 0.0) continue;
            const double d = distance(g, tg[i], tg[j]);
            ls.push_back(std::log(dens[a][i]));
            lt.push_back(std::log(dens[b][j]));
            w.push_back(ts[b] / ts[a] + d * d / (2.0 * (ts[b] - ts[a])));
          }
    return fit_parabolic_harnack(ls, lt, w);
  };
  const auto ka = fit(ta, dens_a), kb = fit(tb, dens_b);
  std::string note = "smallest admissible K on each target set";
  if (ka) note += "; K_a=" + detail::fmt(*ka);
  if (kb) note += "; K_b=" + detail::fmt(*kb);
  auto h = detail::stability_row("parabolic-harnack-fit", g, "heat-kernel", ka, kb, note);
  h.provenance.seed = opt.sim.seed;
  h.provenance.n = opt.sim.n_paths;
  rows.push_back(std::move(h));
  return rows;
}

}  // namespace heatgauge
