// Acceptance run: one PASS/FAIL line per criterion, exit status 0 iff all pass.
// Expected values are recomputed here from closed forms, not taken from the
// library.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "heatgauge/suites.hpp"

using namespace heatgauge;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream why;

  void require(bool ok, const std::string& what) {
    if (ok) return;
    if (!pass) why << "; ";
    pass = false;
    why << what;
  }
};

bool passed(const InequalityReport& r) { return r.verdict == Verdict::pass || r.verdict == Verdict::pass_exact; }

void expect_rows(Outcome& o, const std::vector<InequalityReport>& rows, const std::string& label) {
  for (const auto& r : rows) {
    if (r.control)
      o.require(r.verdict == Verdict::fail, label + " control " + r.claim + " did not fail");
    else
      o.require(passed(r), label + " " + r.claim + " " + r.function + " param=" + std::to_string(r.param) + " " +
                               std::string(to_string(r.verdict)) + " (" + r.note + ")");
  }
}

SimConfig sim(std::uint64_t n, std::uint64_t seed, double dt = 0.0) {
  SimConfig c;
  c.n_paths = n;
  c.seed = seed;
  c.dt = dt;
  return c;
}

CheckOptions options(std::uint64_t n, std::uint64_t seed, double dt = 0.0) {
  CheckOptions o;
  o.sim = sim(n, seed, dt);
  return o;
}

// ---------------------------------------------------------------------------

void finite_contraction(Outcome& o) {
  const std::uint64_t seed = 2024;
  const auto rows = check_finite_sweep(1000, seed);
  expect_rows(o, rows, "sweep");

  // direct recomputation with plain loops
  CounterRng rng(seed, 0xF1);
  std::size_t bad = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto in = measure::random_instance(rng);
    const std::size_t nx = in.kernel.rows(), ny = in.kernel.cols();
    std::vector<double> nu2(ny, 0.0), Af(nx, 0.0);
    double m1 = 0.0, m2 = 0.0;
    for (std::size_t x = 0; x < nx; ++x) {
      m1 += in.nu1[x];
      for (std::size_t y = 0; y < ny; ++y) {
        nu2[y] += in.nu1[x] * in.kernel(x, y);
        Af[x] += in.kernel(x, y) * in.f[y];
      }
    }
    double lhs_int = 0.0, rhs_int = 0.0;
    for (std::size_t x = 0; x < nx; ++x) lhs_int += Af[x] * in.nu1[x];
    for (std::size_t y = 0; y < ny; ++y) rhs_int += in.f[y] * nu2[y], m2 += nu2[y];
    bad += std::abs(m1 - m2) > 1e-12;
    bad += std::abs(lhs_int - rhs_int) > 1e-12 * (1.0 + std::abs(rhs_int));
    for (double p : {1.0, 1.5, 2.0, 3.0, 10.0}) {
      double a = 0.0, b = 0.0;
      for (std::size_t x = 0; x < nx; ++x) a += std::pow(std::abs(Af[x]), p) * in.nu1[x];
      for (std::size_t y = 0; y < ny; ++y) b += std::pow(std::abs(in.f[y]), p) * nu2[y];
      bad += std::pow(a, 1.0 / p) > std::pow(b, 1.0 / p) + 1e-12;
    }
    double a = 0.0, b = 0.0;
    for (std::size_t x = 0; x < nx; ++x)
      if (in.nu1[x] > 0.0) a = std::max(a, std::abs(Af[x]));
    for (std::size_t y = 0; y < ny; ++y)
      if (nu2[y] > 0.0) b = std::max(b, std::abs(in.f[y]));
    bad += a > b + 1e-12;
  }
  o.require(bad == 0, std::to_string(bad) + " independent violations");
  o.why << (o.pass ? "1000 instances x 6 exponents, mass and duality exact" : "");
}

void gaussian_hypercontractivity(Outcome& o) {
  const auto g = GeometryId::euclidean(1);
  const double a = 0.8, p = 2.0, T = 1.0, t = 0.5;
  RunContext ctx;
  const double q = hypercontractive_exponent(0.0, p, T, t);
  o.require(std::abs(q - 3.0) < 1e-15, "q=" + std::to_string(q));
  const auto f = exponential_function(g, a);
  const auto r = check_hypercontractivity(g, f, origin(g), T, t, p, ctx);
  // E[exp(q a (X + Y))] with Var X = T - t inside, Var Y = t outside
  const double lhs = std::exp(a * a * (T - t) / 2.0 + 3.0 * a * a * t / 2.0);
  const double rhs = std::exp(p * a * a * T / 2.0);
  o.require(std::abs(r.lhs - lhs) <= 1e-10 * lhs && std::abs(r.rhs - rhs) <= 1e-10 * rhs, "closed forms disagree");
  o.require(std::abs(r.lhs - r.rhs) <= 1e-10 * rhs, "lhs != rhs");
  o.require(r.relation == Relation::equal && passed(r), "equality row verdict " + std::string(to_string(r.verdict)));
  const auto c = check_hypercontractivity(g, f, origin(g), T, t, p, ctx, 1.05);
  o.require(c.verdict == Verdict::fail, "q x 1.05 control passed");
  if (o.pass) o.why << "q=3, |lhs-rhs|=" << std::abs(r.lhs - r.rhs) << ", control FAIL";
}

void harmonic_fixed_points(Outcome& o) {
  RunContext ctx;
  const std::vector<double> ts{0.25, 0.5, 1.0};
  for (int n : {1, 2, 3}) {
    const auto g = GeometryId::euclidean(n);
    Point x = origin(g);
    x[0] = 1.3;
    const auto rows = check_harmonic_fixed_point(g, find_function(g, "x1"), x, ts, options(1, 1), ctx);
    for (const auto& r : rows) o.require(std::abs(r.lhs - 1.3) <= 1e-10, "R^" + std::to_string(n) + " x1 off");
    expect_rows(o, rows, "R^n");
  }
  const auto h = GeometryId::hyperbolic3();
  const Point top{0.0, 0.0, 1.0};
  // Poisson kernel at the boundary point 0 is (y / |p|^2)^2, which is 1 at (0,0,1);
  // the half-space harmonic measure is 0 there
  for (const auto& [id, want] : std::vector<std::pair<std::string, double>>{{"poisson", 1.0}, {"halfspace", 0.0}}) {
    const auto rows = check_harmonic_fixed_point(h, find_function(h, id), top, ts, options(100000, 31), ctx);
    for (const auto& r : rows)
      o.require(std::abs(r.lhs - want) <= 3.0 * r.lhs_stderr + r.bias_allowance + 1e-9,
                "H3 " + id + " t=" + std::to_string(r.param));
    expect_rows(o, rows, "H3");
  }
  const auto heis = GeometryId::heisenberg();
  const Point x{1.0, 0.0, 0.0};
  for (const auto& [id, want] :
       std::vector<std::pair<std::string, double>>{{"z", 0.0}, {"xy", 0.0}, {"x^2-y^2", 1.0}}) {
    const auto rows = check_harmonic_fixed_point(heis, find_function(heis, id), x, ts, options(100000, 32), ctx);
    for (const auto& r : rows)
      o.require(std::abs(r.lhs - want) <= 3.0 * r.lhs_stderr + 1e-9, "Heisenberg " + id + " t=" +
                                                                         std::to_string(r.param));
    expect_rows(o, rows, "Heisenberg");
  }
  if (o.pass) o.why << "R^1..3 exact, H3 poisson/halfspace and Heisenberg z, xy, x^2-y^2 within 3 se";
}

void norm_monotonicity(Outcome& o) {
  RunContext ctx;
  const double s = 0.25, t = 0.5, T = 1.0;
  const auto r1 = GeometryId::euclidean(1);
  const auto rows = check_norm_monotonicity(r1, find_function(r1, "x1"), origin(r1), s, t, T, 2.0, options(1, 1), ctx);
  o.require(rows.size() == 2, "expected two rows");
  o.require(std::abs(rows[0].lhs - std::sqrt(s)) <= 1e-10 && std::abs(rows[0].rhs - std::sqrt(t)) <= 1e-10 &&
                std::abs(rows[1].rhs - std::sqrt(T)) <= 1e-10,
            "R^1 norms are not (sqrt s, sqrt t, sqrt T)");
  expect_rows(o, rows, "R^1");

  // E[(XY)^2] = E[X^2] E[Y^2] = t^2 from the origin
  const auto h = GeometryId::heisenberg();
  RunContext hc;
  const auto hrows = check_norm_monotonicity(h, find_function(h, "xy"), origin(h), s, t, T, 2.0,
                                             options(100000, 41), hc);
  expect_rows(o, hrows, "Heisenberg");
  for (const auto& e : hc.estimates)
    if (e.op == "lp_norm")
      o.require(std::abs(e.value - e.T) <= 3.0 * e.stderr_ + 1e-9, "||xy|| at T=" + std::to_string(e.T));
  if (o.pass)
    o.why << "R^1 (" << rows[0].lhs << ", " << rows[0].rhs << ", " << rows[1].rhs << "); Heisenberg xy ordered";
}

// heat kernels of (1/2) Delta, written out independently
double log_mu_r3(double t, double d) { return -1.5 * std::log(2.0 * std::numbers::pi * t) - d * d / (2.0 * t); }
double log_mu_h3(double t, double d) {
  const double ratio = d < 1e-8 ? 1.0 - d * d / 6.0 : d / std::sinh(d);
  return -1.5 * std::log(2.0 * std::numbers::pi * t) + std::log(ratio) - t / 2.0 - d * d / (2.0 * t);
}
double dist_r3(const Point& a, const Point& b) {
  return std::sqrt((a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]) + (a[2] - b[2]) * (a[2] - b[2]));
}
double dist_h3(const Point& a, const Point& b) {
  const double c2 = (a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]) + (a[2] - b[2]) * (a[2] - b[2]);
  return std::acosh(1.0 + c2 / (2.0 * a[2] * b[2]));
}

void li_yau(Outcome& o) {
  RunContext ctx;
  struct Case {
    GeometryId g;
    double K;
    double (*log_mu)(double, double);
    double (*dist)(const Point&, const Point&);
  };
  const std::vector<Case> cases{{GeometryId::euclidean(3), 0.0, log_mu_r3, dist_r3},
                                {GeometryId::hyperbolic3(), 2.0, log_mu_h3, dist_h3}};
  std::size_t total = 0;
  for (const auto& c : cases) {
    const auto grid = harnack_grid(c.g, 10000, 77);
    total += grid.size();
    const auto r = check_harnack_liyau(c.g, grid, ctx);
    o.require(r.verdict == Verdict::pass_exact, c.g.id() + " row " + std::string(to_string(r.verdict)));
    const auto ctl = check_harnack_liyau(c.g, grid, ctx, true);
    o.require(ctl.verdict == Verdict::fail, c.g.id() + " control passed");
    std::size_t bad = 0;
    const double D = 3.0;
    for (const auto& h : grid) {
      const double dxz = c.dist(h.x, h.z);
      const double lhs = c.log_mu(h.t, c.dist(h.x, h.y));
      const double rhs = c.log_mu(h.T, c.dist(h.z, h.y)) + D * std::log(h.T / h.t) + dxz * dxz / (h.T - h.t) +
                         D * c.K * (h.T - h.t) / 4.0;
      bad += lhs - rhs > std::log1p(1e-9);
    }
    o.require(bad == 0, c.g.id() + ": " + std::to_string(bad) + " independent violations");
  }
  if (o.pass) o.why << total << " tuples on R^3 and H^3, zero violations";
}

void pointwise_bounds(Outcome& o) {
  RunContext ctx;
  const double T = 1.0, p = 2.0;
  {
    const auto g = GeometryId::euclidean(1);
    const auto xs = suites::distance_grid(g, origin(g), 4.0, 16);
    const auto rows = check_pointwise_bound(g, find_function(g, "x1"), origin(g), T, p, xs, options(1, 1), ctx);
    expect_rows(o, rows, "R^1");
    for (const auto& r : rows) {
      const double d = r.param;
      o.require(std::abs(r.rhs - std::sqrt(T) * std::exp(d * d / (2.0 * T))) <= 1e-9 * r.rhs,
                "R^1 rhs at d=" + std::to_string(d));
      o.require(std::abs(r.lhs - d) <= 1e-12, "R^1 lhs at d=" + std::to_string(d));
    }
  }
  {
    const auto g = GeometryId::hyperbolic3();
    const auto f = find_function(g, "halfspace");
    const auto xs = suites::distance_grid(g, origin(g), 4.0, 16);
    const auto rows = check_pointwise_bound(g, f, origin(g), T, p, xs, options(1, 1), ctx);
    expect_rows(o, rows, "H3");
    // K = 2: rate K (p - 1) / (2 (1 - e^{-K T}))
    const double rate = 2.0 / (2.0 * (1.0 - std::exp(-2.0 * T)));
    const double norm = rows.front().rhs;  // d = 0
    o.require(rows.front().param == 0.0 && norm > 0.0 && norm < 1.0, "H3 norm of a |f| < 1 function");
    for (const auto& r : rows) {
      const double d = r.param;
      o.require(std::abs(r.rhs - norm * std::exp(rate * d * d)) <= 1e-9 * r.rhs, "H3 rhs at d=" + std::to_string(d));
    }
  }
  {
    const auto g = GeometryId::heisenberg();
    const auto xs = suites::heisenberg_grid(origin(g));
    o.require(xs.size() == 50, "grid size");
    for (double ts : {T, 0.5 * T}) {
      const auto rows =
          check_pointwise_bound(g, find_function(g, "x"), origin(g), T, p, xs, options(100000, 61), ctx, ts);
      expect_rows(o, rows, "Heisenberg");
      // (p / (p - 1)) (1 + 2 kappa / rho2) / (4 t) with kappa = 1, rho2 = 1/2
      const double rate = 2.0 * 5.0 / (4.0 * ts);
      for (const auto& r : rows) {
        const double norm = r.rhs / std::exp(rate * r.param * r.param);
        o.require(std::abs(norm - std::sqrt(T)) <= 3.0 * r.rhs_stderr / std::exp(rate * r.param * r.param) + 1e-9,
                  "Heisenberg ||x|| != sqrt(T)");
      }
    }
  }
  if (o.pass) o.why << "R^1 closed form, H3 halfspace K=2, Heisenberg x on 50 points at t=T and T/2";
}

void gamma_calculus_checks(Outcome& o) {
  RunContext ctx;
  const auto b = check_bracket_identity(500, 5);
  o.require(b.verdict == Verdict::pass_exact && b.lhs == 0.0, "bracket identity residual " + std::to_string(b.lhs));
  const std::vector<double> nus{0.1, 1.0, 10.0};
  const auto s = check_cd_sweep(500, 20, nus, gamma_calculus::kHeisenbergCD, 6, ctx);
  o.require(s.rhs >= -1e-9 && passed(s), "CD sweep min margin " + std::to_string(s.rhs));
  const std::vector<std::array<double, 3>> at_o{{0.0, 0.0, 0.0}};
  const auto z = gamma_calculus::check_cd(Polynomial::z(), gamma_calculus::kHeisenbergCD, at_o, nus);
  o.require(std::abs(z.worst_margin) <= 1e-12, "z margin " + std::to_string(z.worst_margin));
  if (o.pass) o.why << "bracket exact, sweep min margin " << s.rhs << ", z margin " << z.worst_margin;
}

void simulator_fidelity(Outcome& o) {
  RunContext ctx;
  const double t = 1.0, h = t / 1024.0;
  const auto rows = check_heisenberg_moments(t, sim(1000000, 81, h), ctx);
  expect_rows(o, rows, "moments");
  for (const auto& r : rows) {
    if (r.control) continue;
    double want = 0.0;
    if (r.function == "x^2" || r.function == "y^2") want = t;
    if (r.function == "z^2") want = t * t / 4.0;
    // midpoint area discretization: E[Z^2] = t^2/4 (1 - h/t)
    const double bias = r.function == "z^2" ? t * t / 4.0 * h / t : 0.0;
    o.require(std::abs(r.lhs - want) <= 3.0 * r.lhs_stderr + bias + 1e-12, "moment " + r.function);
  }
  const auto ks = check_ks_convergence(t, sim(1000000, 82, t / 32.0), 5, ctx);
  expect_rows(o, ks, "KS");
  if (o.pass) {
    o.why << "moments within 3 se at n=1e6; KS";
    for (const auto& r : ks)
      if (!r.control) o.why << " " << r.lhs;
  }
}

std::string dump(const std::string& suite, const ExperimentConfig& cfg, const char* threads) {
  ::setenv("HEATGAUGE_THREADS", threads, 1);
  const auto run = run_suite(suite, cfg);
  return report_json(run.rows, run.estimates).dump();
}

void reproducibility(Outcome& o) {
  std::vector<std::string> checked;
  for (const std::string suite :
       {"finite-sweep", "semigroup-contraction", "harmonic-fixed-point", "norm-monotonicity", "locality"}) {
    ExperimentConfig cfg;
    cfg.suites = {suite};
    cfg.seed = 99;
    cfg.n_paths = 20000;
    const auto a = dump(suite, cfg, "1");
    const auto b = dump(suite, cfg, "4");
    o.require(a == b, suite + " differs across thread counts");
    checked.push_back(suite);
  }
  ::unsetenv("HEATGAUGE_THREADS");
  if (o.pass) o.why << checked.size() << " suites bitwise identical with 1 and 4 threads";
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria{
      {"finite contraction sweep", finite_contraction},
      {"Gaussian extremal hypercontractivity", gaussian_hypercontractivity},
      {"harmonic fixed points", harmonic_fixed_points},
      {"norm monotonicity", norm_monotonicity},
      {"Li-Yau Harnack", li_yau},
      {"pointwise bounds", pointwise_bounds},
      {"Gamma calculus", gamma_calculus_checks},
      {"simulator fidelity", simulator_fidelity},
      {"reproducibility", reproducibility},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    const auto start = std::chrono::steady_clock::now();
    try {
      criteria[i].second(o);
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failed += !o.pass;
    std::printf("Criterion %zu: %s - %s: %s (%.1f s)\n", i + 1, o.pass ? "PASS" : "FAIL", criteria[i].first.c_str(),
                o.why.str().c_str(), secs);
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
