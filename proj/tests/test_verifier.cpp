#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "heatgauge/suites.hpp"

using namespace heatgauge;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

const GeometryId R1 = GeometryId::euclidean(1);
const GeometryId R2 = GeometryId::euclidean(2);
const GeometryId R3 = GeometryId::euclidean(3);
const GeometryId H3 = GeometryId::hyperbolic3();
const GeometryId HEIS = GeometryId::heisenberg();

CheckOptions options(std::uint64_t n, std::uint64_t seed) {
  CheckOptions o;
  o.sim.n_paths = n;
  o.sim.seed = seed;
  return o;
}

}  // namespace

TEST_CASE("hypercontractive exponent", "[verifier]") {
  CHECK(hypercontractive_exponent(0.0, 2.0, 1.0, 0.5) == 3.0);
  CHECK_THAT(hypercontractive_exponent(1e-10, 2.0, 1.0, 0.5), WithinAbs(3.0, 1e-8));
  const double h3 = 1.0 + (1.0 - std::exp(-2.0)) / (1.0 - std::exp(-1.0));
  CHECK_THAT(hypercontractive_exponent(2.0, 2.0, 1.0, 0.5), WithinRel(h3, 1e-14));
  CHECK_THAT(h3, WithinAbs(2.36788, 1e-5));
}

TEST_CASE("pointwise rates", "[verifier]") {
  CHECK_THAT(riemannian_pointwise_rate(0.0, 2.0, 1.0), WithinAbs(0.5, 1e-15));
  CHECK_THAT(riemannian_pointwise_rate(2.0, 3.0, 1.0), WithinRel(2.0 * 2.0 / (2.0 * (1.0 - std::exp(-2.0))), 1e-14));
  // multiplier 1 + 2 kappa / rho2 = 5 at rho1 = 0
  CHECK_THAT(subelliptic_pointwise_rate(gamma_calculus::kHeisenbergCD, 2.0, 1.0), WithinAbs(2.5, 1e-15));
}

TEST_CASE("Gaussian extremal family is an equality case", "[verifier][hyper]") {
  RunContext ctx;
  const auto f = exponential_function(R1, 1.0);
  const auto r = check_hypercontractivity(R1, f, Point{0.0}, 1.0, 0.5, 2.0, ctx);
  CHECK_THAT(r.lhs, WithinRel(r.rhs, 1e-10));
  CHECK(r.verdict == Verdict::pass_exact);
  const auto c = check_hypercontractivity(R1, f, Point{0.0}, 1.0, 0.5, 2.0, ctx, 1.05);
  CHECK(c.verdict == Verdict::fail);
}

TEST_CASE("hypercontractivity on H3 for the unit ball", "[verifier][hyper]") {
  RunContext ctx;
  const auto r = check_hypercontractivity(H3, find_function(H3, "ball1"), origin(H3), 1.0, 0.5, 2.0, ctx);
  CHECK(r.verdict == Verdict::pass_exact);
  CHECK(r.lhs < r.rhs);
  CHECK_THROWS_AS(check_hypercontractivity(HEIS, find_function(HEIS, "x"), origin(HEIS), 1.0, 0.5, 2.0, ctx),
                  Unsupported);
}

TEST_CASE("semigroup contraction", "[verifier]") {
  RunContext ctx;
  const auto f = exponential_function(R1, 1.0);
  const auto id = check_semigroup_contraction(R1, f, Point{0.0}, 1.0, 0.0, 2.0, options(1000, 1), ctx);
  CHECK(id.lhs == id.rhs);
  const auto r = check_semigroup_contraction(R1, f, Point{0.0}, 1.0, 0.5, 2.0, options(1000, 1), ctx);
  CHECK(r.verdict == Verdict::pass_exact);
  // ||e^{x + t/2}||_{L^2(mu_{T-t})} = e^{t/2 + (T-t)}
  CHECK_THAT(r.lhs, WithinRel(std::exp(0.25 + 0.5), 1e-10));
  CHECK_THAT(r.rhs, WithinRel(std::exp(1.0), 1e-10));
  CHECK_THROWS_AS(check_semigroup_contraction(R1, f, Point{0.0}, 1.0, 1.0, 2.0, options(1, 1), ctx), InvalidInput);
}

TEST_CASE("harmonic fixed points and certification", "[verifier]") {
  RunContext ctx;
  const auto rows = check_harmonic_fixed_point(R2, find_function(R2, "x1"), Point{1.0, -0.5}, {0.25, 1.0},
                                               options(1000, 1), ctx);
  REQUIRE(rows.size() == 2);
  for (const auto& r : rows) {
    CHECK(r.verdict == Verdict::pass_exact);
    CHECK_THAT(r.lhs, WithinAbs(1.0, 1e-10));
  }
  CHECK_THROWS_AS(check_harmonic_fixed_point(HEIS, find_function(HEIS, "x^2"), Point{0, 0, 0}, {1.0},
                                             options(10, 1), ctx),
                  ClassificationFailure);
}

TEST_CASE("subharmonic growth on the line", "[verifier]") {
  RunContext ctx;
  const auto rows = check_subharmonic_growth(R1, find_function(R1, "x1^2"), Point{0.0}, {0.25, 0.5, 1.0},
                                             options(1000, 1), ctx);
  REQUIRE_FALSE(rows.empty());
  for (const auto& r : rows) CHECK(r.verdict == Verdict::pass_exact);
  CHECK_THAT(rows.front().rhs, WithinAbs(0.25, 1e-10));
}

TEST_CASE("norm monotonicity on the line", "[verifier]") {
  RunContext ctx;
  const auto rows = check_norm_monotonicity(R1, find_function(R1, "x1"), Point{0.0}, 0.25, 0.5, 1.0, 2.0,
                                            options(1000, 1), ctx);
  REQUIRE(rows.size() == 2);
  CHECK_THAT(rows[0].lhs, WithinRel(0.5, 1e-10));
  CHECK_THAT(rows[0].rhs, WithinRel(std::sqrt(0.5), 1e-10));
  CHECK_THAT(rows[1].rhs, WithinRel(1.0, 1e-10));
  CHECK_THROWS_AS(check_norm_monotonicity(R1, find_function(R1, "x1"), Point{0.0}, 0.5, 0.25, 1.0, 2.0,
                                          options(1, 1), ctx),
                  InvalidInput);
}

TEST_CASE("pointwise bound on the line and its control", "[verifier]") {
  RunContext ctx;
  std::vector<Point> xs;
  for (int i = 0; i <= 16; ++i) xs.push_back(Point{-4.0 + 0.5 * i});
  const auto f = find_function(R1, "x1");
  const auto rows = check_pointwise_bound(R1, f, Point{0.0}, 1.0, 2.0, xs, options(1000, 1), ctx);
  REQUIRE(rows.size() == xs.size());
  for (const auto& r : rows) {
    CHECK(r.verdict == Verdict::pass_exact);
    // |x| <= sqrt(T) e^{x^2 / 2}
    CHECK_THAT(r.rhs, WithinRel(std::exp(0.5 * r.param * r.param), 1e-10));
  }
  const std::vector<Point> one{Point{1.0}};
  const auto c = check_pointwise_bound(R1, f, Point{0.0}, 1.0, 2.0, one, options(1000, 1), ctx, {}, -1.0);
  CHECK(c.front().verdict == Verdict::fail);
}

TEST_CASE("Li-Yau inequality on exact kernels", "[verifier][liyau]") {
  RunContext ctx;
  for (const auto& g : {R3, H3}) {
    const auto grid = harnack_grid(g, 2000, 5);
    CHECK(check_harnack_liyau(g, grid, ctx).verdict == Verdict::pass_exact);
    CHECK(check_harnack_liyau(g, grid, ctx, true).verdict == Verdict::fail);
  }
  CHECK_THROWS_AS(harnack_grid(HEIS, 10, 1), Unsupported);
}

TEST_CASE("Gaussian form fit on the exact line kernel", "[verifier][forms]") {
  std::vector<KernelSample> a, b;
  for (double t : {0.25, 0.5, 1.0, 2.0})
    for (int i = 0; i < 8; ++i) {
      const double d = 0.5 * i;
      (i % 2 == 0 ? a : b).push_back({t, d, log_heat_kernel_radial(R1, t, d)});
    }
  const auto ka = fit_gaussian_rate(a, 1.0);
  REQUIRE(ka);
  CHECK(*ka >= 0.5);
  CHECK(*ka <= 1.0);
  CHECK(check_gaussian_form(R1, a, b, 1.0).verdict == Verdict::pass);
  const std::vector<KernelSample> one{a.front()};
  CHECK(check_gaussian_form(R1, one, one, 1.0).verdict == Verdict::inconclusive);
}

TEST_CASE("lower-bound form hold-out", "[verifier][forms]") {
  RunContext ctx;
  const std::vector<double> Ts{1.0}, na{0.25, 0.75, 1.25}, nb{0.5, 1.0, 1.5};
  const auto rows = check_lower_bound_form(H3, Ts, na, nb, ctx);
  REQUIRE(rows.size() == 2);
  CHECK(rows[1].verdict == Verdict::pass_exact);
  CHECK_THROWS_AS(check_lower_bound_form(R3, Ts, na, nb, ctx), Unsupported);
}

TEST_CASE("finite sweep rows", "[verifier]") {
  const auto rows = check_finite_sweep(200, 7);
  std::size_t controls = 0;
  for (const auto& r : rows) {
    CHECK(row_as_expected(r));
    controls += r.control;
  }
  CHECK(controls >= 1);
}

TEST_CASE("curvature-dimension rows", "[verifier]") {
  RunContext ctx;
  CHECK(check_bracket_identity(100, 3).verdict == Verdict::pass_exact);
  const std::vector<double> nus{0.1, 1.0, 10.0};
  CHECK(check_cd_sweep(100, 20, nus, gamma_calculus::kHeisenbergCD, 3, ctx).verdict == Verdict::pass_exact);
}

TEST_CASE("verdict policy", "[verifier]") {
  InequalityReport r;
  r.lhs = 1.0;
  r.rhs = 0.9;
  r.lhs_stderr = 0.04;
  r.rhs_stderr = 0.0;
  CHECK(statistical_verdict(r) == Verdict::pass);
  r.rhs = 0.87;
  CHECK(statistical_verdict(r) == Verdict::fail);
  r.lhs = 1.0 + 5e-10;
  r.rhs = 1.0;
  CHECK(exact_verdict(r) == Verdict::pass_exact);
  r.relation = Relation::equal;
  r.rhs = 1.1;
  CHECK(exact_verdict(r) == Verdict::fail);
}

TEST_CASE("config parsing", "[verifier][config]") {
  const auto c = parse_config(R"({
  "suite": "norm-monotonicity",
  "geometry": "heisenberg",
  "functions": ["xy"],
  "o": [0, 0, 0],
  "times": {"s": 0.25, "t": 0.5, "T": 1},
  "p": 2,
  "n_paths": 1000,
  "seed": 3,
  "dt": 0.01
})");
  CHECK(c.suites == std::vector<std::string>{"norm-monotonicity"});
  CHECK(*c.geometry == "heisenberg");
  CHECK(*c.times.T == 1.0);
  CHECK(*c.seed == 3);

  try {
    parse_config("{\n  \"suite\": \"finite-sweep\",\n  \"colour\": 1\n}");
    FAIL("unknown field accepted");
  } catch (const ConfigError& e) {
    CHECK(e.field() == "colour");
    CHECK(e.line() == 3);
  }
  try {
    parse_config("{\n  \"p\": \"two\"\n}");
    FAIL("bad p accepted");
  } catch (const ConfigError& e) {
    CHECK(e.field() == "p");
    CHECK(e.line() == 2);
  }
  try {
    parse_config("{\n  \"seed\": 1,\n  \"times\": {\"s\": 1, \"t\": 0.5}\n}").validate();
    FAIL("s > t accepted");
  } catch (const ConfigError& e) {
    CHECK(e.field() == "times");
  }
  CHECK_THROWS_AS(parse_config("{ \"seed\": 1, "), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"geometry": "sphere"})"), ConfigError);
}

TEST_CASE("suite runs are reproducible and controls fail", "[verifier][suites]") {
  ExperimentConfig cfg;
  cfg.seed = 7;
  const auto a = run_suite("finite-sweep", cfg);
  const auto b = run_suite("finite-sweep", cfg);
  CHECK(report_json(a.rows, a.estimates).dump() == report_json(b.rows, b.estimates).dump());
  CHECK(report_json(a.rows, a.estimates)["schema"] == 1);
  const auto s = summarize(a.rows);
  CHECK(s.unexpected == 0);
  CHECK(s.controls_failed == s.controls);
  CHECK_THROWS_AS(run_suite("nope", cfg), ConfigError);

  const auto csv = report_csv(a.rows);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == static_cast<long>(a.rows.size()) + 1);
}

TEST_CASE("hypercontractivity suite restricted to the line", "[verifier][suites]") {
  ExperimentConfig cfg;
  cfg.geometry = "euclidean:1";
  const auto run = run_suite("hypercontractivity", cfg);
  bool equality = false;
  for (const auto& r : run.rows) {
    CHECK(row_as_expected(r));
    if (!r.control && r.relation == Relation::equal) equality = true;
  }
  CHECK(equality);
}
