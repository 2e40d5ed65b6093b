#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "heatgauge/geometry.hpp"
#include "heatgauge/rng.hpp"

using namespace heatgauge;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

const GeometryId R1 = GeometryId::euclidean(1);
const GeometryId R3 = GeometryId::euclidean(3);
const GeometryId H3 = GeometryId::hyperbolic3();
const GeometryId HEIS = GeometryId::heisenberg();

Point random_point(const GeometryId& g, CounterRng& rng, double spread = 2.0) {
  std::vector<double> c(static_cast<std::size_t>(g.dim()));
  for (auto& v : c) v = spread * (2.0 * rng.uniform() - 1.0);
  if (g.kind == GeometryKind::hyperbolic3) c[2] = std::exp(spread * (rng.uniform() - 0.5));
  return Point(std::move(c));
}

}  // namespace

TEST_CASE("geometry ids round-trip through strings", "[geometry]") {
  for (const auto& g : {R1, R3, H3, HEIS}) CHECK(GeometryId::parse(g.id()) == g);
  CHECK_THROWS_AS(GeometryId::parse("sphere"), InvalidInput);
  CHECK_THROWS_AS(GeometryId::parse("euclidean:x"), InvalidInput);
  CHECK(H3.ricci_lower_bound() == 2.0);
  CHECK(R3.ricci_lower_bound() == 0.0);
  CHECK(HEIS.cd_params().kappa == 1.0);
  CHECK_THROWS_AS(HEIS.ricci_lower_bound(), Unsupported);
}

TEST_CASE("distance examples", "[geometry]") {
  CHECK_THAT(distance(H3, Point{0, 0, 1}, Point{0, 0, std::numbers::e}), WithinAbs(1.0, 1e-14));
  CHECK_THAT(distance(HEIS, Point{0.3, -0.4, 0}, Point{0, 0, 0}), WithinAbs(0.5, 1e-12));
  const Point g{0.7, -0.2, 0.9};
  CHECK_THAT(distance(HEIS, heisenberg::dilate(2.0, g), Point{0, 0, 0}),
             WithinRel(2.0 * distance(HEIS, g, Point{0, 0, 0}), 1e-10));
  CHECK_THROWS_AS(distance(H3, Point{0, 0, -1}, Point{0, 0, 1}), InvalidInput);
}

TEST_CASE("Heisenberg vertical axis distance", "[geometry]") {
  // the minimizing loop for (0,0,z) is a circle enclosing area z: length^2 = 4 pi z
  for (double z : {0.1, 1.0, 5.0})
    CHECK_THAT(heisenberg::cc_norm(0.0, 0.0, z), WithinRel(std::sqrt(4.0 * std::numbers::pi * z), 1e-9));
}

TEST_CASE("distance axioms on random triples", "[geometry]") {
  CounterRng rng(77, 3);
  for (const auto& g : {R3, H3, HEIS}) {
    for (int i = 0; i < 200; ++i) {
      const auto a = random_point(g, rng), b = random_point(g, rng), c = random_point(g, rng);
      const double ab = distance(g, a, b), ba = distance(g, b, a);
      REQUIRE_THAT(ab, WithinAbs(ba, 1e-9 * (1.0 + ab)));
      REQUIRE(ab <= distance(g, a, c) + distance(g, c, b) + 1e-9);
      REQUIRE(distance(g, a, a) <= 1e-9);
      REQUIRE(ab >= 0.0);
    }
  }
}

TEST_CASE("Heisenberg group law, left invariance and projection bound", "[geometry]") {
  const Point a{1, 0, 0}, b{0, 1, 0};
  CHECK(heisenberg::multiply(a, b) == Point{1, 1, 0.5});
  const Point g{0.4, -1.1, 2.3};
  const auto e = heisenberg::multiply(g, heisenberg::inverse(g));
  for (double v : e.coords()) CHECK(v == 0.0);

  CounterRng rng(9, 9);
  for (int i = 0; i < 100; ++i) {
    const auto h = random_point(HEIS, rng), p = random_point(HEIS, rng), q = random_point(HEIS, rng);
    const double d = distance(HEIS, p, q);
    REQUIRE_THAT(distance(HEIS, heisenberg::multiply(h, p), heisenberg::multiply(h, q)),
                 WithinAbs(d, 1e-8 * (1.0 + d)));
    const auto pq = heisenberg::multiply(heisenberg::inverse(p), q);
    REQUIRE(d >= std::hypot(pq[0], pq[1]) - 1e-12);
  }
}

TEST_CASE("heat kernel density examples", "[geometry]") {
  CHECK_THAT(heat_kernel_density(R1, 1.0, Point{0}, Point{0}), WithinRel(1.0 / std::sqrt(2.0 * std::numbers::pi), 1e-14));
  const double h3_peak = std::pow(2.0 * std::numbers::pi, -1.5) * std::exp(-0.5);
  CHECK_THAT(heat_kernel_density(H3, 1.0, Point{0, 0, 1}, Point{0, 0, 1}), WithinRel(h3_peak, 1e-14));
  CHECK_THAT(h3_peak, WithinAbs(0.03851, 1e-5));
  CHECK_THROWS_AS(heat_kernel_density(HEIS, 1.0, Point{0, 0, 0}, Point{0, 0, 0}), Unsupported);
  CHECK_THROWS_AS(heat_kernel_density(R1, 0.0, Point{0}, Point{0}), InvalidInput);

  const Point a{0.3, -1.0, 0.5}, b{1.2, 0.4, 2.0};
  CHECK(heat_kernel_density(H3, 0.7, a, b) == heat_kernel_density(H3, 0.7, b, a));
}

TEST_CASE("Gaussian convolution on the line", "[geometry]") {
  const double s = 0.3, t = 0.7, y = 1.2;
  const double conv = quad::integrate(
      [&](double z) {
        return heat_kernel_density(R1, s, Point{0}, Point{z}) * heat_kernel_density(R1, t, Point{z}, Point{y});
      },
      -12.0, 12.0);
  CHECK_THAT(conv, WithinAbs(heat_kernel_density(R1, s + t, Point{0}, Point{y}), 1e-10));
}

TEST_CASE("radial quadrature: normalization and moments", "[geometry]") {
  for (const auto& g : {R1, R3, GeometryId::euclidean(2), H3})
    for (double t : {0.25, 1.0, 4.0})
      REQUIRE_THAT(radial_quadrature(g, [](double) { return 1.0; }, t), WithinAbs(1.0, 1e-10));
  CHECK_THAT(radial_quadrature(R3, [](double r) { return r * r; }, 1.0), WithinRel(3.0, 1e-10));
}

TEST_CASE("H3 ball probability grows with radius and concentrates as t shrinks", "[geometry]") {
  const auto ball = [](double delta, double t) {
    return radial_quadrature(H3, [delta](double r) { return r <= delta ? 1.0 : 0.0; }, t, {delta});
  };
  double prev = 0.0;
  for (double delta : {0.25, 0.5, 1.0, 2.0}) {
    const double v = ball(delta, 0.25);
    CHECK(v > prev);
    prev = v;
  }
  CHECK(ball(0.5, 0.005) > 0.999);
}

TEST_CASE("radial heat operator agrees with Chapman-Kolmogorov", "[geometry]") {
  // P_s applied to the radial profile of mu_t is mu_{s+t}
  for (const auto& g : {R3, H3}) {
    const double s = 0.3, t = 0.5;
    const RadialProfile kernel{[&](double r) { return heat_kernel_radial(g, t, r); }, {}};
    for (double rho : {0.0, 0.4, 1.5, 3.0})
      REQUIRE_THAT(radial_heat_op(g, kernel, s, rho), WithinAbs(heat_kernel_radial(g, s + t, rho), 1e-8));
  }
}

TEST_CASE("catalog contents and certification", "[geometry]") {
  CHECK(find_function(HEIS, "x^2").cls == FunctionClass::subharmonic);
  CHECK(find_function(HEIS, "z").cls == FunctionClass::harmonic);
  CHECK(find_function(H3, "x1").cls == FunctionClass::harmonic);
  CHECK_THROWS_AS(find_function(H3, "nope"), InvalidInput);

  CounterRng rng(3, 1);
  for (const auto& g : {R3, H3, HEIS}) {
    std::vector<Point> sample;
    for (int i = 0; i < 100; ++i) sample.push_back(random_point(g, rng, 1.0));
    for (const auto& f : catalog_functions(g)) REQUIRE_NOTHROW(verify_harmonicity(g, f, sample));
    CHECK(verify_harmonicity(g, constant_function(2.0), sample) == 0.0);
  }

  std::vector<Point> one{Point{0.3, 0.2, 1.0}};
  CHECK(verify_harmonicity(HEIS, find_function(HEIS, "xy"), one) == 0.0);

  auto wrong = find_function(HEIS, "x^2+y^2");
  wrong.cls = FunctionClass::harmonic;
  CHECK_THROWS_AS(verify_harmonicity(HEIS, wrong, one), ClassificationFailure);
}

TEST_CASE("finite differences on the Poisson function converge at second order", "[geometry]") {
  const auto f = find_function(H3, "poisson");
  const Point p{0.4, -0.3, 0.8};
  const double e1 = std::abs(fd_laplacian(H3, f, p, 2e-2));
  const double e2 = std::abs(fd_laplacian(H3, f, p, 1e-2));
  CHECK(e2 < 0.35 * e1);
  CHECK(std::abs(fd_laplacian(H3, f, p)) < 1e-5);
}
