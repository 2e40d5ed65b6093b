#include <catch_amalgamated.hpp>

#include <array>
#include <cmath>
#include <vector>

#include "heatgauge/gamma_calculus.hpp"
#include "heatgauge/rng.hpp"

using namespace heatgauge;
using namespace heatgauge::gamma_calculus;
using Catch::Matchers::WithinAbs;

namespace {

const Polynomial X = Polynomial::x(), Y = Polynomial::y(), Zp = Polynomial::z();

// Y1^2 + Y2^2 by nested central differences of the frame, independent of
// the symbolic derivative code.
double fd_sublaplacian(const Polynomial& f, std::array<double, 3> p, double h = 1e-3) {
  const auto y1 = [&](auto&& g, std::array<double, 3> q) {
    const double a[3] = {1.0, 0.0, -0.5 * q[1]};
    std::array<double, 3> u = q, d = q;
    for (int i = 0; i < 3; ++i) u[i] += h * a[i], d[i] -= h * a[i];
    return (g(u) - g(d)) / (2.0 * h);
  };
  const auto y2 = [&](auto&& g, std::array<double, 3> q) {
    const double a[3] = {0.0, 1.0, 0.5 * q[0]};
    std::array<double, 3> u = q, d = q;
    for (int i = 0; i < 3; ++i) u[i] += h * a[i], d[i] -= h * a[i];
    return (g(u) - g(d)) / (2.0 * h);
  };
  const auto fv = [&](std::array<double, 3> q) { return f(q[0], q[1], q[2]); };
  const auto y1f = [&](std::array<double, 3> q) { return y1(fv, q); };
  const auto y2f = [&](std::array<double, 3> q) { return y2(fv, q); };
  return y1(y1f, p) + y2(y2f, p);
}

std::vector<std::array<double, 3>> random_points(CounterRng& rng, int n) {
  std::vector<std::array<double, 3>> out;
  for (int i = 0; i < n; ++i) out.push_back({4 * rng.uniform() - 2, 4 * rng.uniform() - 2, 4 * rng.uniform() - 2});
  return out;
}

}  // namespace

TEST_CASE("polynomial arithmetic and derivatives", "[poly]") {
  const auto p = 3.0 * X * X * Y - Zp + 2.0;
  CHECK(p(1.0, 2.0, 3.0) == 5.0);
  CHECK(p.derivative(0) == 6.0 * X * Y);
  CHECK(p.derivative(2) == Polynomial(-1.0));
  CHECK(p.degree() == 3);
  CHECK((p - p).is_zero());
  CHECK((X * Y).str().find('x') != std::string::npos);
}

TEST_CASE("frame values on coordinates", "[gamma]") {
  CHECK(Y1()(X) == Polynomial(1.0));
  CHECK(Y1()(Zp) == -0.5 * Y);
  CHECK(Y2()(Zp) == 0.5 * X);
  CHECK(L_op(Zp).is_zero());
  CHECK(L_op(X * X, kHalfSumOfSquares) == Polynomial(1.0));
  CHECK(gamma(Zp, Zp) == 0.25 * (X * X + Y * Y));
  CHECK(gamma_z(Zp, Zp) == Polynomial(1.0));
}

TEST_CASE("bracket identity [Y1, Y2] = Z on random polynomials", "[gamma]") {
  CounterRng rng(31, 0);
  for (int i = 0; i < 200; ++i) {
    const auto f = random_polynomial(rng, 3);
    const auto lhs = Y1()(Y2()(f)) - Y2()(Y1()(f));
    REQUIRE((lhs - Z()(f)).max_abs_coeff() == 0.0);
  }
}

TEST_CASE("symbolic sub-Laplacian matches finite differences", "[gamma]") {
  CounterRng rng(4, 4);
  for (int i = 0; i < 50; ++i) {
    const auto f = random_polynomial(rng, 3);
    const auto lf = L_op(f);
    for (const auto& p : random_points(rng, 3))
      REQUIRE_THAT(lf(p), WithinAbs(fd_sublaplacian(f, p), 1e-4 * (1.0 + f.max_abs_coeff())));
  }
}

TEST_CASE("Gamma2 of a horizontal coordinate", "[gamma]") {
  // Y_i x are constant, so Gamma2(x) = 0 and the margin is kappa / nu
  const CDForms forms(X);
  for (double nu : {0.1, 1.0, 10.0})
    CHECK_THAT(forms.margin(kHeisenbergCD, std::array<double, 3>{0.3, -1.0, 2.0}, nu), WithinAbs(1.0 / nu, 1e-14));
}

TEST_CASE("z is the witness: zero margin at the origin", "[gamma][cd]") {
  const std::vector<std::array<double, 3>> o{{0.0, 0.0, 0.0}};
  const std::vector<double> nus{0.1, 1.0, 10.0};
  const auto rep = check_cd(Zp, kHeisenbergCD, o, nus);
  CHECK(std::abs(rep.worst_margin) <= 1e-12);
  CHECK(rep.pass);
}

TEST_CASE("CD(0, 1/2, 1, 2) holds on random cubics", "[gamma][cd]") {
  CounterRng rng(2026, 7);
  const std::vector<double> nus{0.1, 1.0, 10.0};
  double worst = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 500; ++i) {
    const auto f = random_polynomial(rng, 3);
    const auto pts = random_points(rng, 20);
    const auto rep = check_cd(f, kHeisenbergCD, pts, nus);
    worst = std::min(worst, rep.worst_margin);
    REQUIRE(rep.pass);
  }
  CHECK(worst >= -1e-9);
}

TEST_CASE("a too-large rho2 is refuted by z", "[gamma][cd]") {
  CDParams bad = kHeisenbergCD;
  bad.rho2 = 1.0;
  const std::vector<std::array<double, 3>> o{{0.0, 0.0, 0.0}};
  const std::vector<double> nus{1.0};
  const auto rep = check_cd(Zp, bad, o, nus);
  CHECK_FALSE(rep.pass);
  CHECK_THAT(rep.worst_margin, WithinAbs(-0.5, 1e-12));
}

TEST_CASE("check_cd rejects bad arguments", "[gamma][cd]") {
  const std::vector<std::array<double, 3>> o{{0.0, 0.0, 0.0}};
  const std::vector<double> zero{0.0}, one{1.0};
  CHECK_THROWS_AS(check_cd(X, kHeisenbergCD, o, zero), InvalidInput);
  CHECK_THROWS_AS(check_cd(X, kHeisenbergCD, {}, one), InvalidInput);
  CDParams bad = kHeisenbergCD;
  bad.rho2 = 0.0;
  CHECK_THROWS_AS(check_cd(X, bad, o, one), InvalidInput);
}
