#pragma once

// Carre du champ calculus for the Heisenberg frame
//   Y1 = dx - (y/2) dz,  Y2 = dy + (x/2) dz,  Z = dz = [Y1, Y2],
// and the generalized curvature-dimension inequality CD(rho1, rho2, kappa, d).

#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "heatgauge/errors.hpp"
#include "heatgauge/polynomial.hpp"

namespace heatgauge::gamma_calculus {

/// a dx + b dy + c dz with polynomial coefficients.
struct VectorField {
  Polynomial a, b, c;

  Polynomial operator()(const Polynomial& f) const {
    return a * f.derivative(0) + b * f.derivative(1) + c * f.derivative(2);
  }
};

inline const VectorField& Y1() {
  static const VectorField v{Polynomial(1.0), Polynomial(), -0.5 * Polynomial::y()};
  return v;
}
inline const VectorField& Y2() {
  static const VectorField v{Polynomial(), Polynomial(1.0), 0.5 * Polynomial::x()};
  return v;
}
inline const VectorField& Z() {
  static const VectorField v{Polynomial(), Polynomial(), Polynomial(1.0)};
  return v;
}

inline Polynomial apply_field(const VectorField& v, const Polynomial& f) { return v(f); }

/// Scale c of the sub-Laplacian L = c (Y1^2 + Y2^2). The curvature constants
/// (0, 1/2, 1, 2) are stated for c = 1; the diffusion generator uses c = 1/2.
struct Convention {
  double c;
};
inline constexpr Convention kSumOfSquares{1.0};
inline constexpr Convention kHalfSumOfSquares{0.5};

inline Polynomial L_op(const Polynomial& f, Convention conv = kSumOfSquares) {
  return conv.c * (Y1()(Y1()(f)) + Y2()(Y2()(f)));
}

inline Polynomial gamma(const Polynomial& f, const Polynomial& g) {
  return Y1()(f) * Y1()(g) + Y2()(f) * Y2()(g);
}

inline Polynomial gamma_z(const Polynomial& f, const Polynomial& g) { return Z()(f) * Z()(g); }

inline Polynomial gamma2(const Polynomial& f, Convention conv = kSumOfSquares) {
  return 0.5 * (L_op(gamma(f, f), conv) - 2.0 * gamma(f, L_op(f, conv)));
}

inline Polynomial gamma2_z(const Polynomial& f, Convention conv = kSumOfSquares) {
  return 0.5 * (L_op(gamma_z(f, f), conv) - 2.0 * gamma_z(f, L_op(f, conv)));
}

struct CDParams {
  double rho1 = 0.0;
  double rho2 = 0.5;
  double kappa = 1.0;
  double d = 2.0;  // may be +inf

  void validate() const {
    if (!(rho2 > 0.0)) throw InvalidInput("CD parameter rho2 must be > 0");
    if (!(kappa >= 0.0)) throw InvalidInput("CD parameter kappa must be >= 0");
    if (!(d >= 1.0)) throw InvalidInput("CD parameter d must be >= 1");
  }
};

/// Heisenberg constants, quoted for the unhalved convention.
inline constexpr CDParams kHeisenbergCD{0.0, 0.5, 1.0, 2.0};

/// The pieces of the CD inequality for one f, computed symbolically once.
struct CDForms {
  Polynomial g2, g2z, lf, g, gz;

  explicit CDForms(const Polynomial& f, Convention conv = kSumOfSquares)
      : g2(gamma2(f, conv)), g2z(gamma2_z(f, conv)), lf(L_op(f, conv)), g(gamma(f, f)),
        gz(gamma_z(f, f)) {}

  /// Gamma2 + nu Gamma2^Z - (1/d)(Lf)^2 - (rho1 - kappa/nu) Gamma - rho2 Gamma^Z at p.
  double margin(const CDParams& prm, std::span<const double> p, double nu) const {
    const double inv_d = std::isinf(prm.d) ? 0.0 : 1.0 / prm.d;
    const double l = lf(p);
    return g2(p) + nu * g2z(p) - inv_d * l * l - (prm.rho1 - prm.kappa / nu) * g(p) -
           prm.rho2 * gz(p);
  }

  /// Symbolic margin as a polynomial in (x, y, z) at fixed nu.
  Polynomial margin_polynomial(const CDParams& prm, double nu) const {
    const double inv_d = std::isinf(prm.d) ? 0.0 : 1.0 / prm.d;
    return g2 + nu * g2z - inv_d * (lf * lf) - (prm.rho1 - prm.kappa / nu) * g - prm.rho2 * gz;
  }
};

inline constexpr double kCdSlack = 1e-9;

struct CDReport {
  double worst_margin = std::numeric_limits<double>::infinity();
  std::array<double, 3> witness_point{};
  double witness_nu = 0.0;
  bool pass = true;
};

/// Minimum CD margin over points x nus; PASS iff the minimum is >= -1e-9.
inline CDReport check_cd(const Polynomial& f, const CDParams& params,
                         std::span<const std::array<double, 3>> points, std::span<const double> nus,
                         Convention conv = kSumOfSquares) {
  params.validate();
  if (points.empty() || nus.empty()) throw InvalidInput("check_cd needs points and nus");
  for (double nu : nus)
    if (!(nu > 0.0)) throw InvalidInput("check_cd: every nu must be > 0");
  const CDForms forms(f, conv);
  CDReport rep;
  for (double nu : nus)
    for (const auto& p : points) {
      const double m = forms.margin(params, p, nu);
      if (m < rep.worst_margin) {
        rep.worst_margin = m;
        rep.witness_point = p;
        rep.witness_nu = nu;
      }
    }
  rep.pass = rep.worst_margin >= -kCdSlack;
  return rep;
}

}  // namespace heatgauge::gamma_calculus
