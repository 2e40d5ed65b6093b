#pragma once

// Sparse polynomials in the exponential coordinates (x, y, z) of the
// Heisenberg group. Coefficients are doubles; every coefficient produced by
// the built-in frame is a dyadic rational, so the algebra is exact for the
// catalog functions.

#include <array>
#include <cmath>
#include <map>
#include <ostream>
#include <span>
#include <sstream>
#include <string>

#include "heatgauge/rng.hpp"

namespace heatgauge {

class Polynomial {
 public:
  using Exponents = std::array<int, 3>;
  using Terms = std::map<Exponents, double>;

  Polynomial() = default;
  Polynomial(double c) {  // NOLINT(google-explicit-constructor): constants promote naturally
    if (c != 0.0) terms_[{0, 0, 0}] = c;
  }

  static Polynomial monomial(double c, int i, int j, int k) {
    Polynomial p;
    if (c != 0.0) p.terms_[{i, j, k}] = c;
    return p;
  }
  static Polynomial x() { return monomial(1.0, 1, 0, 0); }
  static Polynomial y() { return monomial(1.0, 0, 1, 0); }
  static Polynomial z() { return monomial(1.0, 0, 0, 1); }

  const Terms& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }

  int degree() const {
    int d = -1;
    for (const auto& [e, c] : terms_) d = std::max(d, e[0] + e[1] + e[2]);
    return d;
  }

  /// Coefficient of x^i y^j z^k (0 when absent).
  double coeff(int i, int j, int k) const {
    const auto it = terms_.find({i, j, k});
    return it == terms_.end() ? 0.0 : it->second;
  }

  double operator()(double x, double y, double z) const {
    double acc = 0.0;
    for (const auto& [e, c] : terms_) acc += c * ipow(x, e[0]) * ipow(y, e[1]) * ipow(z, e[2]);
    return acc;
  }
  double operator()(std::span<const double> p) const { return (*this)(p[0], p[1], p[2]); }

  /// Partial derivative along coordinate `axis` (0 = x, 1 = y, 2 = z).
  Polynomial derivative(int axis) const {
    Polynomial out;
    for (const auto& [key, c] : terms_) {
      if (key[axis] == 0) continue;
      auto e = key;
      const double nc = c * e[axis];
      --e[axis];
      out.add_term(e, nc);
    }
    return out;
  }

  Polynomial& operator+=(const Polynomial& o) {
    for (const auto& [e, c] : o.terms_) add_term(e, c);
    return *this;
  }
  Polynomial& operator-=(const Polynomial& o) {
    for (const auto& [e, c] : o.terms_) add_term(e, -c);
    return *this;
  }
  Polynomial& operator*=(double s) {
    if (s == 0.0) {
      terms_.clear();
      return *this;
    }
    for (auto& [e, c] : terms_) c *= s;
    return *this;
  }

  friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
  friend Polynomial operator-(Polynomial a, const Polynomial& b) { return a -= b; }
  friend Polynomial operator-(Polynomial a) { return a *= -1.0; }
  friend Polynomial operator*(Polynomial a, double s) { return a *= s; }
  friend Polynomial operator*(double s, Polynomial a) { return a *= s; }
  friend Polynomial operator*(const Polynomial& a, const Polynomial& b) {
    Polynomial out;
    for (const auto& [ea, ca] : a.terms_)
      for (const auto& [eb, cb] : b.terms_)
        out.add_term({ea[0] + eb[0], ea[1] + eb[1], ea[2] + eb[2]}, ca * cb);
    return out;
  }
  friend bool operator==(const Polynomial& a, const Polynomial& b) { return a.terms_ == b.terms_; }

  /// Largest |coefficient|; 0 for the zero polynomial.
  double max_abs_coeff() const {
    double m = 0.0;
    for (const auto& [e, c] : terms_) m = std::max(m, std::abs(c));
    return m;
  }

  std::string str() const {
    if (terms_.empty()) return "0";
    std::ostringstream os;
    bool first = true;
    for (const auto& [e, c] : terms_) {
      if (!first) os << (c < 0 ? " - " : " + ");
      else if (c < 0) os << "-";
      first = false;
      const double a = std::abs(c);
      const bool constant = e[0] == 0 && e[1] == 0 && e[2] == 0;
      if (a != 1.0 || constant) os << a;
      static constexpr char names[3] = {'x', 'y', 'z'};
      for (int v = 0; v < 3; ++v) {
        if (e[v] == 0) continue;
        os << names[v];
        if (e[v] > 1) os << '^' << e[v];
      }
    }
    return os.str();
  }

  friend std::ostream& operator<<(std::ostream& os, const Polynomial& p) { return os << p.str(); }

 private:
  static double ipow(double b, int e) {
    double r = 1.0;
    for (int i = 0; i < e; ++i) r *= b;
    return r;
  }

  void add_term(const Exponents& e, double c) {
    if (c == 0.0) return;
    auto [it, inserted] = terms_.try_emplace(e, c);
    if (!inserted) {
      it->second += c;
      if (it->second == 0.0) terms_.erase(it);
    }
  }

  Terms terms_;
};

/// Random polynomial of total degree <= max_degree with small integer
/// coefficients in [-3, 3] (exact in binary) and roughly half the
/// monomials present.
inline Polynomial random_polynomial(CounterRng& rng, int max_degree) {
  Polynomial p;
  for (int i = 0; i <= max_degree; ++i)
    for (int j = 0; i + j <= max_degree; ++j)
      for (int k = 0; i + j + k <= max_degree; ++k) {
        if (rng.uniform() < 0.5) continue;
        const double c = static_cast<double>(static_cast<int>(rng.below(7)) - 3);
        p += Polynomial::monomial(c, i, j, k);
      }
  return p;
}

}  // namespace heatgauge
