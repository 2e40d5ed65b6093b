#pragma once

// Markov kernels on finite spaces: the exact arena in which contraction of
// the averaging operator can be checked without any sampling error.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "heatgauge/errors.hpp"
#include "heatgauge/report.hpp"
#include "heatgauge/rng.hpp"

namespace heatgauge::measure {

inline constexpr double kStochasticTol = 1e-12;
inline constexpr double kContractionTol = 1e-12;
inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Non-negative finite measure on {0, ..., n-1}.
class FiniteMeasure {
 public:
  explicit FiniteMeasure(std::vector<double> weights) : w_(std::move(weights)) {
    if (w_.empty()) throw InvalidInput("measure must have at least one point");
    for (double v : w_)
      if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidInput("measure weights must be finite and >= 0");
    if (!(total() > 0.0)) throw InvalidInput("measure must have positive total mass");
  }

  std::size_t size() const { return w_.size(); }
  double operator[](std::size_t i) const { return w_[i]; }
  std::span<const double> weights() const { return w_; }
  double total() const { return std::accumulate(w_.begin(), w_.end(), 0.0); }

 private:
  std::vector<double> w_;
};

/// Real function on {0, ..., n-1}.
class FiniteFunction {
 public:
  explicit FiniteFunction(std::vector<double> values) : v_(std::move(values)) {
    for (double x : v_)
      if (!std::isfinite(x)) throw InvalidInput("function values must be finite");
  }

  std::size_t size() const { return v_.size(); }
  double operator[](std::size_t i) const { return v_[i]; }
  std::span<const double> values() const { return v_; }

 private:
  std::vector<double> v_;
};

/// Row-stochastic matrix; entry (x, y) is the probability mu^x({y}).
class FiniteKernel {
 public:
  FiniteKernel(std::size_t rows, std::size_t cols, std::vector<double> entries)
      : rows_(rows), cols_(cols), p_(std::move(entries)) {
    if (rows_ == 0 || cols_ == 0) throw InvalidInput("kernel must be non-empty");
    if (p_.size() != rows_ * cols_) throw InvalidInput("kernel entry count does not match shape");
    for (std::size_t x = 0; x < rows_; ++x) {
      double sum = 0.0;
      for (std::size_t y = 0; y < cols_; ++y) {
        const double v = (*this)(x, y);
        if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidInput("kernel entries must be finite and >= 0");
        sum += v;
      }
      if (std::abs(sum - 1.0) > kStochasticTol)
        throw InvalidInput("kernel row " + std::to_string(x) + " sums to " + std::to_string(sum));
    }
  }

  static FiniteKernel identity(std::size_t n) {
    std::vector<double> e(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) e[i * n + i] = 1.0;
    return {n, n, std::move(e)};
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double operator()(std::size_t x, std::size_t y) const { return p_[x * cols_ + y]; }
  std::span<const double> row(std::size_t x) const { return {p_.data() + x * cols_, cols_}; }

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> p_;
};

/// nu2({y}) = sum_x mu^x({y}) nu1({x}).
inline FiniteMeasure pushforward(const FiniteKernel& k, const FiniteMeasure& nu1) {
  if (k.rows() != nu1.size()) throw InvalidInput("pushforward: kernel rows != measure size");
  std::vector<double> out(k.cols(), 0.0);
  for (std::size_t x = 0; x < k.rows(); ++x)
    for (std::size_t y = 0; y < k.cols(); ++y) out[y] += k(x, y) * nu1[x];
  return FiniteMeasure(std::move(out));
}

/// (Af)(x) = sum_y f(y) mu^x({y}).
inline FiniteFunction apply_kernel(const FiniteKernel& k, const FiniteFunction& f) {
  if (k.cols() != f.size()) throw InvalidInput("apply_kernel: kernel cols != function size");
  std::vector<double> out(k.rows(), 0.0);
  for (std::size_t x = 0; x < k.rows(); ++x) {
    double acc = 0.0;
    for (std::size_t y = 0; y < k.cols(); ++y) acc += f[y] * k(x, y);
    out[x] = acc;
  }
  return FiniteFunction(std::move(out));
}

/// (k1 o k2)^x({z}) = sum_y k1^x({y}) k2^y({z}).
inline FiniteKernel compose_kernels(const FiniteKernel& k1, const FiniteKernel& k2) {
  if (k1.cols() != k2.rows()) throw InvalidInput("compose_kernels: inner dimensions differ");
  std::vector<double> out(k1.rows() * k2.cols(), 0.0);
  for (std::size_t x = 0; x < k1.rows(); ++x)
    for (std::size_t y = 0; y < k1.cols(); ++y) {
      const double a = k1(x, y);
      for (std::size_t z = 0; z < k2.cols(); ++z) out[x * k2.cols() + z] += a * k2(y, z);
    }
  // rows must stay stochastic under repeated composition
  for (std::size_t x = 0; x < k1.rows(); ++x) {
    double s = 0.0;
    for (std::size_t z = 0; z < k2.cols(); ++z) s += out[x * k2.cols() + z];
    for (std::size_t z = 0; z < k2.cols(); ++z) out[x * k2.cols() + z] /= s;
  }
  return {k1.rows(), k2.cols(), std::move(out)};
}

/// L^p(nu) norm, p in [1, inf]. For p = inf the sup runs over points of
/// positive mass only.
inline double lp_norm(const FiniteFunction& f, const FiniteMeasure& nu, double p) {
  if (f.size() != nu.size()) throw InvalidInput("lp_norm: function and measure sizes differ");
  if (!(p >= 1.0)) throw InvalidInput("lp_norm: p must be >= 1");
  if (std::isinf(p)) {
    double m = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i)
      if (nu[i] > 0.0) m = std::max(m, std::abs(f[i]));
    return m;
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) acc += std::pow(std::abs(f[i]), p) * nu[i];
  return std::pow(acc, 1.0 / p);
}

/// Integral of f against nu.
inline double integrate(const FiniteFunction& f, const FiniteMeasure& nu) {
  if (f.size() != nu.size()) throw InvalidInput("integrate: function and measure sizes differ");
  double acc = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) acc += f[i] * nu[i];
  return acc;
}

/// ||Af||_{L^p(nu1)} <= ||f||_{L^p(nu2)} with nu2 the pushforward of nu1.
inline InequalityReport check_contraction(const FiniteKernel& k, const FiniteMeasure& nu1,
                                          const FiniteFunction& f, double p) {
  const FiniteMeasure nu2 = pushforward(k, nu1);
  InequalityReport r;
  r.claim = "markov-kernel-contraction";
  r.suite = "finite-sweep";
  r.geometry = "finite:" + std::to_string(k.rows()) + "x" + std::to_string(k.cols());
  r.function = "random";
  r.lhs = lp_norm(apply_kernel(k, f), nu1, p);
  r.rhs = lp_norm(f, nu2, p);
  r.param = p;
  r.margin = r.rhs - r.lhs;
  r.verdict = r.lhs <= r.rhs + kContractionTol ? Verdict::pass_exact : Verdict::fail;
  return r;
}

/// Exponents used by random sweeps.
inline constexpr std::array<double, 6> kSweepExponents{1.0, 1.5, 2.0, 3.0, 10.0, kInfinity};

struct RandomInstance {
  FiniteKernel kernel;
  FiniteMeasure nu1;
  FiniteFunction f;
};

/// Kernel entries and weights uniform(0,1) then normalized; f uniform(-1,1)
/// scaled by a random magnitude.
inline RandomInstance random_instance(CounterRng& rng, std::size_t max_points = 12) {
  const std::size_t nx = 1 + rng.below(max_points);
  const std::size_t ny = 1 + rng.below(max_points);
  std::vector<double> e(nx * ny);
  for (std::size_t x = 0; x < nx; ++x) {
    double s = 0.0;
    for (std::size_t y = 0; y < ny; ++y) s += (e[x * ny + y] = rng.uniform());
    for (std::size_t y = 0; y < ny; ++y) e[x * ny + y] /= s;
  }
  std::vector<double> w(nx);
  double s = 0.0;
  for (auto& v : w) s += (v = rng.uniform());
  for (auto& v : w) v /= s;
  const double scale = std::pow(10.0, 4.0 * rng.uniform() - 2.0);
  std::vector<double> fv(ny);
  for (auto& v : fv) v = scale * (2.0 * rng.uniform() - 1.0);
  return {FiniteKernel(nx, ny, std::move(e)), FiniteMeasure(std::move(w)), FiniteFunction(std::move(fv))};
}

}  // namespace heatgauge::measure
