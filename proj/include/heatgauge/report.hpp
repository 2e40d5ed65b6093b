#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>

namespace heatgauge {

enum class Verdict { pass, pass_exact, inconclusive, fail };

inline std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::pass: return "PASS";
    case Verdict::pass_exact: return "PASS-exact";
    case Verdict::inconclusive: return "INCONCLUSIVE";
    case Verdict::fail: return "FAIL";
  }
  return "?";
}

inline bool is_pass(Verdict v) { return v == Verdict::pass || v == Verdict::pass_exact; }

/// How lhs and rhs are compared.
enum class Relation { less_equal, equal };

struct Provenance {
  std::uint64_t seed = 0;
  std::uint64_t n = 0;
  double dt = 0.0;
  std::string method = "exact";
};

/// One verified inequality (or identity) instance.
///
/// `margin` is always rhs - lhs. For `Relation::equal` the claim passes when
/// |margin| is inside the allowance; for `less_equal` when margin is not
/// significantly negative.
struct InequalityReport {
  std::string claim;      // what is being claimed, e.g. "semigroup-contraction"
  std::string suite;
  std::string geometry;
  std::string function;
  Relation relation = Relation::less_equal;
  double lhs = 0.0;
  double rhs = 0.0;
  double lhs_stderr = 0.0;
  double rhs_stderr = 0.0;
  double bias_allowance = 0.0;  // systematic (discretization) allowance
  double margin = 0.0;
  double param = 0.0;           // abscissa for plot-data (time, distance, ...)
  bool control = false;         // falsification control: expected to FAIL
  Verdict verdict = Verdict::inconclusive;
  Provenance provenance;
  std::string note;
};

/// Tolerances pinned for every suite.
struct TolerancePolicy {
  double sigmas = 3.0;           // statistical claims: margin >= -(3 sigma + abs_tol)
  double abs_tol = 1e-9;
  double exact_rel_tol = 1e-9;   // exact claims: relative slack
};

inline double combined_stderr(const InequalityReport& r) {
  return std::hypot(r.lhs_stderr, r.rhs_stderr);
}

/// Verdict for a claim whose sides carry Monte Carlo error.
inline Verdict statistical_verdict(InequalityReport& r, const TolerancePolicy& tol = {}) {
  r.margin = r.rhs - r.lhs;
  if (!std::isfinite(r.lhs) || !std::isfinite(r.rhs)) return r.verdict = Verdict::inconclusive;
  const double allowance = tol.sigmas * combined_stderr(r) + r.bias_allowance + tol.abs_tol;
  const bool ok = r.relation == Relation::equal ? std::abs(r.margin) <= allowance
                                                : r.margin >= -allowance;
  return r.verdict = ok ? Verdict::pass : Verdict::fail;
}

/// Verdict for a claim evaluated by closed forms or deterministic quadrature.
inline Verdict exact_verdict(InequalityReport& r, const TolerancePolicy& tol = {}) {
  r.margin = r.rhs - r.lhs;
  if (!std::isfinite(r.lhs) || !std::isfinite(r.rhs)) return r.verdict = Verdict::inconclusive;
  const double slack =
      tol.exact_rel_tol * std::max({1.0, std::abs(r.lhs), std::abs(r.rhs)}) + r.bias_allowance;
  const bool ok = r.relation == Relation::equal ? std::abs(r.margin) <= slack
                                                : r.margin >= -slack;
  return r.verdict = ok ? Verdict::pass_exact : Verdict::fail;
}

/// A control row is healthy when it fails; a claim row when it passes.
inline bool row_as_expected(const InequalityReport& r) {
  return r.control ? r.verdict == Verdict::fail : r.verdict != Verdict::fail;
}

}  // namespace heatgauge
