#pragma once

// Generalised price elasticities and the suprema of their ratios: the
// maximal relative price-elasticity theta*(l) over prices and the maximal
// relative risk-aversion eta*(l) over quantities.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "rtpvol/agents.hpp"
#include "rtpvol/errors.hpp"
#include "rtpvol/numeric.hpp"

namespace rtpvol {

// (lambda / q(lambda))^l * dq/dlambda, where q is the demand curve for a
// value function and the supply curve for a cost function.
inline double generalized_elasticity(const SmoothFunction& f, double lambda, double l) {
  if (!(l >= 0.0)) throw ValidationError("elasticity exponent l must be >= 0");
  const double q = f.d1_inverse(lambda);
  const double slope = f.d1_inverse_slope(lambda);
  if (l == 0.0) return slope;
  if (!(q > 0.0)) {
    throw SingularityError("elasticity undefined: zero quantity at price " + numeric::fmt(lambda) + " with l > 0");
  }
  return std::pow(lambda / q, l) * slope;
}

// Signed ratio of demand to supply elasticity at lambda.
inline double relative_price_elasticity(const SmoothFunction& cost, const SmoothFunction& value, double lambda,
                                        double l) {
  const double d = value.d1_inverse(lambda);
  const double s = cost.d1_inverse(lambda);
  if (l > 0.0 && (!(d > 0.0) || !(s > 0.0))) {
    throw SingularityError("relative elasticity undefined at price " + numeric::fmt(lambda));
  }
  const double scale = l == 0.0 ? 1.0 : std::exp(l * (std::log(s) - std::log(d)));
  return scale * value.d1_inverse_slope(lambda) / cost.d1_inverse_slope(lambda);
}

// cddot/vddot * (vdot/cdot)^l at quantity x.
inline double relative_risk_aversion(const SmoothFunction& cost, const SmoothFunction& value, double x, double l) {
  const double ratio = value.d1(x) / cost.d1(x);
  return cost.d2(x) / value.d2(x) * (l == 0.0 ? 1.0 : std::pow(ratio, l));
}

enum class RatioKind { price_elasticity, risk_aversion };

inline const char* to_string(RatioKind k) { return k == RatioKind::price_elasticity ? "price_elasticity" : "risk_aversion"; }

struct SupResult {
  double value = 0.0;
  bool unbounded = false;
  double arg_sup = 0.0;
  bool boundary_hit = false;
  std::size_t evaluations = 0;
  double search_lo = 0.0;
  double search_hi = 0.0;
  std::vector<double> grid;
  std::vector<double> grid_values;

  // Reported value, +inf when unbounded.
  double effective() const { return unbounded ? std::numeric_limits<double>::infinity() : value; }
};

struct SupOptions {
  std::size_t grid_points = 4096;
  std::size_t refine_top = 5;
  double refine_width = 1e-10;
  std::size_t edge_points = 16;
  double unbounded_threshold = 1e6;
};

// Supremum of a nonnegative objective on [lo, hi]: log-spaced grid, then
// golden-section refinement around the best local maxima. Growth through
// the last edge_points grid values towards an end, finishing above the
// threshold, reports an unbounded supremum.
template <class F>
SupResult sup_search(F&& objective, double lo, double hi, const SupOptions& opt = {}) {
  SupResult r;
  r.search_lo = lo;
  r.search_hi = hi;
  r.grid = numeric::log_grid(lo, hi, opt.grid_points);
  const std::size_t n = r.grid.size();
  r.grid_values.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double v = objective(r.grid[i]);
    if (!std::isfinite(v)) {
      throw DomainError("non-finite objective " + numeric::fmt(v) + " at " + numeric::fmt(r.grid[i]));
    }
    r.grid_values[i] = v;
  }
  r.evaluations = n;
  const auto& g = r.grid_values;
  const std::size_t m = std::min(opt.edge_points, n);
  auto rising_to = [&](bool low_end) {
    for (std::size_t k = 0; k + 1 < m; ++k) {
      const std::size_t outer = low_end ? k : n - 1 - k;
      const std::size_t inner = low_end ? k + 1 : n - 2 - k;
      if (!(g[outer] > g[inner])) return false;
    }
    return g[low_end ? 0 : n - 1] > opt.unbounded_threshold;
  };
  if (rising_to(true) || rising_to(false)) {
    const bool low = rising_to(true);
    r.unbounded = true;
    r.value = std::numeric_limits<double>::infinity();
    r.arg_sup = low ? lo : hi;
    r.boundary_hit = true;
    return r;
  }
  std::vector<std::size_t> peaks;
  for (std::size_t i = 0; i < n; ++i) {
    const bool left_ok = i == 0 || g[i] >= g[i - 1];
    const bool right_ok = i + 1 == n || g[i] >= g[i + 1];
    if (left_ok && right_ok) peaks.push_back(i);
  }
  std::stable_sort(peaks.begin(), peaks.end(), [&](std::size_t a, std::size_t b) { return g[a] > g[b]; });
  if (peaks.size() > opt.refine_top) peaks.resize(opt.refine_top);
  std::size_t best_i = peaks.front();
  r.value = g[best_i];
  r.arg_sup = r.grid[best_i];
  for (std::size_t i : peaks) {
    const double a = r.grid[i == 0 ? 0 : i - 1];
    const double b = r.grid[i + 1 == n ? n - 1 : i + 1];
    const auto mx = numeric::golden_max_log(objective, a, b, opt.refine_width);
    r.evaluations += static_cast<std::size_t>(mx.evaluations);
    if (std::isfinite(mx.value) && mx.value > r.value) {
      r.value = mx.value;
      r.arg_sup = mx.x;
    }
  }
  r.boundary_hit = r.arg_sup <= r.grid[1] || r.arg_sup >= r.grid[n - 2];
  return r;
}

// Search interval for a ratio: [lo, hi] clipped to where both functions are
// defined (marginal ranges for prices, domains for quantities).
inline std::pair<double, double> ratio_search_range(const SmoothFunction& cost, const SmoothFunction& value,
                                                    RatioKind kind, double lo, double hi) {
  if (kind == RatioKind::price_elasticity) {
    lo = std::max({lo, cost.marginal_range().first, value.marginal_range().first});
    hi = std::min({hi, cost.marginal_range().second, value.marginal_range().second});
  } else {
    lo = std::max({lo, cost.domain_lo(), value.domain_lo()});
    hi = std::min({hi, cost.domain_hi(), value.domain_hi()});
  }
  if (!(hi > lo)) {
    throw DomainError("ratio search range is empty after clipping to the functions' ranges");
  }
  return {lo, hi};
}

// theta*(l) (price kind) or eta*(l) (risk-aversion kind).
inline SupResult max_relative_ratio(const SmoothFunction& cost, const SmoothFunction& value, RatioKind kind,
                                    double l, double search_lo = 1e-6, double search_hi = 1e6,
                                    const SupOptions& opt = {}) {
  if (!(l >= 0.0) || !std::isfinite(l)) throw ValidationError("max_relative_ratio: l must be finite and >= 0");
  if (!(search_lo > 0.0) || !(search_hi > search_lo)) {
    throw ValidationError("max_relative_ratio: need 0 < search_lo < search_hi");
  }
  const auto [lo, hi] = ratio_search_range(cost, value, kind, search_lo, search_hi);
  if (kind == RatioKind::price_elasticity) {
    return sup_search([&](double lam) { return std::abs(relative_price_elasticity(cost, value, lam, l)); }, lo, hi,
                      opt);
  }
  return sup_search([&](double x) { return std::abs(relative_risk_aversion(cost, value, x, l)); }, lo, hi, opt);
}

}  // namespace rtpvol
