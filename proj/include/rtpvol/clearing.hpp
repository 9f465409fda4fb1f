#pragma once

// Wholesale clearing: minimum-cost dispatch of a fixed demand with
// marginal-cost pricing, and welfare-maximising clearing of elastic demand.

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "rtpvol/agents.hpp"
#include "rtpvol/errors.hpp"
#include "rtpvol/numeric.hpp"

namespace rtpvol {

struct Dispatch {
  std::vector<double> quantities;
  double price = 0.0;
  double total_cost = 0.0;
};

struct Clearing {
  std::vector<double> demands;
  std::vector<double> supplies;
  double price = 0.0;
  double welfare = 0.0;
};

namespace detail {

// Price interval on which every function's marginal inverse is defined.
inline std::pair<double, double> common_price_range(const std::vector<SmoothFunction>& fs, double lo, double hi) {
  for (const auto& f : fs) {
    lo = std::max(lo, f.marginal_range().first);
    hi = std::min(hi, f.marginal_range().second);
  }
  return {lo, hi};
}

inline double total_inverse(const std::vector<SmoothFunction>& fs, double lam) {
  double s = 0.0;
  for (const auto& f : fs) s += f.d1_inverse(lam);
  return s;
}

}  // namespace detail

inline Dispatch clear_fixed_demand(const std::vector<SmoothFunction>& costs, double demand_hat) {
  if (costs.empty()) throw ValidationError("clear_fixed_demand: no producers");
  for (const auto& c : costs) {
    if (c.side() != Side::cost) throw ValidationError("clear_fixed_demand: producers need cost-side functions");
  }
  if (!(demand_hat > 0.0) || !std::isfinite(demand_hat)) {
    throw ValidationError("clear_fixed_demand: demand must be positive and finite, got " + numeric::fmt(demand_hat));
  }
  const auto [lo, hi] = detail::common_price_range(costs, 0.0, std::numeric_limits<double>::infinity());
  if (!(hi > lo)) throw RangeError("clear_fixed_demand: producers share no common price range");
  auto r = [&](double lam) { return detail::total_inverse(costs, lam) - demand_hat; };
  if (r(lo) > 0.0 || r(hi) < 0.0) {
    throw RangeError("clear_fixed_demand: demand " + numeric::fmt(demand_hat) +
                     " outside the reachable aggregate supply on the truncated domain");
  }
  numeric::BisectOptions opt;
  opt.residual_tol = 1e-13 * demand_hat;
  const double lam = numeric::bisect(r, lo, hi, opt);
  Dispatch d;
  d.price = lam;
  for (const auto& c : costs) {
    d.quantities.push_back(c.d1_inverse(lam));
    d.total_cost += c(d.quantities.back());
  }
  return d;
}

inline double social_welfare(const std::vector<SmoothFunction>& costs, const std::vector<SmoothFunction>& values,
                             const std::vector<double>& supplies, const std::vector<double>& demands) {
  double w = 0.0;
  for (std::size_t j = 0; j < values.size(); ++j) w += values[j](demands[j]);
  for (std::size_t i = 0; i < costs.size(); ++i) w -= costs[i](supplies[i]);
  return w;
}

// Equilibrium price where aggregate demand meets aggregate supply, searched
// on [price_lo, price_hi] intersected with every agent's marginal range.
inline Clearing welfare_clear(const std::vector<SmoothFunction>& costs, const std::vector<SmoothFunction>& values,
                              double price_lo = 1e-6, double price_hi = 1e6) {
  if (costs.empty() || values.empty()) throw ValidationError("welfare_clear: both market sides must be nonempty");
  for (const auto& c : costs) {
    if (c.side() != Side::cost) throw ValidationError("welfare_clear: producers need cost-side functions");
  }
  for (const auto& v : values) {
    if (v.side() != Side::value) throw ValidationError("welfare_clear: consumers need value-side functions");
  }
  auto [lo, hi] = detail::common_price_range(costs, price_lo, price_hi);
  std::tie(lo, hi) = detail::common_price_range(values, lo, hi);
  if (!(hi > lo)) throw RangeError("welfare_clear: no equilibrium in range (empty common price range)");
  auto excess = [&](double lam) { return detail::total_inverse(values, lam) - detail::total_inverse(costs, lam); };
  const double elo = excess(lo), ehi = excess(hi);
  if (elo < 0.0 || ehi > 0.0) {
    throw RangeError("welfare_clear: no equilibrium in range, excess demand " + numeric::fmt(elo) + " at " +
                     numeric::fmt(lo) + " and " + numeric::fmt(ehi) + " at " + numeric::fmt(hi));
  }
  numeric::BisectOptions opt;
  opt.residual_tol = 0.0;
  Clearing c;
  c.price = numeric::bisect(excess, lo, hi, opt);
  for (const auto& v : values) c.demands.push_back(v.d1_inverse(c.price));
  for (const auto& s : costs) c.supplies.push_back(s.d1_inverse(c.price));
  c.welfare = social_welfare(costs, values, c.supplies, c.demands);
  return c;
}

// True when every balanced move d_j +/- eps, s_i +/- eps lowers welfare.
inline bool is_local_welfare_optimum(const std::vector<SmoothFunction>& costs, const std::vector<SmoothFunction>& values,
                                     const Clearing& c, double eps = 1e-3) {
  for (std::size_t j = 0; j < values.size(); ++j) {
    for (std::size_t i = 0; i < costs.size(); ++i) {
      for (double sgn : {-1.0, 1.0}) {
        auto d = c.demands;
        auto s = c.supplies;
        d[j] += sgn * eps;
        s[i] += sgn * eps;
        if (d[j] <= values[j].domain_lo() || s[i] <= costs[i].domain_lo()) continue;
        if (!(social_welfare(costs, values, s, d) < c.welfare)) return false;
      }
    }
  }
  return true;
}

}  // namespace rtpvol
