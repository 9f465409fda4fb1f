#pragma once

// Lyapunov-based certification of the persistence price dynamics
// lambda(t+1) = cdot(vdot^{-1}(lambda(t))), written as g(lambda(t+1)) =
// f(lambda(t)) with f = vdot^{-1} and g = cdot^{-1}, each rescaled by rho_l.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rtpvol/agents.hpp"
#include "rtpvol/dynamics.hpp"
#include "rtpvol/elasticity.hpp"
#include "rtpvol/errors.hpp"
#include "rtpvol/scaling.hpp"

namespace rtpvol {

struct StabilityEntry {
  double l = 0.0;
  SupResult theta;
  bool cond_contraction = false;   // sup ratio < 1
  bool cond_measure_zero = false;  // no plateau of ratio == 1
  bool cond_coercivity = false;    // monotone g and sign of f - g at the far end
  bool certified() const { return cond_contraction && cond_measure_zero && cond_coercivity; }
};

struct StabilityReport {
  std::vector<StabilityEntry> entries;  // in the order of the requested l values
  double best_l = 0.0;                  // smallest supremum among those tried
  std::optional<double> certifying_l;   // first l whose conditions all hold
  bool certified_stable = false;

  const StabilityEntry& at(double l) const {
    for (const auto& e : entries) {
      if (e.l == l) return e;
    }
    throw ValidationError("stability report has no entry for l = " + numeric::fmt(l));
  }
  std::string verdict() const { return certified_stable ? "certified-stable" : "not-certified"; }
};

inline const std::vector<double>& default_l_list() {
  static const std::vector<double> ls{0.0, 0.5, 1.0, 1.5, 2.0, 3.0};
  return ls;
}

struct StabilityOptions {
  double search_lo = 1e-6;
  double search_hi = 1e6;
  double plateau_tol = 1e-6;
  std::size_t max_plateau = 3;
  SupOptions sup;
};

inline StabilityEntry check_scaled_pair(const SmoothFunction& cost, const SmoothFunction& value, double l,
                                        const StabilityOptions& opt = {}) {
  StabilityEntry e;
  e.l = l;
  e.theta = max_relative_ratio(cost, value, RatioKind::price_elasticity, l, opt.search_lo, opt.search_hi, opt.sup);
  e.cond_contraction = !e.theta.unbounded && e.theta.value < 1.0;

  std::size_t run = 0, longest = 0;
  for (double v : e.theta.grid_values) {
    run = std::abs(v - 1.0) <= opt.plateau_tol ? run + 1 : 0;
    longest = std::max(longest, run);
  }
  e.cond_measure_zero = longest <= opt.max_plateau;

  const Scaling rho = Scaling::for_exponent(l);
  bool g_up = true, g_down = true;
  for (double lam : e.theta.grid) {
    const double dg = rho.derivative(cost.d1_inverse(lam)) * cost.d1_inverse_slope(lam);
    g_up = g_up && dg >= 0.0;
    g_down = g_down && dg <= 0.0;
  }
  const double far = e.theta.grid.back();
  bool neg = true, pos = true;
  for (double lam : e.theta.grid) {
    if (lam < far / 10.0) continue;
    const double diff = rho(value.d1_inverse(lam)) - rho(cost.d1_inverse(lam));
    neg = neg && diff < 0.0;
    pos = pos && diff > 0.0;
  }
  e.cond_coercivity = (g_up && neg) || (g_down && pos);
  return e;
}

inline StabilityReport check_stability(const SmoothFunction& cost, const SmoothFunction& value,
                                       const std::vector<double>& l_list = default_l_list(),
                                       const StabilityOptions& opt = {}) {
  if (l_list.empty()) throw ValidationError("check_stability: l_list is empty");
  StabilityReport r;
  double best = std::numeric_limits<double>::infinity();
  for (double l : l_list) {
    StabilityEntry e;
    try {
      e = check_scaled_pair(cost, value, l, opt);
    } catch (const NumericalError& ex) {
      throw DomainError("check_stability at l = " + numeric::fmt(l) + ": " + ex.what());
    }
    if (e.theta.effective() < best || r.entries.empty()) {
      best = e.theta.effective();
      r.best_l = l;
    }
    if (e.certified() && !r.certifying_l) r.certifying_l = l;
    r.entries.push_back(std::move(e));
  }
  r.certified_stable = r.certifying_l.has_value();
  return r;
}

inline StabilityReport check_stability(const MarketModel& m, const std::vector<double>& l_list = default_l_list(),
                                       const StabilityOptions& opt = {}) {
  return check_stability(m.cost, m.value, l_list, opt);
}

struct LyapunovTrace {
  std::vector<double> values;
  bool monotone = true;
  std::optional<std::size_t> first_violation;
};

// V(t) = |rho(f(lambda(t))) - rho(g(lambda(t)))| along a price path; strict
// decrease is required wherever V(t) exceeds the floor.
inline LyapunovTrace lyapunov_trace(const SmoothFunction& cost, const SmoothFunction& value,
                                    const std::vector<double>& prices, const Scaling& rho, double floor = 1e-12) {
  LyapunovTrace tr;
  for (double lam : prices) {
    if (!std::isfinite(lam) || !(lam > 0.0)) break;
    double v;
    try {
      v = std::abs(rho(value.d1_inverse(lam)) - rho(cost.d1_inverse(lam)));
    } catch (const NumericalError&) {
      break;
    }
    if (!std::isfinite(v)) break;
    tr.values.push_back(v);
  }
  for (std::size_t t = 0; t + 1 < tr.values.size(); ++t) {
    if (tr.values[t] > floor && !(tr.values[t + 1] < tr.values[t])) {
      tr.monotone = false;
      tr.first_violation = t;
      break;
    }
  }
  return tr;
}

inline LyapunovTrace lyapunov_trace(const MarketModel& m, const Trajectory& tr, const Scaling& rho,
                                    double floor = 1e-12) {
  return lyapunov_trace(m.cost, m.value, tr.prices, rho, floor);
}

struct Example1 {
  double eta_star = 0.0;
  bool stable = false;
};

// c(x) = x^beta, v(x) = x^(1/alpha): eta* = alpha (beta - 1) / (alpha - 1),
// stable iff beta < 2 - 1/alpha.
inline Example1 example1_closed_form(double alpha, double beta) {
  if (!(alpha > 1.0) || !(beta > 1.0) || !std::isfinite(alpha) || !std::isfinite(beta)) {
    throw ValidationError("example1_closed_form: alpha and beta must be finite and > 1");
  }
  return {alpha * (beta - 1.0) / (alpha - 1.0), beta < 2.0 - 1.0 / alpha};
}

}  // namespace rtpvol
