#pragma once

// Invariant sets and volatility bounds for perturbed and autoregressive
// price dynamics, and an empirical estimate of the log-scaled incremental
// L2 gain from consumer disturbances to demand and supply.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "rtpvol/agents.hpp"
#include "rtpvol/clearing.hpp"
#include "rtpvol/dynamics.hpp"
#include "rtpvol/elasticity.hpp"
#include "rtpvol/errors.hpp"
#include "rtpvol/numeric.hpp"
#include "rtpvol/parallel.hpp"
#include "rtpvol/random.hpp"

namespace rtpvol {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Radius of the invariant set: kappa (1 + theta) / (1 - theta).
inline double zeta_kappa(double kappa, double theta) {
  if (theta >= 1.0) return kInf;
  return kappa * (1.0 + theta) / (1.0 - theta);
}

// Bound on the log-scaled supply IMV, with constant C = 2 kappa.
inline double imv_bound(double kappa, double theta) {
  if (theta >= 1.0) return kInf;
  return 2.0 * kappa / (1.0 - theta);
}

inline double iav_bound(double gamma0, double sum_theta) {
  if (sum_theta >= 1.0) return kInf;
  return gamma0 / (1.0 - sum_theta);
}

struct InvarianceReport {
  std::string perturbation;
  double kappa = 0.0;
  double theta_tilde = 0.0;  // +inf when the supremum is unbounded
  double restricted_lo = 0.0;  // lower end of the price range searched
  double zeta = 0.0;
  double gamma0 = 0.0;
  double sum_theta = 0.0;
  double imv_bound = 0.0;
  double iav_bound = 0.0;
  bool bounds_infinite = false;
};

struct InvarianceOptions {
  double search_lo = 1e-6;
  double search_hi = 1e6;
  SupOptions sup;
};

// Log-scaled contraction ratio for the multiplicative model: theta*(1).
inline SupResult theta_tilde_multiplicative(const SmoothFunction& cost, const SmoothFunction& value,
                                            const InvarianceOptions& opt = {}) {
  return max_relative_ratio(cost, value, RatioKind::price_elasticity, 1.0, opt.search_lo, opt.search_hi, opt.sup);
}

// Contraction ratio for the additive model, restricted to prices at or above
// cdot(u0 / 2) where demand is bounded below by u0 / 2.
inline SupResult theta_tilde_additive(const SmoothFunction& cost, const SmoothFunction& value, double u0,
                                      const InvarianceOptions& opt = {}) {
  if (!(u0 > 0.0)) throw ValidationError("theta_tilde_additive: u0 must be positive");
  const double floor_price = cost.d1(u0 / 2.0);
  auto [lo, hi] = ratio_search_range(cost, value, RatioKind::price_elasticity, std::max(opt.search_lo, floor_price),
                                     std::max(opt.search_hi, floor_price * 10.0));
  auto obj = [&](double lam) {
    const double d = value.d1_inverse(lam);
    const double s = cost.d1_inverse(lam);
    return std::abs(value.d1_inverse_slope(lam) / (0.5 * u0 + d)) / std::abs(cost.d1_inverse_slope(lam) / s);
  };
  return sup_search(obj, lo, hi, opt.sup);
}

enum class EquilibriumCheck { pass, fail, indeterminate };

inline const char* to_string(EquilibriumCheck e) {
  switch (e) {
    case EquilibriumCheck::pass: return "pass";
    case EquilibriumCheck::fail: return "fail";
    case EquilibriumCheck::indeterminate: return "indeterminate";
  }
  return "?";
}

struct ArConditions {
  std::vector<double> theta_k;
  double sum = 0.0;
  bool pass = false;
  EquilibriumCheck equilibrium_check = EquilibriumCheck::indeterminate;
  std::optional<double> lambda_bar;
  std::optional<double> eps_rel_at_equilibrium;  // |eps_D / eps_S| at lambda_bar with l = 1
  std::string method;
};

namespace detail {

// Fixed point of cdot^{-1}(lambda) = A vdot^{-1}(lambda).
inline std::optional<double> ar_fixed_point(const SmoothFunction& cost, const SmoothFunction& value, double a,
                                            double lo, double hi) {
  if (!(a > 0.0)) return std::nullopt;
  try {
    auto [plo, phi] = ratio_search_range(cost, value, RatioKind::price_elasticity, lo, hi);
    auto r = [&](double lam) { return a * value.d1_inverse(lam) - cost.d1_inverse(lam); };
    if (r(plo) < 0.0 || r(phi) > 0.0) return std::nullopt;
    numeric::BisectOptions opt;
    opt.residual_tol = 0.0;
    return numeric::bisect(r, plo, phi, opt);
  } catch (const NumericalError&) {
    return std::nullopt;
  }
}

}  // namespace detail

// Per-lag contraction constants for the autoregressive price dynamics under
// rho(z) = z^(1-l) (log at l = 1):
//   theta_k = sup |a_k q'(lambda_k)| F^{-l} / (s(lambda_k)^{-l} s'(lambda_k)),
// F = sum_j a_j q(lambda_j), q the demand and s the supply curve. One lag is
// searched over the full price range; several lags over a box around the
// equilibrium price.
inline ArConditions check_ar_conditions(const SmoothFunction& cost, const SmoothFunction& value,
                                        const std::vector<double>& coeffs, double l,
                                        const InvarianceOptions& opt = {}) {
  if (coeffs.empty()) throw ValidationError("check_ar_conditions: coefficient list is empty");
  if (!(l >= 0.0)) throw ValidationError("check_ar_conditions: l must be >= 0");
  ArConditions out;
  double a_sum = 0.0;
  for (double a : coeffs) a_sum += a;

  out.lambda_bar = detail::ar_fixed_point(cost, value, a_sum, opt.search_lo, opt.search_hi);
  if (out.lambda_bar) {
    const double lb = *out.lambda_bar;
    const double eps_d = generalized_elasticity(value, lb, l);
    const double eps_s = generalized_elasticity(cost, lb, l);
    const double lhs = std::abs(a_sum) * std::abs(eps_d);
    const double rhs = std::abs(eps_s) * std::pow(std::abs(a_sum), l);
    out.equilibrium_check = lhs <= rhs ? EquilibriumCheck::pass : EquilibriumCheck::fail;
    out.eps_rel_at_equilibrium = std::abs(relative_price_elasticity(cost, value, lb, 1.0));
  }

  if (coeffs.size() == 1) {
    if (!(coeffs[0] > 0.0)) throw ValidationError("check_ar_conditions: a single coefficient must be positive");
    const SupResult s =
        max_relative_ratio(cost, value, RatioKind::price_elasticity, l, opt.search_lo, opt.search_hi, opt.sup);
    out.theta_k.push_back(s.effective() * std::pow(coeffs[0], 1.0 - l));
    out.method = "full-range";
  } else {
    double center;
    if (out.lambda_bar) {
      center = *out.lambda_bar;
    } else {
      center = welfare_clear({cost}, {value}, opt.search_lo, opt.search_hi).price;
    }
    auto [lo, hi] =
        ratio_search_range(cost, value, RatioKind::price_elasticity, center / 10.0, center * 10.0);
    const std::size_t n = coeffs.size();
    out.theta_k.assign(n, 0.0);
    auto visit = [&](const std::vector<double>& q, const std::vector<double>& dq, const std::vector<double>& s,
                     const std::vector<double>& ds) {
      double f = 0.0;
      for (std::size_t j = 0; j < n; ++j) f += coeffs[j] * q[j];
      if (!(f > 0.0)) return;
      for (std::size_t k = 0; k < n; ++k) {
        const double v = std::abs(coeffs[k] * dq[k]) * std::exp(l * (std::log(s[k]) - std::log(f))) / ds[k];
        out.theta_k[k] = std::max(out.theta_k[k], v);
      }
    };
    std::vector<double> q(n), dq(n), s(n), ds(n);
    if (n <= 3) {
      out.method = "box-grid";
      const auto axis = numeric::log_grid(lo, hi, 64);
      std::vector<double> aq, adq, as, ads;
      for (double lam : axis) {
        aq.push_back(value.d1_inverse(lam));
        adq.push_back(value.d1_inverse_slope(lam));
        as.push_back(cost.d1_inverse(lam));
        ads.push_back(cost.d1_inverse_slope(lam));
      }
      std::vector<std::size_t> idx(n, 0);
      for (;;) {
        for (std::size_t j = 0; j < n; ++j) {
          q[j] = aq[idx[j]];
          dq[j] = adq[idx[j]];
          s[j] = as[idx[j]];
          ds[j] = ads[idx[j]];
        }
        visit(q, dq, s, ds);
        std::size_t j = 0;
        while (j < n && ++idx[j] == axis.size()) idx[j++] = 0;
        if (j == n) break;
      }
    } else {
      out.method = "box-random";
      RandomStream rng(0x5eedULL, n);
      const double la = std::log(lo), lb = std::log(hi);
      for (int p = 0; p < 10000; ++p) {
        for (std::size_t j = 0; j < n; ++j) {
          const double lam = std::exp(rng.uniform(la, lb));
          q[j] = value.d1_inverse(lam);
          dq[j] = value.d1_inverse_slope(lam);
          s[j] = cost.d1_inverse(lam);
          ds[j] = cost.d1_inverse_slope(lam);
        }
        visit(q, dq, s, ds);
      }
    }
  }
  for (double t : out.theta_k) out.sum += t;
  out.pass = out.sum <= 1.0;
  return out;
}

inline ArConditions check_ar_conditions(const MarketModel& m, const std::vector<double>& coeffs, double l,
                                        const InvarianceOptions& opt = {}) {
  return check_ar_conditions(m.cost, m.value, coeffs, l, opt);
}

namespace detail {

inline double elastic_or_shifted(const MarketModel& m, double lam) {
  const double d = m.value.d1_inverse(lam);
  return m.perturbation.is_additive() ? m.perturbation.u0() + d : d;
}

}  // namespace detail

// gamma0 from the initial prices (oldest first) with g = log cdot^{-1} and f
// the log of the predicted demand: V at the newest state plus the sum of the
// |g| increments across the initial states.
inline double gamma0(const MarketModel& m, std::vector<double> init) {
  if (init.empty()) throw ValidationError("gamma0: no initial states");
  const auto w = m.predictor.weights();
  while (init.size() < std::max<std::size_t>(2, w.size())) init.insert(init.begin(), init.front());
  auto g = [&](double lam) { return std::log(m.cost.d1_inverse(lam)); };
  double f = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k) f += w[k] * detail::elastic_or_shifted(m, init[init.size() - 1 - k]);
  if (!(f > 0.0)) throw DegenerateDemandError("gamma0: predicted demand at the initial states is not positive");
  double gam = std::abs(g(init.back()) - std::log(f));
  for (std::size_t i = 1; i < init.size(); ++i) gam += std::abs(g(init[i]) - g(init[i - 1]));
  return gam;
}

inline InvarianceReport invariant_set_params(const MarketModel& m, double kappa, const std::vector<double>& init,
                                             const InvarianceOptions& opt = {}) {
  if (!(kappa >= 0.0) || !std::isfinite(kappa)) throw ValidationError("invariance: kappa must be finite and >= 0");
  InvarianceReport r;
  r.kappa = kappa;
  SupResult th;
  if (m.perturbation.is_additive()) {
    if (kappa > m.perturbation.u0()) throw DisturbanceBoundError("invariance: kappa exceeds u0");
    r.perturbation = "additive";
    th = theta_tilde_additive(m.cost, m.value, m.perturbation.u0(), opt);
  } else {
    if (kappa > 1.0) throw DisturbanceBoundError("invariance: multiplicative kappa must be <= 1");
    r.perturbation = m.perturbation.is_multiplicative() ? "multiplicative" : "none";
    th = theta_tilde_multiplicative(m.cost, m.value, opt);
  }
  r.restricted_lo = th.search_lo;
  r.theta_tilde = th.effective();
  const auto w = m.predictor.weights();
  r.sum_theta = w.size() > 1 ? check_ar_conditions(m, w, 1.0, opt).sum : r.theta_tilde;
  r.zeta = zeta_kappa(kappa, r.theta_tilde);
  r.imv_bound = imv_bound(kappa, r.theta_tilde);
  r.gamma0 = gamma0(m, init);
  r.iav_bound = iav_bound(r.gamma0, r.sum_theta);
  r.bounds_infinite = r.theta_tilde >= 1.0 || r.sum_theta >= 1.0;
  return r;
}

// Largest value over nu in [-kappa, kappa] of ||f(lambda, nu) - g(lambda)| - |nu||
// minus zeta_kappa(theta); the state lies in Omega(theta) iff this is <= 0.
inline double omega_excess(const MarketModel& m, double lambda, double kappa, double theta,
                           std::size_t samples = 257) {
  const double g = std::log(m.cost.d1_inverse(lambda));
  const double d = m.value.d1_inverse(lambda);
  double worst = 0.0;
  for (std::size_t i = 0; i < samples; ++i) {
    const double nu = samples == 1 ? 0.0 : -kappa + 2.0 * kappa * static_cast<double>(i) / (samples - 1.0);
    const double f = m.perturbation.is_additive() ? std::log(m.perturbation.u0() + 0.5 * nu + d)
                                                  : std::log1p(0.5 * nu) + std::log(d);
    worst = std::max(worst, std::abs(std::abs(f - g) - std::abs(nu)));
  }
  return worst - zeta_kappa(kappa, theta);
}

inline bool in_invariant_set(const MarketModel& m, double lambda, double kappa, double theta) {
  return omega_excess(m, lambda, kappa, theta) <= 0.0;
}

struct L2GainEstimate {
  double empirical_gain = 0.0;  // demand side
  double empirical_gain_supply = 0.0;
  double theta_star = 0.0;
  double bound_demand_side = 0.0;  // theta* / (1 - theta*)
  double bound_supply_side = 0.0;  // 1 / (1 - theta*)
  std::size_t samples = 0;         // pairs that contributed
  std::size_t pairs = 0;
};

// Paired simulations of the multiplicative model from the equilibrium price,
// with independent disturbances supported on the first horizon/2 steps.
// Input rho(u) = log(1 + delta/2); outputs are log vdot^{-1}(lambda(t)) for
// demand and log cdot^{-1}(lambda(t)) for supply. Returns the largest
// observed output/input ratio of l2 distances.
inline L2GainEstimate estimate_l2_gain(const MarketModel& m, std::size_t n_pairs, std::size_t horizon,
                                       std::uint64_t seed, unsigned threads = 0,
                                       const InvarianceOptions& opt = {}) {
  if (!m.perturbation.is_multiplicative()) throw ValidationError("l2 gain needs a multiplicative perturbation model");
  if (horizon < 2) throw ValidationError("l2 gain: horizon must be >= 2");
  const double kappa = m.perturbation.kappa;
  if (!(kappa > 0.0) || kappa > 1.0) throw DisturbanceBoundError("l2 gain: kappa must lie in (0, 1]");
  L2GainEstimate est;
  est.pairs = n_pairs;
  est.theta_star = theta_tilde_multiplicative(m.cost, m.value, opt).effective();
  est.bound_demand_side = est.theta_star >= 1.0 ? kInf : est.theta_star / (1.0 - est.theta_star);
  est.bound_supply_side = est.theta_star >= 1.0 ? kInf : 1.0 / (1.0 - est.theta_star);
  const double lam_star = welfare_clear({m.cost}, {m.value}, opt.search_lo, opt.search_hi).price;
  const std::size_t support = horizon / 2;

  struct PairResult {
    double din = 0.0, dd = 0.0, ds = 0.0;
  };
  std::vector<PairResult> res(n_pairs);
  parallel_for(n_pairs, threads, [&](std::size_t p) {
    RandomStream rng(seed, p);
    std::vector<double> u(horizon, 0.0), ub(horizon, 0.0);
    for (std::size_t t = 0; t < support; ++t) {
      u[t] = rng.uniform(-kappa, kappa);
      ub[t] = rng.uniform(-kappa, kappa);
    }
    double la = lam_star, lb = lam_star;
    PairResult r;
    for (std::size_t t = 0; t <= horizon; ++t) {
      const double da = m.value.d1_inverse(la), db = m.value.d1_inverse(lb);
      const double dd = std::log(da) - std::log(db);
      const double ds = std::log(m.cost.d1_inverse(la)) - std::log(m.cost.d1_inverse(lb));
      r.dd += dd * dd;
      r.ds += ds * ds;
      if (t == horizon) break;
      const double din = std::log1p(0.5 * u[t]) - std::log1p(0.5 * ub[t]);
      r.din += din * din;
      la = detail::clear_at(m.cost, (1.0 + 0.5 * u[t]) * da);
      lb = detail::clear_at(m.cost, (1.0 + 0.5 * ub[t]) * db);
    }
    res[p] = r;
  });
  for (const auto& r : res) {
    if (!(r.din > 0.0)) continue;
    ++est.samples;
    est.empirical_gain = std::max(est.empirical_gain, std::sqrt(r.dd / r.din));
    est.empirical_gain_supply = std::max(est.empirical_gain_supply, std::sqrt(r.ds / r.din));
  }
  return est;
}

}  // namespace rtpvol
