#pragma once

// Closed-loop price and demand dynamics: one-step maps for ex-ante and
// ex-post pricing, deterministic iteration, the stochastic retail-demand
// simulation and the calibration of the elastic demand weight.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rtpvol/agents.hpp"
#include "rtpvol/errors.hpp"
#include "rtpvol/numeric.hpp"
#include "rtpvol/random.hpp"

namespace rtpvol {

enum class Pricing { exante, expost };

inline const char* to_string(Pricing p) { return p == Pricing::exante ? "exante" : "expost"; }

// Forecast model. Persistence and autoregressive predictors combine the most
// recent observations with weights coeffs[k] on lag k (lag 0 = newest).
// PerConsumer holds one price predictor per consumer for ex-post pricing.
struct Predictor {
  enum class Kind { persistence, autoregressive, per_consumer };
  Kind kind = Kind::persistence;
  std::vector<double> coeffs;
  std::vector<Predictor> members;

  static Predictor persistence() { return {}; }
  static Predictor autoregressive(std::vector<double> c) {
    Predictor p;
    p.kind = Kind::autoregressive;
    p.coeffs = std::move(c);
    p.validate();
    return p;
  }
  static Predictor per_consumer(std::vector<Predictor> m) {
    Predictor p;
    p.kind = Kind::per_consumer;
    p.members = std::move(m);
    p.validate();
    return p;
  }

  // Lag weights; persistence is the single weight 1.
  std::vector<double> weights() const { return kind == Kind::autoregressive ? coeffs : std::vector<double>{1.0}; }

  std::size_t order() const {
    if (kind == Kind::per_consumer) {
      std::size_t o = 1;
      for (const auto& m : members) o = std::max(o, m.order());
      return o;
    }
    return weights().size();
  }

  // Weighted combination of a history whose back() is the newest entry.
  double combine(std::span<const double> history) const {
    const auto w = weights();
    if (history.size() < w.size()) throw ValidationError("predictor: history shorter than predictor order");
    double s = 0.0;
    for (std::size_t k = 0; k < w.size(); ++k) s += w[k] * history[history.size() - 1 - k];
    return s;
  }

  void validate() const {
    if (kind == Kind::autoregressive) {
      if (coeffs.empty()) throw ValidationError("autoregressive predictor: coefficient list is empty");
      for (double c : coeffs) {
        if (!std::isfinite(c)) throw ValidationError("autoregressive predictor: coefficients must be finite");
      }
    }
    if (kind == Kind::per_consumer) {
      if (members.empty()) throw ValidationError("per-consumer predictor: needs at least one consumer");
      for (const auto& m : members) {
        if (m.kind == Kind::per_consumer) throw ValidationError("per-consumer predictor: members cannot be nested");
        m.validate();
      }
    }
  }
};

struct MarketModel {
  SmoothFunction cost;
  SmoothFunction value;
  ConsumerPerturbation perturbation;
  Predictor predictor;
  Pricing pricing = Pricing::exante;

  void validate() const {
    if (cost.side() != Side::cost) throw ValidationError("market model: producer side needs a cost function");
    if (value.side() != Side::value) throw ValidationError("market model: consumer side needs a value function");
    perturbation.validate();
    predictor.validate();
    if (pricing == Pricing::exante && predictor.kind == Predictor::Kind::per_consumer) {
      throw ValidationError("market model: per-consumer price predictors need ex-post pricing");
    }
  }
};

struct Trajectory {
  std::vector<double> prices;
  std::vector<double> demands;
  std::vector<double> supplies;
  bool diverged = false;
  std::optional<std::size_t> diverged_step;
  std::string divergence_reason;
  std::uint64_t seed_used = 0;

  std::size_t size() const { return prices.size(); }

  void mark_diverged(std::size_t t, std::string why) {
    diverged = true;
    diverged_step = t;
    divergence_reason = std::move(why);
  }
};

// Consumer demand realised at price lambda and time t, with the closed-loop
// scaling of the disturbance: (1 + delta/2) d, u0 + u/2 + d, or d.
inline double realized_demand(const MarketModel& m, double lambda, std::size_t t) {
  const double base = m.value.d1_inverse(lambda);
  if (m.perturbation.is_multiplicative()) return (1.0 + 0.5 * m.perturbation.sample(t)) * base;
  return perturbed_demand(m.value, lambda, m.perturbation, t);
}

namespace detail {

inline double clear_at(const SmoothFunction& cost, double demand) {
  if (!(demand > 0.0)) throw DegenerateDemandError("predicted demand " + numeric::fmt(demand) + " is not positive");
  if (!std::isfinite(demand)) throw DivergenceError("predicted demand is not finite");
  try {
    return cost.d1(demand);
  } catch (const RangeError& e) {
    throw DivergenceError(std::string("predicted demand outside supply range: ") + e.what());
  }
}

inline double demand_at(const MarketModel& m, double lambda, std::size_t t) {
  try {
    return realized_demand(m, lambda, t);
  } catch (const DivergenceError&) {
    throw;
  } catch (const RangeError& e) {
    throw DivergenceError(std::string("price outside demand range: ") + e.what());
  }
}

// Ex-post demand: each of N consumers holds a 1/N share of the representative
// demand and responds to its own predicted price.
inline double expost_demand(const MarketModel& m, std::span<const double> history, std::size_t t) {
  std::vector<Predictor> members;
  if (m.predictor.kind == Predictor::Kind::per_consumer) {
    members = m.predictor.members;
  } else {
    members.push_back(m.predictor);
  }
  const double share = 1.0 / static_cast<double>(members.size());
  double d = 0.0;
  for (const auto& p : members) {
    const double predicted = p.combine(history);
    if (!(predicted > 0.0)) {
      throw DegenerateDemandError("predicted price " + numeric::fmt(predicted) + " is not positive");
    }
    try {
      d += share * m.value.d1_inverse(predicted);
    } catch (const RangeError& e) {
      throw DivergenceError(std::string("predicted price outside demand range: ") + e.what());
    }
  }
  if (m.perturbation.is_multiplicative()) return (1.0 + 0.5 * m.perturbation.sample(t)) * d;
  if (m.perturbation.is_additive()) return m.perturbation.u0() + 0.5 * m.perturbation.sample(t) + d;
  return d;
}

}  // namespace detail

// Next clearing price given the price history (back() = lambda(t)).
inline double step_price(const MarketModel& m, std::span<const double> history, std::size_t t) {
  const std::size_t order = m.predictor.order();
  if (history.size() < order) throw ValidationError("step_price: history shorter than predictor order");
  for (double p : history.subspan(history.size() - order)) {
    if (!(p > 0.0) || !std::isfinite(p)) throw DivergenceError("step_price: price history holds " + numeric::fmt(p));
  }
  if (m.pricing == Pricing::expost) return detail::clear_at(m.cost, detail::expost_demand(m, history, t));
  const auto w = m.predictor.weights();
  double predicted = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k) {
    const std::size_t tk = t >= k ? t - k : 0;
    predicted += w[k] * detail::demand_at(m, history[history.size() - 1 - k], tk);
  }
  return detail::clear_at(m.cost, predicted);
}

// Demand-side map d -> vdot^{-1}(cdot(d)).
inline double step_demand(const MarketModel& m, double d) { return m.value.d1_inverse(m.cost.d1(d)); }

// Iterates the price map for `steps` steps from an initial history (oldest
// first). The result holds the initial history followed by the iterates.
inline Trajectory iterate_prices(const MarketModel& m, std::vector<double> init, std::size_t steps,
                                 double cap = 1e12) {
  m.validate();
  if (init.empty()) throw ValidationError("iterate_prices: empty initial history");
  while (init.size() < m.predictor.order()) init.insert(init.begin(), init.front());
  Trajectory tr;
  tr.prices = init;
  auto record = [&](double lam, std::size_t t) {
    try {
      tr.demands.push_back(m.pricing == Pricing::exante ? realized_demand(m, lam, t) : std::nan(""));
    } catch (const NumericalError&) {
      tr.demands.push_back(std::nan(""));
    }
    try {
      tr.supplies.push_back(m.cost.d1_inverse(lam));
    } catch (const NumericalError&) {
      tr.supplies.push_back(std::nan(""));
    }
  };
  for (std::size_t i = 0; i < init.size(); ++i) record(init[i], i);
  for (std::size_t s = 0; s < steps; ++s) {
    const std::size_t t = tr.prices.size() - 1;
    double next;
    try {
      next = step_price(m, tr.prices, t);
    } catch (const DivergenceError& e) {
      tr.mark_diverged(t + 1, e.what());
      break;
    } catch (const DegenerateDemandError& e) {
      tr.mark_diverged(t + 1, e.what());
      break;
    }
    if (!std::isfinite(next) || next > cap) {
      tr.mark_diverged(t + 1, "price " + numeric::fmt(next) + " exceeds divergence cap");
      break;
    }
    tr.prices.push_back(next);
    record(next, t + 1);
  }
  if (m.pricing == Pricing::expost) {
    // Ex-post demand equals the dispatched supply at the declared price.
    tr.demands = tr.supplies;
  }
  return tr;
}

inline Trajectory iterate_prices(const MarketModel& m, double lambda0, std::size_t steps, double cap = 1e12) {
  return iterate_prices(m, std::vector<double>{lambda0}, steps, cap);
}

// Iterates the demand map from d0; prices hold cdot(d(t)).
inline Trajectory iterate_demand(const MarketModel& m, double d0, std::size_t steps, double cap = 1e12) {
  Trajectory tr;
  double d = d0;
  for (std::size_t t = 0;; ++t) {
    double lam;
    try {
      lam = m.cost.d1(d);
    } catch (const RangeError& e) {
      tr.mark_diverged(t, e.what());
      break;
    }
    tr.demands.push_back(d);
    tr.supplies.push_back(d);
    tr.prices.push_back(lam);
    if (t == steps) break;
    try {
      d = m.value.d1_inverse(lam);
    } catch (const RangeError& e) {
      tr.mark_diverged(t + 1, e.what());
      break;
    }
    if (!std::isfinite(d) || d > cap) {
      tr.mark_diverged(t + 1, "demand exceeds divergence cap");
      break;
    }
  }
  return tr;
}

// Retail-demand simulation: an inelastic daily profile mixed with a
// price-responsive component, cleared at marginal cost each interval.
struct Scenario {
  MarketModel model;
  std::size_t horizon = 288;
  std::string dt_label = "5 min";
  double mu1 = 1.0;
  double mu2 = 0.0;
  double a0 = 4.0;
  double a1 = 1.0;
  double a2 = 1.0;
  double sigma1 = 0.1;
  double sigma2 = 0.01;
  std::uint64_t seed = 0;
  double divergence_cap = 1e12;
  std::optional<double> initial_price;  // default: marginal cost at a0
  bool random_initial_price = false;    // U[0.5, 2] times the default

  void validate() const {
    if (horizon < 1) throw ValidationError("scenario.horizon must be >= 1");
    if (!(sigma1 >= 0.0) || !(sigma2 >= 0.0)) throw ValidationError("scenario.sigma1/sigma2 must be >= 0");
    if (!(divergence_cap > 0.0)) throw ValidationError("scenario.divergence_cap must be > 0");
    if (!(mu1 >= 0.0) || !(mu2 >= 0.0) || !std::isfinite(mu1) || !std::isfinite(mu2)) {
      throw ValidationError("scenario.mu1/mu2 must be finite and >= 0");
    }
    if (initial_price && !(*initial_price > 0.0)) throw ValidationError("scenario.initial_price must be > 0");
    if (model.cost.side() != Side::cost || model.value.side() != Side::value) {
      throw ValidationError("scenario.model: cost and value functions required");
    }
  }

  double base_price() const { return model.cost.d1(a0); }

  // Noise-free inelastic profile at step t.
  double profile(std::size_t t) const {
    const double tp = 2.0 * std::numbers::pi * static_cast<double>(t) / static_cast<double>(horizon);
    return a0 + a1 * std::sin(tp) + a2 * std::sin(2.0 * tp);
  }

  Scenario open_loop() const {
    Scenario s = *this;
    s.mu1 = 1.0;
    s.mu2 = 0.0;
    return s;
  }
};

// Runs one member of an ensemble. The random stream depends on (seed,
// run_index) only, so the closed loop and its open-loop twin see identical
// noise and initial price.
inline Trajectory simulate(const Scenario& sc, std::uint64_t run_index = 0) {
  sc.validate();
  RandomStream rng(sc.seed, run_index);
  Trajectory tr;
  tr.seed_used = sc.seed;
  double lam = sc.initial_price ? *sc.initial_price : sc.base_price();
  const double u0 = rng.uniform();
  if (sc.random_initial_price && !sc.initial_price) lam *= 0.5 + 1.5 * u0;
  for (std::size_t t = 0; t < sc.horizon; ++t) {
    const double d1 = sc.profile(t) + rng.normal(0.0, 1.0) * sc.sigma1;
    const double d2 = rng.normal(0.0, 1.0) * sc.sigma2;
    double elastic = 0.0;
    if (sc.mu2 != 0.0) {
      try {
        elastic = sc.model.value.d1_inverse(lam);
      } catch (const RangeError& e) {
        tr.mark_diverged(t, e.what());
        break;
      }
    }
    const double demand = sc.mu1 * d1 + sc.mu2 * (1.0 + d2) * elastic;
    if (!std::isfinite(demand) || demand <= 0.0 || demand > sc.divergence_cap) {
      tr.mark_diverged(t, "demand " + numeric::fmt(demand) + " left (0, cap]");
      break;
    }
    double supply;
    try {
      supply = sc.model.cost.d1_inverse(lam);
    } catch (const RangeError&) {
      supply = std::nan("");
    }
    tr.prices.push_back(lam);
    tr.demands.push_back(demand);
    tr.supplies.push_back(supply);
    if (t + 1 == sc.horizon) break;
    double next;
    try {
      next = sc.model.cost.d1(demand);
    } catch (const RangeError& e) {
      tr.mark_diverged(t + 1, e.what());
      break;
    }
    if (!std::isfinite(next) || next > sc.divergence_cap) {
      tr.mark_diverged(t + 1, "price " + numeric::fmt(next) + " exceeds divergence cap");
      break;
    }
    lam = next;
  }
  return tr;
}

namespace detail {

inline Scenario noise_free(const Scenario& sc) {
  Scenario s = sc;
  s.sigma1 = 0.0;
  s.sigma2 = 0.0;
  s.random_initial_price = false;
  return s;
}

inline double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace detail

// Static estimate of mu2: matches total demand when prices sit at the
// open-loop marginal cost of the inelastic profile.
inline double static_mu2_guess(const Scenario& sc, double mu1) {
  const Scenario s = detail::noise_free(sc);
  double sd = 0.0, se = 0.0;
  for (std::size_t t = 0; t < s.horizon; ++t) {
    const double d = s.profile(t);
    sd += d;
    se += s.model.value.d1_inverse(s.model.cost.d1(d));
  }
  return (1.0 - mu1) * sd / se;
}

// Chooses mu2 so that the noise-free closed-loop average demand matches the
// noise-free open-loop average (secant iteration, residual within 1%).
inline double calibrate_mu(const Scenario& sc, double mu1) {
  if (!(mu1 >= 0.0 && mu1 <= 1.0)) throw ValidationError("calibrate_mu: mu1 must lie in [0, 1]");
  if (mu1 == 1.0) return 0.0;
  const Scenario base = detail::noise_free(sc);
  const double target = detail::mean(simulate(base.open_loop()).demands);
  auto resid = [&](double m) {
    Scenario s = base;
    s.mu1 = mu1;
    s.mu2 = m;
    const Trajectory tr = simulate(s);
    if (tr.diverged) {
      throw CalibrationError("calibrate_mu: noise-free run diverges at mu2 = " + numeric::fmt(m) + " (mu1 = " +
                             numeric::fmt(mu1) + ")");
    }
    return detail::mean(tr.demands) / target - 1.0;
  };
  constexpr double kMax = 1e6;
  double m0;
  try {
    m0 = std::clamp(static_mu2_guess(sc, mu1), 0.0, kMax);
  } catch (const NumericalError& e) {
    throw CalibrationError(std::string("calibrate_mu: static guess failed: ") + e.what());
  }
  double m1 = std::min(kMax, m0 * 1.01 + 1e-12);
  double r0 = resid(m0), r1 = resid(m1);
  for (int it = 0; it < 100; ++it) {
    if (std::abs(r1) < 1e-8) break;
    if (r1 == r0) break;
    double m2 = m1 - r1 * (m1 - m0) / (r1 - r0);
    m2 = std::clamp(m2, 0.0, kMax);
    if (m2 == m1) break;
    m0 = m1;
    r0 = r1;
    m1 = m2;
    r1 = resid(m1);
  }
  if (!(std::abs(r1) <= 0.01)) {
    throw CalibrationError("calibrate_mu: no mu2 in [0, 1e6] matches the open-loop average demand (mu1 = " +
                           numeric::fmt(mu1) + ", residual " + numeric::fmt(r1) + ")");
  }
  return m1;
}

}  // namespace rtpvol
