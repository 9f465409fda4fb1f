#pragma once

// Builders shared by the test programs.

#include "rtpvol/rtpvol.hpp"

namespace rtpvol::test {

inline SmoothFunction power_cost(double exponent, double coefficient = 1.0, Domain dom = {}) {
  return build_function(PowerSpec{coefficient, exponent}, Side::cost, dom);
}

inline SmoothFunction root_value(double alpha, double shift = 0.0, Domain dom = {}) {
  return build_function(RootSpec{alpha, shift}, Side::value, dom);
}

inline MarketModel market(SmoothFunction cost, SmoothFunction value,
                          ConsumerPerturbation pert = ConsumerPerturbation::none(),
                          Predictor pred = Predictor::persistence()) {
  MarketModel m;
  m.cost = std::move(cost);
  m.value = std::move(value);
  m.perturbation = std::move(pert);
  m.predictor = std::move(pred);
  return m;
}

// Example 1 market: c(x) = x^beta, v(x) = x^(1/alpha) (shifted by u).
inline MarketModel example1(double alpha, double beta, double u = 0.0, Domain dom = {}) {
  return market(power_cost(beta, 1.0, dom), root_value(alpha, u, dom));
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace rtpvol::test
