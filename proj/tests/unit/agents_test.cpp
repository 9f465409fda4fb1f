#include <gtest/gtest.h>

#include <random>

#include "support.hpp"

using namespace rtpvol;
using test::power_cost;
using test::root_value;

TEST(BuildFunction, PowerCostMarginals) {
  const auto c = power_cost(2.0);
  EXPECT_DOUBLE_EQ(c.d1(3.0), 6.0);
  EXPECT_DOUBLE_EQ(c.d1_inverse(4.0), 2.0);
  EXPECT_DOUBLE_EQ(marginal_inverse(c, 4.0), 2.0);
}

TEST(BuildFunction, RootValueMarginals) {
  const auto v = root_value(2.0);
  EXPECT_NEAR(v.d1(4.0), 0.25, 1e-15);
  for (double lam : {0.1, 0.5, 2.0}) EXPECT_NEAR(v.d1_inverse(lam), 1.0 / (4.0 * lam * lam), 1e-12 / (lam * lam));
  EXPECT_NEAR(marginal_inverse(v, 0.5), 1.0, 1e-12);
}

TEST(BuildFunction, ShiftedRootValue) {
  const auto v = root_value(2.0, 0.5);
  EXPECT_NEAR(marginal_inverse(v, 0.5), 1.5, 1e-12);
  EXPECT_NEAR(v.d1(1.5), 0.5, 1e-12);
}

TEST(BuildFunction, RejectsBadShapesAndParameters) {
  EXPECT_THROW(build_function(RootSpec{2.0, 0.0}, Side::cost), ValidationError);
  EXPECT_THROW(build_function(PowerSpec{1.0, 2.0}, Side::value), ValidationError);
  EXPECT_THROW(build_function(PowerSpec{1.0, 1.0}, Side::cost), ValidationError);
  EXPECT_THROW(build_function(PowerSpec{0.0, 2.0}, Side::cost), ValidationError);
  EXPECT_THROW(build_function(RootSpec{1.0, 0.0}, Side::value), ValidationError);
  EXPECT_THROW(build_function(LogSpec{-1.0}, Side::value), ValidationError);
}

TEST(BuildFunction, OutOfRangePriceIsRangeError) {
  const auto v = root_value(2.0);
  EXPECT_THROW(v.d1_inverse(-1.0), RangeError);
  EXPECT_THROW(v.d1_inverse(1e30), RangeError);
}

TEST(BuildFunction, TabulatedMatchesClosedForm) {
  std::vector<double> x, m;
  for (int i = 0; i <= 200; ++i) {
    x.push_back(0.01 * std::pow(10.0, i * 0.02));
    m.push_back(2.0 * x.back());
  }
  const auto tab = build_function(TabulatedSpec{x, m, 0.0}, Side::cost, Domain{x.front(), x.back()});
  for (double lam : {0.05, 1.0, 10.0, 100.0}) EXPECT_NEAR(tab.d1_inverse(lam), lam / 2.0, 1e-9 * lam);
  EXPECT_NEAR(tab.d1_inverse_slope(1.0), 0.5, 1e-6);
}

TEST(Aggregate, SingleConsumerIsIdentity) {
  const auto v = root_value(2.0);
  const auto a = aggregate_consumers(v, 1);
  for (double lam : {0.2, 1.0, 3.0}) EXPECT_EQ(a.d1_inverse(lam), v.d1_inverse(lam));
  EXPECT_EQ(a(2.0), v(2.0));
}

TEST(Aggregate, FourRootConsumers) {
  const auto v = root_value(2.0);
  const auto a = aggregate_consumers(std::vector<SmoothFunction>(4, v));
  for (double lam : {0.5, 1.0, 2.0}) {
    EXPECT_NEAR(a.d1_inverse(lam), 1.0 / (lam * lam), 1e-12);
    EXPECT_NEAR(a.d1_inverse(lam), 4.0 * v.d1_inverse(lam), 1e-12);
  }
  EXPECT_NEAR(a.d1_inverse(1.0), 1.0, 1e-12);
  EXPECT_NEAR(a(4.0), 2.0 * std::sqrt(4.0), 1e-12);  // representative v(x) = 2 sqrt(x)
  EXPECT_THROW(aggregate_consumers(std::vector<SmoothFunction>{}), ValidationError);
}

TEST(Aggregate, IdentityHoldsOnGrid) {
  const auto v = build_function(LogSpec{1.5}, Side::value);
  for (std::size_t n : {2u, 7u, 30u}) {
    const auto a = aggregate_consumers(v, n);
    for (double lam : numeric::log_grid(1e-3, 1e3, 61)) {
      const double sum = static_cast<double>(n) * v.d1_inverse(lam);
      EXPECT_LE(std::abs(a.d1_inverse(lam) - sum), 1e-9 * sum);
    }
  }
}

TEST(Perturbation, Examples) {
  const auto v = root_value(2.0);
  EXPECT_EQ(perturbed_demand(v, 0.5, ConsumerPerturbation::multiplicative({0.0}, 0.1), 0), v.d1_inverse(0.5));
  EXPECT_NEAR(perturbed_demand(v, 0.5, ConsumerPerturbation::multiplicative({0.2}, 0.2), 0), 1.2, 1e-12);
  EXPECT_NEAR(perturbed_demand(v, 0.5, ConsumerPerturbation::additive(1.0, {-1.0}, 1.0), 0), 0.5 + 1.0, 1e-12);
  EXPECT_EQ(perturbed_demand(v, 0.5, ConsumerPerturbation::none(), 3), v.d1_inverse(0.5));
}

TEST(Perturbation, BoundsAreEnforced) {
  const auto v = root_value(2.0);
  EXPECT_THROW(perturbed_demand(v, 0.5, ConsumerPerturbation::multiplicative({0.3}, 0.2), 0), DisturbanceBoundError);
  EXPECT_THROW(ConsumerPerturbation::multiplicative({}, 1.5).validate(), ValidationError);
  EXPECT_THROW(ConsumerPerturbation::additive(0.5, {}, 0.1).validate(), ValidationError);
  EXPECT_THROW(ConsumerPerturbation::additive(1.0, {}, 1.5).validate(), ValidationError);
}

TEST(Perturbation, AdditiveDemandNeverBelowHalfU0) {
  const auto v = root_value(2.0);
  std::vector<double> u;
  for (int t = 0; t < 50; ++t) u.push_back(1.5 * std::sin(0.7 * t));
  const auto p = ConsumerPerturbation::additive(2.0, u, 1.5);
  for (std::size_t t = 0; t < 100; ++t) {
    for (double lam : {0.01, 1.0, 100.0}) EXPECT_GE(perturbed_demand(v, lam, p, t), 2.0 - 0.75);
  }
}

// Round trip of the marginal and its inverse across families.
TEST(Properties, InverseRoundTrip) {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    SmoothFunction f;
    switch (i % 4) {
      case 0: f = power_cost(1.05 + 3.0 * unit(gen), 0.1 + 5.0 * unit(gen)); break;
      case 1: f = root_value(1.05 + 5.0 * unit(gen), unit(gen)); break;
      case 2: f = build_function(LogSpec{0.1 + 5.0 * unit(gen)}, Side::value); break;
      default: f = root_value(1.5 + 2.0 * unit(gen)); break;
    }
    const double x = std::max(f.domain_lo(), 1e-3) * std::pow(10.0, 6.0 * unit(gen));
    const double back = f.d1_inverse(f.d1(x));
    EXPECT_LE(test::rel_err(back, x), 1e-9) << family_name(f.spec()) << " x=" << x;
  }
}

TEST(Properties, DemandDecreasingSupplyIncreasing) {
  const auto v = root_value(3.0, 0.2);
  const auto c = power_cost(1.7, 2.0);
  const auto g = numeric::log_grid(1e-2, 1e2, 300);
  for (std::size_t i = 1; i < g.size(); ++i) {
    EXPECT_LT(v.d1_inverse(g[i]), v.d1_inverse(g[i - 1]));
    EXPECT_GT(c.d1_inverse(g[i]), c.d1_inverse(g[i - 1]));
  }
}
