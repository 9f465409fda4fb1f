#include <gtest/gtest.h>

#include <random>

#include "support.hpp"

using namespace rtpvol;
using test::example1;

TEST(CheckStability, StableExample1CertifiesAtLOne) {
  const auto r = check_stability(example1(2.0, 1.4));
  EXPECT_TRUE(r.certified_stable);
  ASSERT_TRUE(r.certifying_l.has_value());
  EXPECT_EQ(*r.certifying_l, 1.0);
  const auto& e = r.at(1.0);
  EXPECT_NEAR(e.theta.value, 0.8, 1e-8);
  EXPECT_TRUE(e.cond_contraction && e.cond_measure_zero && e.cond_coercivity);
  EXPECT_EQ(r.verdict(), "certified-stable");
}

TEST(CheckStability, UnstableExample1IsNotCertified) {
  const auto r = check_stability(example1(2.0, 2.0), {0.0, 1.0, 2.0});
  EXPECT_FALSE(r.certified_stable);
  EXPECT_NEAR(r.at(1.0).theta.value, 2.0, 1e-8);
  EXPECT_TRUE(r.at(0.0).theta.unbounded);
  EXPECT_EQ(r.verdict(), "not-certified");
}

TEST(CheckStability, ShiftedDemandCertifiesAtOnePointFive) {
  const auto r = check_stability(example1(2.0, 2.0, 0.5), {1.0, 1.5, 2.0});
  EXPECT_TRUE(r.certified_stable);
  EXPECT_GE(r.at(1.0).theta.value, 2.0 - 1e-6);
  EXPECT_NEAR(r.at(1.5).theta.value, 0.595, 0.01 * 0.595);
  EXPECT_TRUE(r.at(1.5).certified());
  // best l by supremum is 2 (0.459), the first certified one is 1.5
  EXPECT_EQ(r.best_l, 2.0);
  EXPECT_EQ(*r.certifying_l, 1.5);
}

TEST(CheckStability, EmptyListRejected) {
  EXPECT_THROW(check_stability(example1(2.0, 1.4), {}), ValidationError);
}

TEST(Lyapunov, AtFixedPointVanishes) {
  const auto m = example1(2.0, 1.4);
  const double fp = welfare_clear({m.cost}, {m.value}).price;
  const auto tr = lyapunov_trace(m, iterate_prices(m, fp, 20), Scaling::log());
  for (double v : tr.values) EXPECT_LE(v, 1e-12);
  EXPECT_TRUE(tr.monotone);
}

TEST(Lyapunov, StableExample1Decreases) {
  const auto m = example1(2.0, 1.4);
  const auto tr = lyapunov_trace(m, iterate_prices(m, 1.0, 200), Scaling::log());
  EXPECT_TRUE(tr.monotone);
  EXPECT_GT(tr.values.size(), 100u);
}

TEST(Lyapunov, UnstableExample1Grows) {
  const auto m = example1(2.0, 2.0);
  const auto tr = lyapunov_trace(m, iterate_prices(m, 1.0, 100), Scaling::log());
  EXPECT_FALSE(tr.monotone);
}

TEST(Example1, ClosedForm) {
  auto a = example1_closed_form(2.0, 1.4);
  EXPECT_NEAR(a.eta_star, 0.8, 1e-15);
  EXPECT_TRUE(a.stable);
  a = example1_closed_form(2.0, 1.5);
  EXPECT_NEAR(a.eta_star, 1.0, 1e-15);
  EXPECT_FALSE(a.stable);
  a = example1_closed_form(2.0, 2.0);
  EXPECT_NEAR(a.eta_star, 2.0, 1e-15);
  EXPECT_FALSE(a.stable);
  EXPECT_THROW(example1_closed_form(1.0, 2.0), ValidationError);
}

TEST(Example1, AgreesWithNumericRiskAversion) {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(1.05, 3.0);
  for (int i = 0; i < 25; ++i) {
    const double alpha = u(gen), beta = u(gen);
    const auto m = example1(alpha, beta);
    const auto s = max_relative_ratio(m.cost, m.value, RatioKind::risk_aversion, 1.0, 1e-3, 1e3);
    EXPECT_NEAR(s.value, example1_closed_form(alpha, beta).eta_star, 1e-8);
  }
}

// Certified markets converge from several starts. Not-certified ones are
// not asserted to diverge. A contraction factor theta needs about
// log(1e-9) / log(theta) steps, which exceeds 5000 once theta > 0.996; such
// near-marginal samples get a budget scaled by 1 / (1 - theta).
TEST(Soundness, CertifiedImpliesConvergence) {
  std::mt19937_64 gen(99);
  std::uniform_real_distribution<double> u(1.0, 3.0);
  int certified = 0;
  for (int i = 0; i < 100; ++i) {
    double alpha = u(gen), beta = u(gen);
    alpha = std::max(alpha, 1.05);
    beta = std::max(beta, 1.05);
    const auto m = example1(alpha, beta, 0.0, Domain{1e-30, 1e30});
    const auto r = check_stability(m, {0.5, 1.0, 1.5, 2.0});
    if (!r.certified_stable) continue;
    ++certified;
    const double theta = r.at(*r.certifying_l).theta.value;
    const std::size_t budget = theta <= 0.99 ? 5000 : static_cast<std::size_t>(50.0 / (1.0 - theta));
    for (double l0 : {0.1, 1.0, 10.0}) {
      const auto tr = iterate_prices(m, l0, budget, 1e30);
      ASSERT_FALSE(tr.diverged) << "alpha=" << alpha << " beta=" << beta << " l0=" << l0;
      bool converged = false;
      for (std::size_t t = 1; t < tr.prices.size(); ++t) {
        if (std::abs(tr.prices[t] - tr.prices[t - 1]) < 1e-9) {
          converged = true;
          break;
        }
      }
      EXPECT_TRUE(converged) << "alpha=" << alpha << " beta=" << beta << " l0=" << l0 << " theta=" << theta;
    }
  }
  EXPECT_GT(certified, 10);
}
