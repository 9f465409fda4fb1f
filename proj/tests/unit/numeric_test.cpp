#include <gtest/gtest.h>

#include <cmath>

#include "rtpvol/numeric.hpp"
#include "rtpvol/random.hpp"
#include "rtpvol/parallel.hpp"

namespace nm = rtpvol::numeric;

TEST(Bisect, FindsCubeRootOfHalf) {
  nm::BisectOptions opt;
  opt.residual_tol = 0.0;
  const double x = nm::bisect([](double l) { return 1.0 / (4.0 * l * l) - l / 2.0; }, 1e-6, 1e6, opt);
  EXPECT_NEAR(x, 0.7937005259840998, 1e-15);
}

TEST(Bisect, NoSignChangeIsRangeError) {
  EXPECT_THROW(nm::bisect([](double x) { return x; }, 1.0, 2.0), rtpvol::RangeError);
}

TEST(Bisect, ArithmeticMidpointOnSignedInterval) {
  nm::BisectOptions opt;
  opt.geometric = false;
  const double x = nm::bisect([](double x) { return x - 0.25; }, -1.0, 1.0, opt);
  EXPECT_NEAR(x, 0.25, 1e-12);
}

TEST(Bracket, ExpandsGeometrically) {
  auto r = [](double x) { return x - 1000.0; };
  auto [a, b] = nm::bracket_geometric(r, 1.0, 1e-9, 1e12);
  EXPECT_LE(a, 1000.0);
  EXPECT_GE(b, 1000.0);
  EXPECT_THROW(nm::bracket_geometric(r, 1.0, 1e-9, 10.0), rtpvol::RangeError);
}

TEST(LogGrid, EndpointsExactAndMonotone) {
  const auto g = nm::log_grid(1e-6, 1e6, 4096);
  ASSERT_EQ(g.size(), 4096u);
  EXPECT_EQ(g.front(), 1e-6);
  EXPECT_EQ(g.back(), 1e6);
  for (std::size_t i = 1; i < g.size(); ++i) EXPECT_LT(g[i - 1], g[i]);
  EXPECT_THROW(nm::log_grid(0.0, 1.0, 10), rtpvol::DomainError);
}

TEST(GoldenMax, LocatesInteriorPeak) {
  auto f = [](double x) { return -std::pow(std::log(x) - std::log(3.0), 2); };
  const auto m = nm::golden_max_log(f, 0.1, 100.0);
  EXPECT_NEAR(m.x, 3.0, 1e-6);
  EXPECT_NEAR(m.value, 0.0, 1e-12);
}

TEST(MonotoneCubic, ReproducesLinearDataAndStaysMonotone) {
  nm::MonotoneCubic lin({0.0, 1.0, 2.0, 3.0}, {1.0, 3.0, 5.0, 7.0});
  EXPECT_NEAR(lin(1.5), 4.0, 1e-12);
  EXPECT_NEAR(lin.derivative(2.2), 2.0, 1e-12);
  EXPECT_NEAR(lin.integral(3.0), 12.0, 1e-12);

  nm::MonotoneCubic step({0.0, 1.0, 2.0, 3.0, 4.0}, {0.0, 0.1, 5.0, 5.1, 5.2});
  double prev = step(0.0);
  for (int i = 1; i <= 400; ++i) {
    const double y = step(i * 0.01);
    EXPECT_GE(y, prev - 1e-14);
    prev = y;
  }
  EXPECT_THROW(step(4.5), rtpvol::RangeError);
}

TEST(Random, StreamsAreReproducibleAndDistinct) {
  rtpvol::RandomStream a(7, 0), b(7, 0), c(7, 1);
  for (int i = 0; i < 100; ++i) {
    const double x = a.normal();
    EXPECT_EQ(x, b.normal());
    EXPECT_NE(x, c.normal());
  }
  rtpvol::RandomStream u(1, 0);
  double sum = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double x = u.uniform();
    ASSERT_GE(x, 0.0);
    ASSERT_LT(x, 1.0);
    sum += x;
  }
  EXPECT_NEAR(sum / 100000.0, 0.5, 0.01);
}

TEST(Parallel, RethrowsLowestFailingIndex) {
  std::vector<int> hit(100, 0);
  rtpvol::parallel_for(100, 4, [&](std::size_t i) { hit[i] = 1; });
  for (int h : hit) EXPECT_EQ(h, 1);
  try {
    rtpvol::parallel_for(100, 4, [](std::size_t i) {
      if (i == 17 || i == 60) throw std::runtime_error(std::to_string(i));
    });
    FAIL();
  } catch (const std::runtime_error& e) {
    EXPECT_STREQ(e.what(), "17");
  }
}
