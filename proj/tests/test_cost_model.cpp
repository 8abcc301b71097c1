#include <gtest/gtest.h>

#include <cmath>

#include "cbsnr/cost_model.hpp"

using namespace cbsnr;

TEST(CostModel, SmallCrossoverWithUnitConstants) {
  // U = 2 log2 U meets at U = 2 and U = 4; beyond 4 the log side wins
  CostModel m{1e-9, 1.0, 1e-9, 1e-9, 1.0, 1.0, 1.0};
  const auto x = find_crossover(m, 1.0, 1e4);
  ASSERT_TRUE(x.u_star.has_value());
  EXPECT_NEAR(*x.u_star, 4.0, 1e-3);
  EXPECT_LT(*x.u_star, 10.0);
  EXPECT_GT(m.naive(16), m.event(16));
}

TEST(CostModel, NoPerUeCostNoCrossover) {
  CostModel m{5.0, 0.0, 1.0, 0.5, 1.0, 2.0, 8.0};
  EXPECT_FALSE(find_crossover(m, 2.0, 1e5).u_star.has_value());
}

TEST(CostModel, EnvelopeGridHasOneCrossoverEach) {
  for (double a : {0.5, 2.0, 4.0}) {
    for (double g : {4.0, 8.0, 16.0}) {
      CostModel m{4.0, 1.0, 4.0, 1.0, 1.0, a, g};
      const auto x = find_crossover(m, 2.0, 1e5);
      ASSERT_TRUE(x.u_star.has_value()) << a << "," << g;
      EXPECT_TRUE(x.unique()) << a << "," << g;
      EXPECT_NEAR(m.gap(*x.u_star), 0.0, 1e-6);
    }
  }
}

TEST(CostModel, CurvesEvaluateBothFormulas) {
  CostModel m{1, 2, 3, 4, 5, 0.5, 1.5};
  const std::vector<double> us{8, 16};
  const auto c = cost_curves(m, us);
  EXPECT_DOUBLE_EQ(c[0].naive, 17);
  EXPECT_DOUBLE_EQ(c[1].event, 3 + 4 * 1.5 + 5 * 2.0 * 4);
}

TEST(Fit, RecoversLine) {
  const std::vector<double> x{1, 2, 3, 4, 5};
  std::vector<double> y;
  for (double v : x) y.push_back(3 + 2 * v);
  const auto f = fit_affine(x, y);
  EXPECT_NEAR(f.intercept, 3, 1e-12);
  EXPECT_NEAR(f.slope, 2, 1e-12);
  EXPECT_NEAR(f.r2, 1, 1e-12);
  const std::vector<double> noisy{5.2, 6.8, 9.1, 11.0, 12.9};
  const auto g = fit_affine(x, noisy);
  EXPECT_GT(g.r2, 0.99);
  EXPECT_LT(g.r2, 1.0);
}
