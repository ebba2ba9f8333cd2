#include <gtest/gtest.h>

#include <vector>

#include "fragmig/correlation.hpp"

using namespace fragmig;

TEST(Correlation, IdentityIsOne) {
  std::vector<double> x = {1, 2, 3, 4, 5};
  for (auto m : kCorrelationMethods) EXPECT_NEAR(correlate(x, x, m), 1.0, 1e-12) << to_string(m);
}

TEST(Correlation, NegationIsMinusOne) {
  std::vector<double> x = {1, 2, 3, 4, 5}, y = {-1, -2, -3, -4, -5};
  EXPECT_NEAR(correlate(x, y, CorrelationMethod::pearson), -1.0, 1e-12);
  EXPECT_NEAR(correlate(x, y, CorrelationMethod::spearman), -1.0, 1e-12);
  EXPECT_NEAR(correlate(x, y, CorrelationMethod::kendall), -1.0, 1e-12);
  EXPECT_NEAR(correlate(x, y, CorrelationMethod::distance), 1.0, 1e-12);
}

TEST(Correlation, CubeRanksPerfectlyButNotLinearly) {
  std::vector<double> x = {-2, -1, 0, 1, 2}, y = {-8, -1, 0, 1, 8};
  EXPECT_NEAR(correlate(x, y, CorrelationMethod::spearman), 1.0, 1e-12);
  EXPECT_NEAR(correlate(x, y, CorrelationMethod::kendall), 1.0, 1e-12);
  const double p = correlate(x, y, CorrelationMethod::pearson);
  EXPECT_LT(p, 1.0);
  // sum(x*y) = 34, sum(x^2) = 10, sum(y^2) = 130
  EXPECT_NEAR(p, 34.0 / std::sqrt(10.0 * 130.0), 1e-12);
}

TEST(Correlation, TiesUseAverageRanks) {
  std::vector<double> x = {1, 2, 2, 3};
  auto r = detail::ranks(x);
  EXPECT_EQ(r, (std::vector<double>{1, 2.5, 2.5, 4}));
}

TEST(Correlation, KendallTauBWithTies) {
  // x = (1,2,2,3), y = (1,3,2,4): concordant 5, discordant 0, ties in x only 1
  std::vector<double> x = {1, 2, 2, 3}, y = {1, 3, 2, 4};
  EXPECT_NEAR(correlate(x, y, CorrelationMethod::kendall), 5.0 / std::sqrt(5.0 * 6.0), 1e-12);
}

TEST(Correlation, DistanceCorrelationSeesNonlinearDependence) {
  // y symmetric in x: Pearson 0 but distance correlation positive
  std::vector<double> x = {-2, -1, 0, 1, 2}, y = {4, 1, 0, 1, 4};
  EXPECT_NEAR(correlate(x, y, CorrelationMethod::pearson), 0.0, 1e-12);
  EXPECT_GT(correlate(x, y, CorrelationMethod::distance), 0.1);
}

TEST(Correlation, ZeroVarianceUndefined) {
  std::vector<double> x = {1, 2, 3}, y = {5, 5, 5};
  for (auto m : kCorrelationMethods) EXPECT_THROW(correlate(x, y, m), UndefinedCorrelation) << to_string(m);
}

TEST(Correlation, LengthChecks) {
  std::vector<double> a = {1, 2}, b = {1, 2};
  EXPECT_THROW(correlate(a, b, CorrelationMethod::pearson), ConfigError);
  std::vector<double> c = {1, 2, 3}, d = {1, 2, 3, 4};
  EXPECT_THROW(correlate(c, d, CorrelationMethod::pearson), ConfigError);
}
