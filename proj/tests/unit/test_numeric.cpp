#include <gtest/gtest.h>

#include <vector>

#include "oliva/numeric.hpp"

using namespace oliva;

TEST(Numeric, NormalQuantileInvertsCdf) {
  for (double p : {1e-10, 0.025, 0.5, 0.975, 1 - 1e-10})
    EXPECT_NEAR(normal_cdf(normal_quantile(p)), p, 1e-14);
  EXPECT_NEAR(normal_quantile(0.975), 1.959963984540054, 1e-14);
}

TEST(Numeric, TwoSidedPValue) {
  EXPECT_NEAR(two_sided_p(1.959963984540054), 0.05, 1e-14);
  EXPECT_DOUBLE_EQ(two_sided_p(-2.0), two_sided_p(2.0));
  EXPECT_DOUBLE_EQ(two_sided_p(0.0), 1.0);
}

TEST(Numeric, ChiSquareSurvival) {
  EXPECT_NEAR(chi2_sf(3.841458820694124, 1), 0.05, 1e-13);
  EXPECT_NEAR(chi2_sf(5.991464547107979, 2), 0.05, 1e-13);
  EXPECT_NEAR(chi2_sf(2.0, 2), std::exp(-1.0), 1e-15);
}

TEST(Numeric, CompensatedSumRecoversSmallTerms) {
  CompensatedSum s;
  s.add(1e16);
  for (int i = 0; i < 1000; ++i) s.add(1.0);
  s.add(-1e16);
  EXPECT_DOUBLE_EQ(s.value(), 1000.0);
}

TEST(Numeric, SampleQuantileType7) {
  const std::vector<double> v{4, 1, 3, 2};
  EXPECT_DOUBLE_EQ(sample_quantile(v, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(sample_quantile(v, 1.0), 4.0);
  EXPECT_DOUBLE_EQ(sample_quantile(v, 0.5), 2.5);
  EXPECT_NEAR(sample_quantile(v, 1.0 / 3.0), 2.0, 1e-15);
  EXPECT_NEAR(sample_quantile(v, 0.9), 3.7, 1e-15);
}

TEST(Numeric, ConditionNumber) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(3, 3);
  a(2, 2) = 1e-3;
  EXPECT_NEAR(condition_number(a), 1e3, 1e-9);
  EXPECT_NEAR(smallest_singular_value(a), 1e-3, 1e-15);
}
