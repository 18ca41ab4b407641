#include <gtest/gtest.h>

#include <random>

#include "helpers.hpp"
#include "oliva/exogeneity.hpp"
#include "oliva/simulate.hpp"

using namespace oliva;
using testing_util::gaussian;
using testing_util::toy_dataset;

TEST(Hausman, HandOlsAtTwelve) {
  const Dataset d = toy_dataset(12, 601);
  const MatrixXd h = gaussian(12, 1, 602);
  MatrixXd w(12, 2);
  w << d.controls, h;
  const HausmanResult r = augmented_regression_test(d, w, HausmanVariant::robust);

  // Textbook: V = X2 - W (W'W)^{-1} W'X2, S = [1 X2 V], b = (S'S)^{-1} S'Y,
  // s^2 = e'e / (n - 3), t = b_V / sqrt(s^2 [(S'S)^{-1}]_VV).
  const VectorXd v = d.endogenous - w * (w.transpose() * w).inverse() * w.transpose() * d.endogenous;
  MatrixXd s(12, 3);
  s << d.controls, d.endogenous, v;
  const MatrixXd sts = (s.transpose() * s).inverse();
  const VectorXd b = sts * s.transpose() * d.y;
  const VectorXd e = d.y - s * b;
  const double s2 = e.squaredNorm() / 9.0;
  const double t = b(2) / std::sqrt(s2 * sts(2, 2));
  EXPECT_NEAR(r.t_stat, t, 1e-10);
  EXPECT_NEAR(r.rho_hat(0), b(2), 1e-10);
  EXPECT_NEAR(r.p_value, 2 * (1 - normal_cdf(std::abs(t))), 1e-12);
  EXPECT_GT(r.se_rho(0), 0.0);
  EXPECT_EQ(r.n, 12);
}

TEST(Hausman, HcRobustVariant) {
  const Dataset d = toy_dataset(50, 603);
  HausmanOptions opt;
  opt.hc_robust = true;
  const HausmanResult r = standard_hausman(d, opt);
  MatrixXd w(50, 2);
  w << d.controls, d.instruments;
  const VectorXd v = d.endogenous - w * (w.transpose() * w).inverse() * w.transpose() * d.endogenous;
  MatrixXd s(50, 3);
  s << d.controls, d.endogenous, v;
  const MatrixXd bread = (s.transpose() * s).inverse();
  const VectorXd b = bread * s.transpose() * d.y;
  const VectorXd e = d.y - s * b;
  const MatrixXd var = bread * s.transpose() * e.array().square().matrix().asDiagonal() * s * bread;
  EXPECT_NEAR(r.se_rho(0), std::sqrt(var(2, 2)), 1e-10);
}

TEST(Hausman, CollinearAugmentation) {
  const Dataset d = toy_dataset(40, 604);
  MatrixXd w(40, 2);
  w << d.controls, d.endogenous;  // V = 0 exactly
  try {
    augmented_regression_test(d, w, HausmanVariant::robust);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::collinear_augmentation);
  }
}

TEST(Hausman, WaldVersionForTwoEndogenous) {
  Dataset d = toy_dataset(200, 605);
  MatrixXd extra = gaussian(200, 2, 606);
  d.endogenous.conservativeResize(Eigen::NoChange, 2);
  d.endogenous.col(1) = extra.col(0) + 0.5 * extra.col(1);
  d.instruments.conservativeResize(Eigen::NoChange, 2);
  d.instruments.col(1) = extra.col(1);
  const HausmanResult r = standard_hausman(d);
  EXPECT_EQ(r.df, 2);
  EXPECT_EQ(r.rho_hat.size(), 2);
  EXPECT_GE(r.t_stat, 0.0);
  EXPECT_NEAR(r.p_value, chi2_sf(r.t_stat, 2), 1e-14);
}

TEST(Hausman, InvariantToReparameterizedControls) {
  Dataset d = toy_dataset(100, 607);
  d.controls.conservativeResize(Eigen::NoChange, 2);
  d.controls.col(1) = gaussian(100, 1, 608).col(0);
  const HausmanResult a = standard_hausman(d);
  Dataset e = d;
  MatrixXd t(2, 2);
  t << 1.0, 0.5, 0.0, 3.0;
  e.controls = d.controls * t;
  const HausmanResult b = standard_hausman(e);
  EXPECT_NEAR(a.t_stat, b.t_stat, 1e-10);
}

TEST(Hausman, VariantsCoincideForAffineInstrument) {
  const Dataset d = toy_dataset(100, 609);
  MatrixXd h(100, 2);
  h << d.controls, (0.3 - 2.0 * d.instruments.array()).matrix();
  const HausmanResult robust = robust_hausman(d, InstrumentFit::from_values(h, 1));
  const HausmanResult standard = standard_hausman(d);
  EXPECT_NEAR(robust.t_stat, standard.t_stat, 1e-10);
  EXPECT_NEAR(robust.p_value, standard.p_value, 1e-10);
}

TEST(Hausman, NullSizeForExogenousLinearModel) {
  // Y = 1 + X + noise independent of everything, X linear in Z.
  int reject = 0;
  const int reps = 1000;
  for (int s = 0; s < reps; ++s) {
    const MatrixXd e = gaussian(300, 3, 7000 + s);
    VectorXd x = 0.8 * e.col(0) + 0.6 * e.col(1);
    VectorXd y = (1.0 + x.array()).matrix() + e.col(2);
    const Dataset d = make_dataset(y, x, e.col(0));
    reject += standard_hausman(d).p_value < 0.05 ? 1 : 0;
  }
  EXPECT_NEAR(reject / static_cast<double>(reps), 0.05, 0.02);
}

TEST(Hausman, RobustNullStatisticNearZero) {
  const Dataset d = toy_dataset(2000, 610, 0.0);
  DgpConfig cfg;
  const InstrumentFit h =
      estimate_instrument(d, regressor_sieve(d, 11), instrument_sieve(d, 5), 1e-4);
  const HausmanResult r = robust_hausman(d, h);
  EXPECT_LT(std::abs(r.t_stat), 4.0);
}
