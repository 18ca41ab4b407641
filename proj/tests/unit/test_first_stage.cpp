#include <gtest/gtest.h>

#include <algorithm>
#include <vector>

#include "helpers.hpp"
#include "oliva/first_stage.hpp"
#include "oliva/selection.hpp"
#include "oliva/simulate.hpp"

using namespace oliva;
using testing_util::dense_projection;
using testing_util::gaussian;
using testing_util::toy_dataset;

namespace {

DesignMatrix random_basis(Index n, Index cols, std::uint64_t seed) {
  DesignMatrix block;
  block.values = gaussian(n, cols, seed);
  return assemble(MatrixXd::Ones(n, 1), block);
}

MatrixXd dense_first_stage(const Dataset& d, const MatrixXd& p, const MatrixXd& q, double lambda) {
  const Index n = d.n();
  const MatrixXd pp = dense_projection(p);
  const MatrixXd a = q.transpose() * (pp + lambda * MatrixXd::Identity(n, n)) * q;
  return q * a.inverse() * q.transpose() * pp * d.endogenous;
}

}  // namespace

TEST(FirstStage, MatchesDenseFormulaAtTwenty) {
  const Dataset d = toy_dataset(20, 101);
  const DesignMatrix p = regressor_sieve(d, 5);
  const DesignMatrix q = instrument_sieve(d, 3);
  for (double lambda : {1e-6, 1e-3, 0.1, 1.0}) {
    const InstrumentFit f = estimate_instrument(d, p, q, lambda);
    const MatrixXd oracle = dense_first_stage(d, p.values, q.values, lambda);
    EXPECT_LT((f.instrument_block() - oracle).cwiseAbs().maxCoeff(), 1e-9) << lambda;
    EXPECT_TRUE((q.values * f.coef).isApprox(MatrixXd(f.instrument_block()), 1e-10));
  }
}

TEST(FirstStage, SaturatedLimitReturnsTarget) {
  const Index n = 8;
  const Dataset d = toy_dataset(n, 5);
  const DesignMatrix full = random_basis(n, n - 1, 6);
  const InstrumentFit f = estimate_instrument(d, full, full, 1e-12);
  EXPECT_TRUE(f.instrument_block().isApprox(d.endogenous, 1e-9));
}

TEST(FirstStage, SharedBasisGivesLeastSquaresFirstStage) {
  const Dataset d = toy_dataset(30, 7);
  const DesignMatrix q = instrument_sieve(d, 4);
  const InstrumentFit f = estimate_instrument(d, q, q, 1e-12);
  EXPECT_LT((f.instrument_block() - dense_projection(q.values) * d.endogenous).cwiseAbs().maxCoeff(),
            1e-9);
}

TEST(FirstStage, LargeLambdaShrinksToZero) {
  const Dataset d = toy_dataset(50, 8);
  const InstrumentFit f =
      estimate_instrument(d, regressor_sieve(d, 6), instrument_sieve(d, 4), 1e9);
  EXPECT_LT(f.instrument_block().cwiseAbs().maxCoeff(), 1e-7);
}

TEST(FirstStage, MonotoneShrinkage) {
  const Dataset d = toy_dataset(150, 9);
  const DesignMatrix p = regressor_sieve(d, 8);
  const DesignMatrix q = instrument_sieve(d, 5);
  double prev = std::numeric_limits<double>::infinity();
  for (double lambda : log_spaced(1e-8, 10.0, 25)) {
    const double norm = estimate_instrument(d, p, q, lambda).instrument_block().norm();
    EXPECT_LE(norm, prev * (1 + 1e-12));
    prev = norm;
  }
}

TEST(FirstStage, ControlsPassThroughExactly) {
  Dataset d = toy_dataset(60, 10);
  d.controls.conservativeResize(Eigen::NoChange, 2);
  d.controls.col(1) = gaussian(60, 1, 11).col(0);
  d.control_names.push_back("w");
  const InstrumentFit f =
      estimate_instrument(d, regressor_sieve(d, 6), instrument_sieve(d, 4), 1e-4);
  EXPECT_EQ(MatrixXd(f.fitted.leftCols(2)), d.controls);
  EXPECT_EQ(f.p(), d.p());
}

TEST(FirstStage, RouteEquivalence) {
  int checked = 0;
  for (Index n : {40, 120, 200})
    for (std::uint64_t seed : {1u, 2u, 3u})
      for (double lambda : {1e-6, 1e-3, 1e-1}) {
        const Dataset d = toy_dataset(n, 1000 * n + seed);
        const DesignMatrix p = regressor_sieve(d, 7);
        const DesignMatrix q = instrument_sieve(d, 4);
        const InstrumentFit a = estimate_instrument(d, p, q, lambda);
        const InstrumentFit b = two_stage_form(d, p, q, lambda);
        EXPECT_LT((a.fitted - b.fitted).cwiseAbs().maxCoeff(), 1e-8)
            << "n=" << n << " seed=" << seed << " lambda=" << lambda;
        EXPECT_LT((q.values * (a.coef - b.coef)).cwiseAbs().maxCoeff(), 1e-8);
        ++checked;
      }
  EXPECT_EQ(checked, 27);
}

TEST(FirstStage, TwoStageAtZeroLambdaIsLeastSquares) {
  const Dataset d = toy_dataset(80, 12);
  const DesignMatrix p = regressor_sieve(d, 8);
  const DesignMatrix q = instrument_sieve(d, 4);
  const InstrumentFit b = two_stage_form(d, p, q, 0.0);
  const MatrixXd qhat = dense_projection(p.values) * q.values;
  const MatrixXd ls = (qhat.transpose() * qhat).ldlt().solve(qhat.transpose() * d.endogenous);
  EXPECT_LT((q.values * ls - b.instrument_block()).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LT((estimate_instrument(d, p, q, 0.0).fitted - b.fitted).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(FirstStage, ReparameterizedQGivesSameFit) {
  const Dataset d = toy_dataset(70, 13);
  const DesignMatrix p = regressor_sieve(d, 6);
  DesignMatrix raw = instrument_sieve(d, 4, SieveOptions{3, {}, {}, false});
  const DesignMatrix stdq = instrument_sieve(d, 4);
  const InstrumentFit a = estimate_instrument(d, p, raw, 1e-3);
  const InstrumentFit b = estimate_instrument(d, p, stdq, 1e-3);
  EXPECT_LT((a.fitted - b.fitted).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(FirstStage, WeightedTargetScales) {
  const Dataset d = toy_dataset(60, 14);
  const DesignMatrix p = regressor_sieve(d, 6);
  const DesignMatrix q = instrument_sieve(d, 4);
  const InstrumentFit a = estimate_instrument(d, p, q, 1e-3);
  const InstrumentFit b = estimate_instrument(d, p, q, 1e-3, VectorXd::Constant(60, 2.0));
  EXPECT_TRUE(b.instrument_block().isApprox(2.0 * a.instrument_block(), 1e-12));
  ASSERT_TRUE(b.target_weights.has_value());

  VectorXd w = VectorXd::Ones(60);
  w(3) = 0.0;
  try {
    estimate_instrument(d, p, q, 1e-3, w);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::invalid_argument);
  }
}

TEST(FirstStage, UnpenalizedUnderidentifiedIsSingular) {
  const Dataset d = toy_dataset(60, 15);
  // More sieve columns in z than conditioning columns in x: C'C is singular.
  try {
    estimate_instrument(d, regressor_sieve(d, 2), instrument_sieve(d, 6), 0.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::singular_system);
    EXPECT_GT(e.value(), kSingularCondition);
  }
  EXPECT_NO_THROW(estimate_instrument(d, regressor_sieve(d, 2), instrument_sieve(d, 6), 1e-3));
}

TEST(FirstStage, ShapeMismatch) {
  const Dataset d = toy_dataset(60, 16);
  const Dataset e = toy_dataset(50, 16);
  try {
    estimate_instrument(d, regressor_sieve(e, 4), instrument_sieve(d, 4), 1e-3);
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), Errc::shape_mismatch);
  }
}

TEST(EvaluateInstrument, InSampleReproducesFit) {
  const Dataset d = toy_dataset(90, 17);
  const InstrumentFit f =
      estimate_instrument(d, regressor_sieve(d, 8), instrument_sieve(d, 5), 1e-4);
  MatrixXd z(d.n(), 2);
  z << d.controls, d.instruments;
  EXPECT_LT((evaluate_instrument(f, z) - f.fitted).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(EvaluateInstrument, SinglePointByHand) {
  const Dataset d = toy_dataset(90, 18);
  const InstrumentFit f =
      estimate_instrument(d, regressor_sieve(d, 8), instrument_sieve(d, 5), 1e-4);
  const double z0 = 0.3;
  MatrixXd z(1, 2);
  z << 1.0, z0;
  // Manual: raw spline row, then the stored standardizer, then coef.
  const BasisBlock& b = f.Q.blocks.front();
  VectorXd pt(1);
  pt << z0;
  const MatrixXd raw = b.evaluate(pt);
  Eigen::RowVectorXd row(f.Q.cols());
  row << 1.0, raw.row(0) * f.Q.standardizer;
  EXPECT_NEAR(evaluate_instrument(f, z)(0, 1), (row * f.coef)(0, 0), 1e-12);
  EXPECT_DOUBLE_EQ(evaluate_instrument(f, z)(0, 0), 1.0);
}

TEST(EvaluateInstrument, ExtrapolationIsCountedAndSchemaChecked) {
  const Dataset d = toy_dataset(90, 19);
  const InstrumentFit f =
      estimate_instrument(d, regressor_sieve(d, 8), instrument_sieve(d, 5), 1e-4);
  MatrixXd z(2, 2);
  z << 1.0, d.instruments.maxCoeff() + 1.0, 1.0, 0.0;
  Index extrap = 0;
  const MatrixXd h = evaluate_instrument(f, z, &extrap);
  EXPECT_EQ(extrap, 1);
  EXPECT_TRUE(h.allFinite());
  try {
    evaluate_instrument(f, MatrixXd::Ones(1, 3));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::schema_mismatch);
  }
}

TEST(Diagnostics, PassthroughInstrumentHasNoDiscrepancy) {
  const Dataset d = toy_dataset(40, 20);
  const auto diag = first_stage_diagnostics(InstrumentFit::from_values(d.regressors(), 1), d);
  EXPECT_NEAR(diag.discrepancy, 0.0, 1e-14);
  EXPECT_NEAR(diag.residual, 0.0, 1e-14);
  EXPECT_GT(diag.smallest_singular, 0.0);
}

TEST(Diagnostics, RankDeficientRegressorsReportZero) {
  Dataset d = toy_dataset(40, 21);
  d.endogenous.setConstant(2.0);
  const auto diag = first_stage_diagnostics(InstrumentFit::from_values(d.regressors(), 1), d);
  EXPECT_LT(diag.smallest_singular, 1e-12);
}

TEST(Diagnostics, StrongDesignBoundedAwayFromZero) {
  int good = 0;
  const int seeds = 40;
  for (int s = 0; s < seeds; ++s) {
    DgpConfig cfg;
    cfg.dgp = 1;
    cfg.rho = 0.3;
    cfg.gamma = 0.8;
    cfg.n = 1000;
    cfg.seed = derive_seed(99, static_cast<std::uint64_t>(s), 1);
    const Dataset d = gen_dgp(cfg);
    const TuningTriple tau{5, 2.2, 0.0};
    const GcvResult sel = select(d, lambda_only_grid(5, 2.2, log_spaced(1e-8, 1e-1, 10)));
    const InstrumentFit f = estimate_instrument(d, regressor_sieve(d, tau.k()),
                                                instrument_sieve(d, 5), sel.chosen.lambda);
    good += first_stage_diagnostics(f, d).smallest_singular > 0.1 ? 1 : 0;
  }
  EXPECT_GE(good, static_cast<int>(0.95 * seeds));
}
