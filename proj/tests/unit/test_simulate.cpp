#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "oliva/rng.hpp"
#include "oliva/simulate.hpp"

using namespace oliva;

namespace {

double corr(const VectorXd& a, const VectorXd& b) {
  const VectorXd ca = a.array() - a.mean();
  const VectorXd cb = b.array() - b.mean();
  return ca.dot(cb) / std::sqrt(ca.squaredNorm() * cb.squaredNorm());
}

DgpConfig cell(int dgp, double rho, double gamma, Index n, std::uint64_t seed = 1) {
  DgpConfig c;
  c.dgp = dgp;
  c.rho = rho;
  c.gamma = gamma;
  c.n = n;
  c.seed = seed;
  return c;
}

}  // namespace

TEST(Hermite, Values) {
  EXPECT_EQ(hermite(2, 0.0), -1.0);
  EXPECT_EQ(hermite(3, 2.0), 2.0);
  for (double x : {-3.0, 0.0, 1.5}) EXPECT_EQ(hermite(0, x), 1.0);
  EXPECT_EQ(hermite(1, 1.5), 1.5);
  EXPECT_EQ(hermite(3, -1.0), 2.0);
  try {
    hermite(4, 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::unsupported_degree);
  }
}

TEST(Philox, KnownAnswers) {
  const auto zero = Philox4x32::encrypt({0, 0, 0, 0}, {0, 0});
  EXPECT_EQ(zero, (Philox4x32::Counter{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u}));
  const auto ones = Philox4x32::encrypt({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                                        {0xffffffffu, 0xffffffffu});
  EXPECT_EQ(ones, (Philox4x32::Counter{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu}));
  const auto pi = Philox4x32::encrypt({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                                      {0xa4093822u, 0x299f31d0u});
  EXPECT_EQ(pi, (Philox4x32::Counter{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u}));
}

TEST(Rng, UniformsInOpenIntervalAndNormalMoments) {
  const CounterRng rng(42);
  double sum = 0, sq = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const auto u = rng.uniforms(static_cast<std::uint64_t>(i), 0);
    ASSERT_GT(u[0], 0.0);
    ASSERT_LT(u[1], 1.0);
    const auto z = rng.normals(static_cast<std::uint64_t>(i), 1);
    sum += z[0] + z[1];
    sq += z[0] * z[0] + z[1] * z[1];
  }
  EXPECT_NEAR(sum / (2 * n), 0.0, 0.03);
  EXPECT_NEAR(sq / (2 * n), 1.0, 0.03);
}

TEST(Rng, DerivedSeedsAreDistinct) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t dgp = 1; dgp <= 3; ++dgp)
    for (std::uint64_t r = 0; r < 1000; ++r) seen.insert(derive_seed(7, r, dgp));
  EXPECT_EQ(seen.size(), 3000u);
}

TEST(GenDgp, CorrelationMatchesGamma) {
  const DgpDraw d = draw_dgp(cell(1, 0.3, 0.8, 10000));
  EXPECT_NEAR(corr(d.data.endogenous.col(0), d.latent), 0.8, 0.05);
}

TEST(GenDgp, ExogenousCaseIsUncorrelated) {
  const DgpDraw d = draw_dgp(cell(1, 0.0, 0.8, 5000));
  EXPECT_LT(std::abs(corr(d.error, d.data.endogenous.col(0))), 3.0 / std::sqrt(5000.0));
}

TEST(GenDgp, EndogeneityEqualsRho) {
  const DgpDraw d = draw_dgp(cell(1, 0.3, 0.8, 20000));
  const VectorXd x = d.data.endogenous.col(0);
  // E[eps | X] = rho X, so the regression slope of eps on X is rho.
  const double slope = (x.array() - x.mean()).matrix().dot(d.error) / (x.array() - x.mean()).square().sum();
  EXPECT_NEAR(slope, 0.3, 0.03);
  // E[eps | Z] = 0.
  EXPECT_LT(std::abs(corr(d.error, d.data.instruments.col(0))), 4.0 / std::sqrt(20000.0));
}

TEST(GenDgp, LinkFunctionsAndInverses) {
  for (int dgp : {1, 2, 3}) {
    const DgpDraw d = draw_dgp(cell(dgp, 0.3, 0.8, 500));
    for (Index i = 0; i < 500; ++i) {
      EXPECT_EQ(d.data.instruments(i, 0), dgp_link(dgp, d.latent(i)));
      EXPECT_NEAR(dgp_link_inverse(dgp, d.data.instruments(i, 0)), d.latent(i), 1e-12 * std::max(1.0, std::abs(d.latent(i))));
    }
    const VectorXd x = d.data.endogenous.col(0);
    for (Index i = 0; i < 500; ++i) {
      double g = 0;
      for (int j = 1; j <= dgp; ++j) g += hermite(j, x(i));
      EXPECT_EQ(d.structural(i), g);
      EXPECT_EQ(d.data.y(i), g + d.error(i));
      EXPECT_NEAR(d.v(i), x(i) - 0.8 * d.latent(i), 1e-15);
    }
  }
  const DgpDraw d2 = draw_dgp(cell(2, 0.0, 0.8, 100));
  for (Index i = 0; i < 100; ++i)
    EXPECT_NEAR(std::cbrt(d2.data.instruments(i, 0)), d2.latent(i), 1e-12);
}

TEST(GenDgp, Deterministic) {
  const Dataset a = gen_dgp(cell(3, 0.9, 0.4, 300, 99));
  const Dataset b = gen_dgp(cell(3, 0.9, 0.4, 300, 99));
  EXPECT_EQ(a.y, b.y);
  EXPECT_EQ(a.endogenous, b.endogenous);
  EXPECT_EQ(a.instruments, b.instruments);
  EXPECT_NE(a.y, gen_dgp(cell(3, 0.9, 0.4, 300, 100)).y);
}

TEST(GenDgp, InvalidConfig) {
  try {
    gen_dgp(cell(4, 0.3, 0.8, 100));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::invalid_dgp);
  }
  EXPECT_THROW(gen_dgp(cell(1, 0.3, 1.0, 100)), Error);
  EXPECT_THROW(gen_dgp(cell(1, 0.3, 0.0, 100)), Error);
}

TEST(RunCell, SingleReplicationAggregates) {
  SimulationOptions opt;
  const McSummary s = run_cell(cell(1, 0.3, 0.8, 400), 1, opt, 5);
  DgpConfig c = cell(1, 0.3, 0.8, 400, derive_seed(5, 0, 1));
  const ReplicationResult r = run_replication(c, opt);
  ASSERT_TRUE(r.ok);
  EXPECT_EQ(s.tsiv.bias, r.err_tsiv);
  EXPECT_EQ(s.tsiv.mse, r.err_tsiv * r.err_tsiv);
  EXPECT_EQ(s.ols.bias, r.err_ols);
  EXPECT_EQ(s.iv.mse, r.err_iv * r.err_iv);
}

TEST(RunCell, DeterministicAndWorkerInvariant) {
  SimulationOptions a;
  SimulationOptions b;
  b.threads = 3;
  const McSummary s1 = run_cell(cell(2, 0.3, 0.8, 300), 12, a, 11);
  const McSummary s2 = run_cell(cell(2, 0.3, 0.8, 300), 12, b, 11);
  EXPECT_EQ(s1.tsiv.bias, s2.tsiv.bias);
  EXPECT_EQ(s1.tsiv.mse, s2.tsiv.mse);
  EXPECT_EQ(s1.iv.bias, s2.iv.bias);
  EXPECT_EQ(s1.coverage.rate, s2.coverage.rate);
  EXPECT_EQ(s1.t_robust, s2.t_robust);
}

TEST(RunCell, SummaryInvariants) {
  SimulationOptions opt;
  const McSummary s = run_cell(cell(3, 0.3, 0.8, 500), 40, opt, 3);
  EXPECT_TRUE(s.valid);
  for (const EstimatorSummary* e : {&s.ols, &s.iv, &s.tsiv}) EXPECT_GE(e->mse, e->bias * e->bias);
  for (double r : {s.coverage.rate, s.reject_standard.rate, s.reject_robust.rate}) {
    EXPECT_GE(r, 0.0);
    EXPECT_LE(r, 1.0);
  }
  EXPECT_EQ(s.replications, 40);
}

TEST(RunCell, OlsBiasIsRhoForLinearDesign) {
  SimulationOptions opt;
  opt.estimators.tsiv = false;
  opt.estimators.hausman = false;
  const McSummary s = run_cell(cell(1, 0.3, 0.8, 1000), 200, opt, 2);
  EXPECT_NEAR(s.ols.bias, 0.3, 0.03);
}

TEST(RunCell, StrongerInstrumentLowersIvMse) {
  SimulationOptions opt;
  opt.estimators.tsiv = false;
  opt.estimators.hausman = false;
  for (int dgp : {1, 2, 3}) {
    const McSummary weak = run_cell(cell(dgp, 0.3, 0.4, 1000), 200, opt, 4);
    const McSummary strong = run_cell(cell(dgp, 0.3, 0.8, 1000), 200, opt, 4);
    EXPECT_LT(strong.iv.mse, weak.iv.mse) << dgp;
  }
}

TEST(SizeCorrectedPower, IdenticalAndShifted) {
  std::vector<double> null;
  const CounterRng rng(3);
  for (int i = 0; i < 4000; ++i) null.push_back(std::abs(rng.normals(static_cast<std::uint64_t>(i), 0)[0]));
  EXPECT_NEAR(size_corrected_power(null, null, 0.05), 0.05, 0.005);
  std::vector<double> alt = null;
  for (double& t : alt) t += 10.0;
  EXPECT_EQ(size_corrected_power(null, alt, 0.05), 1.0);
  try {
    size_corrected_power({}, alt, 0.05);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::insufficient_samples);
  }
}
