#pragma once

// Closed-form minimum-norm instruments when the endogenous regressor is
// binary or discrete: the instrument is linear in the (generalized)
// propensity scores, so only those need a nonparametric fit.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <vector>

#include "oliva/dataset.hpp"
#include "oliva/design.hpp"
#include "oliva/first_stage.hpp"
#include "oliva/numeric.hpp"

namespace oliva {

inline constexpr double kPropensityClip = 1e-6;

struct PropensityModel {
  VectorXd values;  // clipped pi_hat(Z_i)
  double pi_bar = 0.0;
  double var_pi = 0.0;
  DesignMatrix Q;   // empty when built from values
  VectorXd coef;

  static PropensityModel from_values(const VectorXd& pi) {
    PropensityModel m;
    m.values = pi.array().min(1.0 - kPropensityClip).max(kPropensityClip).matrix();
    m.pi_bar = m.values.mean();
    m.var_pi = (m.values.array() - m.pi_bar).square().mean();
    return m;
  }

  // pi_hat at new instrument rows [Z1 | Z2].
  VectorXd evaluate(const MatrixXd& z_new) const {
    if (Q.cols() == 0) fail(Errc::schema_mismatch, "propensity model has no basis");
    const MatrixXd q = Q.evaluate(z_new.leftCols(Q.control_count),
                                  z_new.rightCols(z_new.cols() - Q.control_count));
    return (q * coef).array().min(1.0 - kPropensityClip).max(kPropensityClip).matrix();
  }
};

namespace detail {

inline void require_binary(const VectorXd& x2) {
  for (Index i = 0; i < x2.size(); ++i)
    if (x2(i) != 0.0 && x2(i) != 1.0)
      fail(Errc::invalid_argument, "endogenous regressor must be coded 0/1");
}

}  // namespace detail

// Sieve regression of the treatment indicator on Q, clipped to
// [1e-6, 1 - 1e-6].
inline PropensityModel estimate_propensity(const Dataset& data, const DesignMatrix& Q) {
  if (data.p2() != 1) fail(Errc::invalid_argument, "binary case needs one endogenous regressor");
  if (Q.rows() != data.n()) fail(Errc::shape_mismatch, "Q rows differ from sample size");
  detail::require_binary(data.endogenous.col(0));
  const Projector pq(Q.values);
  const MatrixXd c = pq.coordinates(data.endogenous);
  PropensityModel m = PropensityModel::from_values(pq.basis() * c.col(0));
  m.Q = Q;
  m.coef = pq.coefficients(c).col(0);
  return m;
}

struct BinaryInstrument {
  double alpha = 0.0;
  double gamma = 0.0;

  double operator()(double pi) const { return alpha + gamma * pi; }
  VectorXd operator()(const VectorXd& pi) const { return (alpha + gamma * pi.array()).matrix(); }
};

// h0 = alpha + gamma pi with gamma = pi_bar (1 - pi_bar) / var(pi) and
// alpha = pi_bar (1 - gamma).
inline BinaryInstrument binary_h0(const PropensityModel& pm) {
  const double edge = kPropensityClip * (1.0 + 1e-9);
  if (!(pm.pi_bar > edge && pm.pi_bar < 1.0 - edge))
    fail(Errc::degenerate_treatment, "treatment probability is 0 or 1", pm.pi_bar);
  if (!(pm.var_pi > 1e-12))
    fail(Errc::constant_propensity, "propensity score does not vary with the instrument",
         pm.var_pi);
  BinaryInstrument h;
  h.gamma = pm.pi_bar * (1.0 - pm.pi_bar) / pm.var_pi;
  h.alpha = pm.pi_bar * (1.0 - h.gamma);
  return h;
}

struct BinaryOliva {
  double intercept = 0.0;
  double slope = 0.0;
};

// Slope Cov(Y, pi) / Cov(X2, pi), intercept E[Y] - slope E[X2].
inline BinaryOliva binary_oliva(const Dataset& data, const PropensityModel& pm) {
  if (pm.values.size() != data.n()) fail(Errc::shape_mismatch, "propensity values must be n-vector");
  if (data.p2() != 1) fail(Errc::invalid_argument, "binary case needs one endogenous regressor");
  const VectorXd x2 = data.endogenous.col(0);
  const VectorXd pi = pm.values.array() - pm.values.mean();
  const double n = static_cast<double>(data.n());
  const double cov_x = (x2.array() - x2.mean()).matrix().dot(pi) / n;
  const double cov_y = (data.y.array() - data.y.mean()).matrix().dot(pi) / n;
  if (!(std::abs(cov_x) > 1e-10))
    fail(Errc::weak_propensity, "treatment is uncorrelated with its propensity score", cov_x);
  BinaryOliva b;
  b.slope = cov_y / cov_x;
  b.intercept = data.y.mean() - b.slope * x2.mean();
  return b;
}

// Generalized propensity scores Pi(z) = (P(X2 = x_1 | z), ..., P(X2 = x_d | z)).
struct GeneralizedPropensity {
  std::vector<double> support;
  MatrixXd values;  // n x d, rows on the simplex
  DesignMatrix Q;
  MatrixXd coef;    // Q columns x d (before renormalization)
};

namespace detail {

inline MatrixXd to_simplex(MatrixXd pi) {
  pi = pi.cwiseMax(0.0);
  for (Index i = 0; i < pi.rows(); ++i) {
    const double s = pi.row(i).sum();
    if (s > 0.0) pi.row(i) /= s;
    else pi.row(i).setConstant(1.0 / static_cast<double>(pi.cols()));
  }
  return pi;
}

inline MatrixXd level_indicators(const VectorXd& x, const std::vector<double>& support) {
  MatrixXd ind = MatrixXd::Zero(x.size(), static_cast<Index>(support.size()));
  for (Index i = 0; i < x.size(); ++i) {
    const auto it = std::lower_bound(support.begin(), support.end(), x(i));
    if (it == support.end() || *it != x(i))
      fail(Errc::schema_mismatch, "value outside the declared support");
    ind(i, it - support.begin()) = 1.0;
  }
  return ind;
}

}  // namespace detail

inline GeneralizedPropensity estimate_generalized_propensity(const Dataset& data,
                                                             const DesignMatrix& Q) {
  if (data.p2() != 1) fail(Errc::invalid_argument, "discrete case needs one endogenous regressor");
  if (Q.rows() != data.n()) fail(Errc::shape_mismatch, "Q rows differ from sample size");
  const VectorXd x = data.endogenous.col(0);
  GeneralizedPropensity g;
  g.support.assign(x.data(), x.data() + x.size());
  std::sort(g.support.begin(), g.support.end());
  g.support.erase(std::unique(g.support.begin(), g.support.end()), g.support.end());
  if (g.support.size() < 2) fail(Errc::degenerate_input, "endogenous regressor is constant");
  const MatrixXd ind = detail::level_indicators(x, g.support);
  const Projector pq(Q.values);
  const MatrixXd c = pq.coordinates(ind);
  g.values = detail::to_simplex(pq.basis() * c);
  g.coef = pq.coefficients(c);
  g.Q = Q;
  return g;
}

struct DiscreteInstrument {
  std::vector<double> support;
  VectorXd gamma;      // empty when the Tikhonov fallback was used
  VectorXd S;          // (pi_1 x_1, ..., pi_d x_d)
  VectorXd frequencies;
  VectorXd values;     // h2(Z_i)
  bool fallback = false;
  double fallback_lambda = 0.0;
};

// h0(z) = gamma' Pi(z), gamma = E_n[Pi Pi']^{-1} S. When E_n[Pi Pi'] is
// numerically singular the general Tikhonov estimator with a saturated
// indicator basis for X2 is used instead and `fallback` is set.
inline DiscreteInstrument discrete_h0(const Dataset& data, const GeneralizedPropensity& gp,
                                      double fallback_lambda = 1e-8) {
  const Index n = data.n();
  if (gp.values.rows() != n || gp.values.cols() != static_cast<Index>(gp.support.size()))
    fail(Errc::schema_mismatch, "propensity matrix does not match support and sample");
  const VectorXd x = data.endogenous.col(0);
  const MatrixXd ind = detail::level_indicators(x, gp.support);
  const Eigen::Map<const VectorXd> xs(gp.support.data(), static_cast<Index>(gp.support.size()));

  DiscreteInstrument h;
  h.support = gp.support;
  h.frequencies = ind.colwise().mean().transpose();
  h.S = h.frequencies.cwiseProduct(xs);

  const MatrixXd e = gp.values.transpose() * gp.values / static_cast<double>(n);
  if (condition_number(e) <= kSingularCondition) {
    h.gamma = e.ldlt().solve(h.S);
    h.values = gp.values * h.gamma;
    return h;
  }

  if (gp.Q.cols() == 0) fail(Errc::schema_mismatch, "fallback needs the propensity basis");
  DesignMatrix saturated = assemble(data.controls, build_indicator(x));
  const InstrumentFit fit = estimate_instrument(data, saturated, gp.Q, fallback_lambda);
  h.values = fit.fitted.col(data.p1());
  h.fallback = true;
  h.fallback_lambda = fallback_lambda;
  return h;
}

}  // namespace oliva
