#pragma once

// Second-step linear IV with the estimated instrument, its influence function
// and sandwich covariance.

#include <Eigen/Dense>

#include <cmath>
#include <string>

#include "oliva/dataset.hpp"
#include "oliva/error.hpp"
#include "oliva/first_stage.hpp"
#include "oliva/numeric.hpp"
#include "oliva/structural.hpp"

namespace oliva {

inline constexpr double kInstrumentCondition = 1e10;

struct TsivFit {
  VectorXd beta;
  MatrixXd sigma;      // asymptotic covariance of sqrt(n)(beta_hat - beta)
  VectorXd se;         // sqrt(diag(sigma) / n)
  MatrixXd ci;         // p x 2, [lower upper]
  double level = 0.95;
  Index n = 0;
  TuningTriple tuning;
  double condition = 0.0;  // of H'X
};

namespace detail {

inline Eigen::FullPivLU<MatrixXd> instrument_moment(const MatrixXd& h, const MatrixXd& x,
                                                    double* condition_out = nullptr) {
  const MatrixXd hx = h.transpose() * x;
  const double cond = condition_number(hx);
  if (condition_out) *condition_out = cond;
  if (!(cond <= kInstrumentCondition))
    fail(Errc::instrument_rank_deficient,
         "H'X is numerically singular (condition " + std::to_string(cond) +
             "); the first stage is too weak",
         cond);
  return Eigen::FullPivLU<MatrixXd>(hx);
}

}  // namespace detail

// beta_hat = (H'X)^{-1} H'Y.
inline VectorXd fit_tsiv(const Dataset& data, const MatrixXd& h, double* condition = nullptr) {
  if (h.rows() != data.n() || h.cols() != data.p())
    fail(Errc::shape_mismatch, "instrument matrix must be n x p");
  const MatrixXd x = data.regressors();
  return detail::instrument_moment(h, x, condition).solve(h.transpose() * data.y);
}

inline VectorXd fit_tsiv(const Dataset& data, const InstrumentFit& instrument,
                         double* condition = nullptr) {
  return fit_tsiv(data, instrument.fitted, condition);
}

// Rows m_i = (Y_i - X_i'b) h_i - (g_i - X_i'b)(h_i - X_i). The second term is
// the correction for having estimated h.
inline MatrixXd influence(const Dataset& data, const VectorXd& beta, const MatrixXd& h,
                          const VectorXd& g) {
  const Index n = data.n();
  if (h.rows() != n || g.size() != n || h.cols() != data.p() || beta.size() != data.p())
    fail(Errc::shape_mismatch, "influence: inconsistent shapes");
  const MatrixXd x = data.regressors();
  const VectorXd xb = x * beta;
  const VectorXd resid = data.y - xb;
  const VectorXd nonlinearity = g - xb;
  return resid.asDiagonal() * h - nonlinearity.asDiagonal() * (h - x);
}

inline MatrixXd influence(const Dataset& data, const VectorXd& beta,
                          const InstrumentFit& instrument, const StructuralFit& structural) {
  return influence(data, beta, instrument.fitted, structural.fitted);
}

// Sigma_hat = E_n[h X']^{-1} E_n[m m'] E_n[X h']^{-1}.
inline MatrixXd covariance(const Dataset& data, const MatrixXd& h, const MatrixXd& infl) {
  if (infl.rows() != data.n() || infl.cols() != data.p())
    fail(Errc::shape_mismatch, "covariance: influence matrix must be n x p");
  const double n = static_cast<double>(data.n());
  const MatrixXd x = data.regressors();
  const auto lu = detail::instrument_moment(h, x);
  const MatrixXd a_inv = lu.inverse() * n;  // E_n[h X']^{-1}
  const MatrixXd meat = infl.transpose() * infl / n;
  const MatrixXd s = a_inv * meat * a_inv.transpose();
  return 0.5 * (s + s.transpose());
}

inline MatrixXd covariance(const Dataset& data, const InstrumentFit& instrument,
                           const MatrixXd& infl) {
  return covariance(data, instrument.fitted, infl);
}

inline VectorXd standard_errors(const MatrixXd& sigma, Index n) {
  return (sigma.diagonal().array().max(0.0) / static_cast<double>(n)).sqrt().matrix();
}

// beta_i -/+ z_{(1+level)/2} se_i, one row per coefficient.
inline MatrixXd confidence_intervals(const VectorXd& beta, const VectorXd& se, double level) {
  if (!(level >= 0.0 && level < 1.0))
    fail(Errc::invalid_level, "confidence level must lie in [0, 1)", level);
  const double z = level == 0.0 ? 0.0 : normal_quantile(0.5 * (1.0 + level));
  MatrixXd ci(beta.size(), 2);
  ci.col(0) = beta - z * se;
  ci.col(1) = beta + z * se;
  return ci;
}

inline MatrixXd confidence_intervals(const TsivFit& fit, double level) {
  return confidence_intervals(fit.beta, fit.se, level);
}

// Assembles a TsivFit from fitted first stage and structural function.
inline TsivFit make_tsiv_fit(const Dataset& data, const InstrumentFit& instrument,
                             const StructuralFit& structural, double level,
                             TuningTriple tuning = {}) {
  TsivFit f;
  f.beta = fit_tsiv(data, instrument, &f.condition);
  const MatrixXd m = influence(data, f.beta, instrument, structural);
  f.sigma = covariance(data, instrument, m);
  f.n = data.n();
  f.se = standard_errors(f.sigma, f.n);
  f.level = level;
  f.ci = confidence_intervals(f.beta, f.se, level);
  f.tuning = tuning;
  return f;
}

// Least squares with the heteroskedasticity-robust sandwich; the h = X,
// g = X'b special case of the TSIV covariance.
inline TsivFit fit_ols(const Dataset& data, double level = 0.95) {
  const MatrixXd x = data.regressors();
  TsivFit f;
  f.beta = fit_tsiv(data, x, &f.condition);
  const VectorXd resid = data.y - x * f.beta;
  f.sigma = covariance(data, x, resid.asDiagonal() * x);
  f.n = data.n();
  f.se = standard_errors(f.sigma, f.n);
  f.level = level;
  f.ci = confidence_intervals(f.beta, f.se, level);
  return f;
}

// Linear IV with instruments [X1 Z2] (just identified) or, with more
// instruments than regressors, two-stage least squares on them.
inline TsivFit fit_linear_iv(const Dataset& data, double level = 0.95) {
  MatrixXd z(data.n(), data.p1() + data.q2());
  z << data.controls, data.instruments;
  const MatrixXd x = data.regressors();
  const MatrixXd h = Projector(z).apply(x);
  TsivFit f;
  f.beta = fit_tsiv(data, h, &f.condition);
  const VectorXd resid = data.y - x * f.beta;
  f.sigma = covariance(data, h, resid.asDiagonal() * h);
  f.n = data.n();
  f.se = standard_errors(f.sigma, f.n);
  f.level = level;
  f.ci = confidence_intervals(f.beta, f.se, level);
  return f;
}

}  // namespace oliva
