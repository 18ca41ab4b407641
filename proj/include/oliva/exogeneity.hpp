#pragma once

// Regression-based Hausman exogeneity tests. Residuals V from a first-stage
// regression of X2 enter an augmented OLS of Y on (X, V); the test is on V's
// coefficient. The robust variant uses the estimated instrument h2n(Z) in the
// first stage, the standard variant the raw excluded instruments.

#include <Eigen/Dense>

#include <cmath>
#include <string>

#include "oliva/dataset.hpp"
#include "oliva/design.hpp"
#include "oliva/first_stage.hpp"
#include "oliva/numeric.hpp"

namespace oliva {

enum class HausmanVariant { robust, standard };

inline const char* variant_name(HausmanVariant v) {
  return v == HausmanVariant::robust ? "robust" : "standard";
}

struct HausmanOptions {
  bool hc_robust = false;  // HC0 sandwich instead of classical OLS errors
};

struct HausmanResult {
  double t_stat = 0.0;  // t statistic; the Wald statistic when df > 1
  double p_value = 1.0;
  VectorXd rho_hat;
  VectorXd se_rho;
  HausmanVariant variant = HausmanVariant::robust;
  Index n = 0;
  Index df = 1;
};

inline constexpr double kCollinearTolerance = 1e-10;

// Augmented-regression test with first-stage regressors `w` (n x r).
inline HausmanResult augmented_regression_test(const Dataset& data, const MatrixXd& w,
                                               HausmanVariant variant,
                                               const HausmanOptions& opt = {}) {
  const Index n = data.n();
  const Index p = data.p();
  const Index p2 = data.p2();
  if (w.rows() != n) fail(Errc::shape_mismatch, "first-stage regressors must have n rows");

  const Projector first(w);
  const MatrixXd v = data.endogenous - first.apply(data.endogenous);

  MatrixXd s(n, p + p2);
  s << data.regressors(), v;
  Eigen::ColPivHouseholderQR<MatrixXd> qr(s);
  qr.setThreshold(kCollinearTolerance);
  if (qr.rank() < s.cols())
    fail(Errc::collinear_augmentation,
         "first-stage residuals lie in the span of X; the first stage is uninformative");

  const VectorXd theta = qr.solve(data.y);
  const VectorXd e = data.y - s * theta;
  const MatrixXd sts_inv = (s.transpose() * s).ldlt().solve(MatrixXd::Identity(s.cols(), s.cols()));
  MatrixXd var;
  if (opt.hc_robust) {
    const MatrixXd meat = s.transpose() * e.array().square().matrix().asDiagonal() * s;
    var = sts_inv * meat * sts_inv;
  } else {
    const double s2 = e.squaredNorm() / static_cast<double>(n - s.cols());
    var = s2 * sts_inv;
  }

  HausmanResult r;
  r.variant = variant;
  r.n = n;
  r.df = p2;
  r.rho_hat = theta.tail(p2);
  const MatrixXd v_rho = var.bottomRightCorner(p2, p2);
  r.se_rho = v_rho.diagonal().cwiseSqrt();
  if (p2 == 1) {
    r.t_stat = r.rho_hat(0) / r.se_rho(0);
    r.p_value = two_sided_p(r.t_stat);
  } else {
    r.t_stat = r.rho_hat.dot(v_rho.ldlt().solve(r.rho_hat));
    r.p_value = chi2_sf(r.t_stat, static_cast<double>(p2));
  }
  return r;
}

// First stage X2 on (X1, h2n(Z)).
inline HausmanResult robust_hausman(const Dataset& data, const InstrumentFit& instrument,
                                    const HausmanOptions& opt = {}) {
  if (instrument.fitted.rows() != data.n())
    fail(Errc::shape_mismatch, "instrument fit and data have different sample sizes");
  return augmented_regression_test(data, instrument.fitted, HausmanVariant::robust, opt);
}

// First stage X2 on (X1, Z2).
inline HausmanResult standard_hausman(const Dataset& data, const HausmanOptions& opt = {}) {
  MatrixXd w(data.n(), data.p1() + data.q2());
  w << data.controls, data.instruments;
  return augmented_regression_test(data, w, HausmanVariant::standard, opt);
}

}  // namespace oliva
