#pragma once

// Minimum-norm structural function g_n, the Tikhonov dual of the first stage.
// It only feeds the influence-function correction of the TSIV variance.

#include <Eigen/Dense>

#include "oliva/dataset.hpp"
#include "oliva/design.hpp"
#include "oliva/first_stage.hpp"

namespace oliva {

struct StructuralFit {
  VectorXd coef;    // P columns
  VectorXd fitted;  // g_n(X_i)
  double lambda = 0.0;
  DesignMatrix P;
  DesignMatrix Q;
  double condition = 0.0;
  double effective_df = 0.0;
  Index control_count = 0;
  Index endogenous_count = 0;
};

// G_n = P (P'(Pi_Q + lambda I) P)^{-1} P' Pi_Q Y.
inline StructuralFit estimate_g(const Dataset& data, const DesignMatrix& P,
                                const DesignMatrix& Q, double lambda) {
  detail::check_bases(data, P, Q);
  const Projector pp(P.values);
  const Projector pq(Q.values);
  const RegularizedCore core(pq, pp);
  RegularizedSolution s = core.solve(data.y, lambda);

  StructuralFit fit;
  fit.coef = s.coef.col(0);
  fit.fitted = s.fitted.col(0);
  fit.lambda = lambda;
  fit.P = P;
  fit.Q = Q;
  fit.condition = s.condition;
  fit.effective_df = s.trace;
  fit.control_count = data.p1();
  fit.endogenous_count = data.p2();
  return fit;
}

// g_n at new regressors; `x_new` is [X1 | X2] in the training layout.
inline VectorXd evaluate_g(const StructuralFit& fit, const MatrixXd& x_new,
                           Index* extrapolated = nullptr) {
  if (x_new.cols() != fit.control_count + fit.endogenous_count)
    fail(Errc::schema_mismatch, "expected " +
                                    std::to_string(fit.control_count + fit.endogenous_count) +
                                    " regressor columns, got " + std::to_string(x_new.cols()));
  const MatrixXd p = fit.P.evaluate(x_new.leftCols(fit.control_count),
                                    x_new.rightCols(fit.endogenous_count), extrapolated);
  return p * fit.coef;
}

}  // namespace oliva
