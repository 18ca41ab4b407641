#pragma once

// Tikhonov-regularized first stage: the instrument h solving the empirical
// version of E[h(Z) | X] = X (or X w(X)), with controls passed through.

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include "oliva/dataset.hpp"
#include "oliva/design.hpp"
#include "oliva/error.hpp"
#include "oliva/numeric.hpp"

namespace oliva {

// Tuning for one pipeline evaluation: j instrument-block columns, k = floor(c j)
// regressor-block columns, penalty lambda.
struct TuningTriple {
  Index j = 5;
  double c = 2.2;
  double lambda = 1e-4;

  // Guarded against c*j landing a hair below an integer.
  Index k() const { return static_cast<Index>(std::floor(c * static_cast<double>(j) + 1e-9)); }
};

inline constexpr double kSingularCondition = 1e12;

struct RegularizedSolution {
  MatrixXd fitted;       // n x t, lies in the sieve space
  MatrixXd coef;         // sieve columns x t
  double condition = 0;  // of the penalized normal matrix in orthonormal coordinates
  double trace = 0;      // trace of the target -> fitted smoother
};

// Solves  min_f ||Pi_A (T - f)||^2 + lambda ||f||^2  over f in span(B),
// i.e. fitted = B (B'(Pi_A + lambda I) B)^{-1} B' Pi_A T, where A is the
// conditioning space and B the sieve the unknown function lives in. The first
// stage binds (A, B) = (P, Q) with T = X2; the structural fit binds (Q, P)
// with T = Y.
//
// Everything is done in the orthonormal coordinates of the two projectors:
// with C = U_A' U_B the normal matrix is C'C + lambda I, whose
// eigendecomposition is computed once so that a whole lambda grid costs one
// small solve per point.
class RegularizedCore {
 public:
  RegularizedCore(const Projector& conditioning, const Projector& sieve)
      : conditioning_(&conditioning), sieve_(&sieve) {
    if (conditioning.rows() != sieve.rows())
      fail(Errc::shape_mismatch, "conditioning and sieve bases have different row counts");
    cross_ = conditioning.basis().transpose() * sieve.basis();
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(cross_.transpose() * cross_);
    eigvec_ = eig.eigenvectors();
    eigval_ = eig.eigenvalues().cwiseMax(0.0);
    // Eigenvalues at rounding level belong to the null space of C; their
    // right-hand side is pure rounding noise and is dropped in the solve.
    const double top = eigval_.size() ? eigval_.maxCoeff() : 0.0;
    const double tol = static_cast<double>(eigval_.size()) *
                       std::numeric_limits<double>::epsilon() * std::max(1.0, top);
    for (Index i = 0; i < eigval_.size(); ++i)
      if (eigval_(i) <= tol) eigval_(i) = 0.0;
  }
  // The core keeps references to both projectors.
  RegularizedCore(Projector&&, const Projector&) = delete;
  RegularizedCore(const Projector&, Projector&&) = delete;

  // Coordinates of the target in the conditioning basis, U_A' T.
  MatrixXd target_coordinates(const MatrixXd& target) const {
    return conditioning_->coordinates(target);
  }

  double condition(double lambda) const {
    if (eigval_.size() == 0) return std::numeric_limits<double>::infinity();
    const double lo = eigval_.minCoeff() + lambda;
    const double hi = eigval_.maxCoeff() + lambda;
    return lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
  }

  // trace(M^{-1} C'C) with M = C'C + lambda I.
  double smoother_trace(double lambda) const {
    double t = 0.0;
    for (Index i = 0; i < eigval_.size(); ++i) {
      const double e = eigval_(i);
      if (e + lambda > 0.0) t += e / (e + lambda);
    }
    return t;
  }

  // Reduced sieve coordinates c with fitted = U_B c.
  MatrixXd solve_coordinates(const MatrixXd& target_coords, double lambda,
                             double* condition_out = nullptr) const {
    if (!(lambda >= 0.0) || !std::isfinite(lambda))
      fail(Errc::invalid_argument, "lambda must be finite and >= 0");
    const double cond = condition(lambda);
    if (condition_out) *condition_out = cond;
    if (!(cond <= kSingularCondition))
      fail(Errc::singular_system,
           "regularized normal matrix is numerically singular (condition " +
               std::to_string(cond) + "); increase lambda",
           cond);
    const MatrixXd rhs = eigvec_.transpose() * (cross_.transpose() * target_coords);
    VectorXd inv = (eigval_.array() + lambda).inverse().matrix();
    for (Index i = 0; i < inv.size(); ++i)
      if (eigval_(i) == 0.0) inv(i) = 0.0;
    return eigvec_ * (inv.asDiagonal() * rhs);
  }

  RegularizedSolution solve(const MatrixXd& target, double lambda) const {
    RegularizedSolution s;
    const MatrixXd c = solve_coordinates(target_coordinates(target), lambda, &s.condition);
    s.fitted = sieve_->basis() * c;
    s.coef = sieve_->coefficients(c);
    s.trace = smoother_trace(lambda);
    return s;
  }

  const Projector& sieve() const { return *sieve_; }
  const Projector& conditioning() const { return *conditioning_; }

 private:
  const Projector* conditioning_;
  const Projector* sieve_;
  MatrixXd cross_;
  MatrixXd eigvec_;
  VectorXd eigval_;
};

// Fitted instrument h_n = (Z1', h2n')'.
struct InstrumentFit {
  MatrixXd coef;    // Q columns x p2: maps q^J(z) to h2n(z)
  MatrixXd fitted;  // n x p, H_n = [Z1 H2n]
  double lambda = 0.0;
  DesignMatrix P;
  DesignMatrix Q;
  std::optional<VectorXd> target_weights;
  double condition = 0.0;
  Index control_count = 0;
  Index instrument_count = 0;

  Index p() const { return fitted.cols(); }
  auto instrument_block() const { return fitted.rightCols(fitted.cols() - control_count); }

  // A fit whose instrument is given directly (e.g. h = X, or an oracle).
  static InstrumentFit from_values(MatrixXd h, Index control_count) {
    InstrumentFit f;
    f.fitted = std::move(h);
    f.control_count = control_count;
    return f;
  }
};

namespace detail {

inline MatrixXd first_stage_target(const Dataset& data, const std::optional<VectorXd>& weights) {
  if (!weights) return data.endogenous;
  if (weights->size() != data.n())
    fail(Errc::shape_mismatch, "weights must have one entry per observation");
  if (!(weights->array() > 0.0).all() || !weights->allFinite())
    fail(Errc::invalid_argument, "weights must be strictly positive");
  return weights->asDiagonal() * data.endogenous;
}

inline void check_bases(const Dataset& data, const DesignMatrix& P, const DesignMatrix& Q) {
  if (P.rows() != data.n() || Q.rows() != data.n())
    fail(Errc::shape_mismatch, "basis row count does not match the sample size");
}

inline MatrixXd with_controls(const Dataset& data, const MatrixXd& block) {
  MatrixXd h(data.n(), data.p1() + block.cols());
  h << data.controls, block;
  return h;
}

}  // namespace detail

// H2n = Q (Q'(Pi_P + lambda I) Q)^{-1} Q' Pi_P X2, target X2 (.) w when weights
// are supplied. lambda = 0 is accepted only if the unpenalized system passes
// the condition check.
inline InstrumentFit estimate_instrument(const Dataset& data, const DesignMatrix& P,
                                         const DesignMatrix& Q, double lambda,
                                         std::optional<VectorXd> weights = std::nullopt) {
  detail::check_bases(data, P, Q);
  const MatrixXd target = detail::first_stage_target(data, weights);
  const Projector pp(P.values);
  const Projector pq(Q.values);
  const RegularizedCore core(pp, pq);
  RegularizedSolution s = core.solve(target, lambda);

  InstrumentFit fit;
  fit.coef = std::move(s.coef);
  fit.fitted = detail::with_controls(data, s.fitted);
  fit.lambda = lambda;
  fit.P = P;
  fit.Q = Q;
  fit.target_weights = std::move(weights);
  fit.condition = s.condition;
  fit.control_count = data.p1();
  fit.instrument_count = data.q2();
  return fit;
}

// The same estimator by the textbook route: (i) rescale Q so Q'Q/n = I,
// (ii) least-squares fitted values of Q on P, (iii) ridge regression of X2 on
// those fitted values. Kept as an independent cross-check of
// estimate_instrument.
inline InstrumentFit two_stage_form(const Dataset& data, const DesignMatrix& P,
                                    const DesignMatrix& Q, double lambda,
                                    std::optional<VectorXd> weights = std::nullopt) {
  detail::check_bases(data, P, Q);
  if (!(lambda >= 0.0)) fail(Errc::invalid_argument, "lambda must be >= 0");
  const MatrixXd target = detail::first_stage_target(data, weights);
  const double n = static_cast<double>(data.n());
  const MatrixXd& q = Q.values;
  const MatrixXd& p = P.values;

  const MatrixXd scale = inverse_sqrt_spd(q.transpose() * q / n);
  const MatrixXd q_std = q * scale;

  const Eigen::LDLT<MatrixXd> ptp(p.transpose() * p);
  const MatrixXd q_hat = p * ptp.solve(p.transpose() * q_std);

  MatrixXd gram = q_hat.transpose() * q_hat;
  gram.diagonal().array() += n * lambda;
  const Eigen::LDLT<MatrixXd> ridge(gram);
  if (ridge.info() != Eigen::Success || ridge.rcond() < 1.0 / kSingularCondition)
    fail(Errc::singular_system, "ridge system is numerically singular");
  const MatrixXd slope = ridge.solve(q_hat.transpose() * target);

  InstrumentFit fit;
  fit.coef = scale * slope;
  fit.fitted = detail::with_controls(data, q_std * slope);
  fit.lambda = lambda;
  fit.P = P;
  fit.Q = Q;
  fit.target_weights = std::move(weights);
  fit.condition = 1.0 / ridge.rcond();
  fit.control_count = data.p1();
  fit.instrument_count = data.q2();
  return fit;
}

// h_n at new points. `z_new` is [Z1 | Z2] with the training column layout.
// Spline instruments outside the training range extrapolate linearly; the
// number of such evaluations is added to `extrapolated`.
inline MatrixXd evaluate_instrument(const InstrumentFit& fit, const MatrixXd& z_new,
                                    Index* extrapolated = nullptr) {
  if (fit.Q.cols() == 0) fail(Errc::schema_mismatch, "fit carries no instrument basis");
  if (z_new.cols() != fit.control_count + fit.instrument_count)
    fail(Errc::schema_mismatch, "expected " +
                                    std::to_string(fit.control_count + fit.instrument_count) +
                                    " instrument columns, got " + std::to_string(z_new.cols()));
  const MatrixXd controls = z_new.leftCols(fit.control_count);
  const MatrixXd q = fit.Q.evaluate(controls, z_new.rightCols(fit.instrument_count), extrapolated);
  MatrixXd out(z_new.rows(), fit.p());
  out << controls, q * fit.coef;
  return out;
}

struct FirstStageDiagnostics {
  MatrixXd moment;              // E_n[h X']
  double smallest_singular = 0;
  double discrepancy = 0;       // ||E_n[h X'] - E_n[X X']||_F
  double residual = 0;          // ||X - Pi_P h||_n
};

inline FirstStageDiagnostics first_stage_diagnostics(const InstrumentFit& fit,
                                                     const Dataset& data) {
  const double n = static_cast<double>(data.n());
  const MatrixXd x = data.regressors();
  FirstStageDiagnostics d;
  d.moment = fit.fitted.transpose() * x / n;
  d.smallest_singular = smallest_singular_value(d.moment);
  d.discrepancy = (d.moment - x.transpose() * x / n).norm();
  const MatrixXd proj = fit.P.cols() > 0 ? Projector(fit.P.values).apply(fit.fitted) : fit.fitted;
  d.residual = std::sqrt((x - proj).squaredNorm() / n);
  return d;
}

}  // namespace oliva
