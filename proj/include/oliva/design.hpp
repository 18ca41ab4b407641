#pragma once

// Sieve design matrices: B-spline, indicator and linear blocks, their
// assembly next to the exogenous controls, and column-space projectors.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "oliva/dataset.hpp"
#include "oliva/error.hpp"
#include "oliva/numeric.hpp"

namespace oliva {

struct BsplineKind {
  int degree = 3;
  int interior_knots = 0;
};

struct IndicatorKind {
  std::vector<double> levels;  // sorted, distinct; the first is dropped
};

struct LinearKind {};

struct BasisSpec {
  std::variant<BsplineKind, IndicatorKind, LinearKind> kind;
  Index column_count = 0;
};

namespace detail {

// All B-spline basis functions of `degree` on knot vector `t` at u, via the
// triangular (de Boor) scheme on the span containing u. Points at or beyond
// the last knot use the last non-empty span, i.e. the left limit.
inline std::vector<double> bspline_values(std::span<const double> t, int degree,
                                          double u) {
  const auto len = static_cast<std::ptrdiff_t>(t.size());
  const std::ptrdiff_t count = len - degree - 1;
  std::vector<double> out(static_cast<std::size_t>(std::max<std::ptrdiff_t>(count, 0)), 0.0);
  if (count <= 0) return out;

  std::ptrdiff_t s = std::upper_bound(t.begin(), t.end(), u) - t.begin() - 1;
  s = std::clamp<std::ptrdiff_t>(s, degree, count - 1);
  while (s > degree && !(t[s] < t[s + 1])) --s;

  std::vector<double> n(degree + 1, 0.0), left(degree + 1), right(degree + 1);
  n[0] = 1.0;
  for (int j = 1; j <= degree; ++j) {
    left[j] = u - t[s + 1 - j];
    right[j] = t[s + j] - u;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      const double denom = right[r + 1] + left[j - r];
      const double temp = denom != 0.0 ? n[r] / denom : 0.0;
      n[r] = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    n[j] = saved;
  }
  for (int r = 0; r <= degree; ++r) out[s - degree + r] = n[r];
  return out;
}

// First derivatives of the degree-`degree` basis at u.
inline std::vector<double> bspline_derivatives(std::span<const double> t,
                                               int degree, double u) {
  const std::size_t count = t.size() - degree - 1;
  std::vector<double> d(count, 0.0);
  if (degree == 0) return d;
  const auto lower = bspline_values(t, degree - 1, u);  // count + 1 entries
  for (std::size_t i = 0; i < count; ++i) {
    const double a = t[i + degree] - t[i];
    const double b = t[i + degree + 1] - t[i + 1];
    if (a > 0.0) d[i] += degree * lower[i] / a;
    if (b > 0.0) d[i] -= degree * lower[i + 1] / b;
  }
  return d;
}

}  // namespace detail

// A basis fitted to one training variable. Holds whatever is needed to
// evaluate the same columns on new data (knots, range map, levels).
class BasisBlock {
 public:
  static BasisBlock bspline(const VectorXd& x, int degree, int interior_knots,
                            bool drop_first = true, Index source = 0) {
    if (degree < 1) fail(Errc::invalid_argument, "B-spline degree must be >= 1");
    if (interior_knots < 0)
      fail(Errc::invalid_argument, "interior knot count must be >= 0");
    if (x.size() <= degree + interior_knots + 1)
      fail(Errc::insufficient_data,
           "too few observations for a B-spline of degree " +
               std::to_string(degree) + " with " +
               std::to_string(interior_knots) + " interior knots");
    if (!x.allFinite()) fail(Errc::degenerate_input, "non-finite spline input");
    const double lo = x.minCoeff();
    const double hi = x.maxCoeff();
    if (!(hi > lo)) fail(Errc::degenerate_input, "spline input is constant");

    BasisBlock b;
    b.source_ = source;
    b.degree_ = degree;
    b.lower_ = lo;
    b.upper_ = hi;
    b.drop_first_ = drop_first;

    std::vector<double> u(static_cast<std::size_t>(x.size()));
    for (Index i = 0; i < x.size(); ++i) u[i] = (x(i) - lo) / (hi - lo);
    b.knots_.assign(degree + 1, 0.0);
    for (int k = 1; k <= interior_knots; ++k)
      b.knots_.push_back(sample_quantile(u, static_cast<double>(k) / (interior_knots + 1)));
    b.knots_.insert(b.knots_.end(), degree + 1, 1.0);

    b.spec_.kind = BsplineKind{degree, interior_knots};
    b.spec_.column_count = degree + interior_knots + (drop_first ? 0 : 1);
    return b;
  }

  static BasisBlock indicator(const VectorXd& x, Index source = 0) {
    std::vector<double> levels(x.data(), x.data() + x.size());
    std::sort(levels.begin(), levels.end());
    levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
    if (levels.size() < 2) fail(Errc::degenerate_input, "indicator input is constant");
    BasisBlock b;
    b.source_ = source;
    b.spec_.column_count = static_cast<Index>(levels.size()) - 1;
    b.spec_.kind = IndicatorKind{std::move(levels)};
    return b;
  }

  static BasisBlock linear(Index source = 0) {
    BasisBlock b;
    b.source_ = source;
    b.spec_.kind = LinearKind{};
    b.spec_.column_count = 1;
    return b;
  }

  const BasisSpec& spec() const { return spec_; }
  Index columns() const { return spec_.column_count; }
  Index source() const { return source_; }
  void set_source(Index s) { source_ = s; }
  bool is_spline() const { return std::holds_alternative<BsplineKind>(spec_.kind); }
  const std::vector<double>& knots() const { return knots_; }
  double lower() const { return lower_; }
  double upper() const { return upper_; }

  double to_unit(double x) const { return (x - lower_) / (upper_ - lower_); }

  // Evaluates the block at new points. Spline points outside the training
  // range are extended linearly from the boundary and counted in
  // `extrapolated`.
  MatrixXd evaluate(const VectorXd& x, Index* extrapolated = nullptr) const {
    const Index m = x.size();
    MatrixXd out(m, columns());
    if (const auto* ind = std::get_if<IndicatorKind>(&spec_.kind)) {
      out.setZero();
      for (Index i = 0; i < m; ++i) {
        const auto it = std::lower_bound(ind->levels.begin(), ind->levels.end(), x(i));
        if (it == ind->levels.end() || *it != x(i))
          fail(Errc::schema_mismatch, "value " + std::to_string(x(i)) +
                                          " is not a training level");
        const auto k = it - ind->levels.begin();
        if (k > 0) out(i, k - 1) = 1.0;
      }
      return out;
    }
    if (std::holds_alternative<LinearKind>(spec_.kind)) {
      out.col(0) = x;
      return out;
    }
    const Index offset = drop_first_ ? 1 : 0;
    for (Index i = 0; i < m; ++i) {
      const double u = to_unit(x(i));
      std::vector<double> v;
      if (u < 0.0 || u > 1.0) {
        const double edge = u < 0.0 ? 0.0 : 1.0;
        v = detail::bspline_values(knots_, degree_, edge);
        const auto d = detail::bspline_derivatives(knots_, degree_, edge);
        for (std::size_t k = 0; k < v.size(); ++k) v[k] += d[k] * (u - edge);
        if (extrapolated) ++*extrapolated;
      } else {
        v = detail::bspline_values(knots_, degree_, u);
      }
      for (Index k = 0; k < columns(); ++k) out(i, k) = v[k + offset];
    }
    return out;
  }

 private:
  BasisSpec spec_;
  Index source_ = 0;
  int degree_ = 0;
  bool drop_first_ = true;
  double lower_ = 0.0;
  double upper_ = 1.0;
  std::vector<double> knots_;
};

// Evaluated sieve design: optional leading control columns followed by one or
// more basis blocks (the nonparametric part). `standardizer` maps the raw
// nonparametric columns to the stored ones; empty means identity.
struct DesignMatrix {
  MatrixXd values;
  std::vector<BasisBlock> blocks;
  Index control_count = 0;
  MatrixXd standardizer;

  Index rows() const { return values.rows(); }
  Index cols() const { return values.cols(); }
  bool includes_controls() const { return control_count > 0; }
  Index block_columns() const { return cols() - control_count; }
  bool standardized() const { return standardizer.size() > 0; }

  auto controls() const { return values.leftCols(control_count); }
  auto nonparametric() const { return values.rightCols(block_columns()); }

  // Raw (unstandardized) nonparametric columns on new variables; column
  // `b.source()` of `vars` feeds block b.
  MatrixXd evaluate_blocks(const MatrixXd& vars, Index* extrapolated = nullptr) const {
    MatrixXd raw(vars.rows(), block_columns());
    Index at = 0;
    for (const auto& b : blocks) {
      if (b.source() >= vars.cols())
        fail(Errc::schema_mismatch, "missing variable column " + std::to_string(b.source()));
      raw.middleCols(at, b.columns()) = b.evaluate(vars.col(b.source()), extrapolated);
      at += b.columns();
    }
    if (standardized()) raw = raw * standardizer;
    return raw;
  }

  // Same design evaluated at new data: [controls_new | blocks(vars_new)].
  MatrixXd evaluate(const MatrixXd& controls_new, const MatrixXd& vars_new,
                    Index* extrapolated = nullptr) const {
    if (controls_new.cols() != control_count)
      fail(Errc::schema_mismatch, "expected " + std::to_string(control_count) +
                                      " control columns, got " +
                                      std::to_string(controls_new.cols()));
    if (controls_new.rows() != vars_new.rows())
      fail(Errc::shape_mismatch, "control and variable rows differ");
    MatrixXd out(vars_new.rows(), cols());
    out.leftCols(control_count) = controls_new;
    out.rightCols(block_columns()) = evaluate_blocks(vars_new, extrapolated);
    return out;
  }
};

inline DesignMatrix design_from_block(BasisBlock block, const VectorXd& x) {
  DesignMatrix d;
  d.values = block.evaluate(x);
  d.blocks.push_back(std::move(block));
  return d;
}

// B-spline columns on the affinely [0,1]-mapped regressor with interior knots
// at its empirical quantiles. With drop_first the leading basis function is
// removed (the intercept lives in the controls), leaving degree +
// interior_knots columns.
inline DesignMatrix build_bspline(const VectorXd& x, int degree, int interior_knots,
                                  bool drop_first = true, Index source = 0) {
  return design_from_block(BasisBlock::bspline(x, degree, interior_knots, drop_first, source), x);
}

inline DesignMatrix build_indicator(const VectorXd& x, Index source = 0) {
  return design_from_block(BasisBlock::indicator(x, source), x);
}

inline DesignMatrix build_linear(const VectorXd& x, Index source = 0) {
  return design_from_block(BasisBlock::linear(source), x);
}

// Column-wise concatenation of control-free designs (additive sieves).
inline DesignMatrix hstack(std::span<const DesignMatrix> parts) {
  DesignMatrix out;
  if (parts.empty()) return out;
  Index rows = parts.front().rows();
  Index cols = 0;
  for (const auto& p : parts) {
    if (p.rows() != rows) fail(Errc::shape_mismatch, "hstack: row counts differ");
    if (p.includes_controls() || p.standardized())
      fail(Errc::invalid_argument, "hstack expects raw, control-free blocks");
    cols += p.cols();
  }
  out.values.resize(rows, cols);
  Index at = 0;
  for (const auto& p : parts) {
    out.values.middleCols(at, p.cols()) = p.values;
    at += p.cols();
    out.blocks.insert(out.blocks.end(), p.blocks.begin(), p.blocks.end());
  }
  return out;
}

inline bool has_intercept(const MatrixXd& controls) {
  for (Index k = 0; k < controls.cols(); ++k) {
    const double v = controls(0, k);
    if (v != 0.0 && (controls.col(k).array() == v).all()) return true;
  }
  return false;
}

// [controls | block], recording the block boundary.
inline DesignMatrix assemble(const MatrixXd& controls, const DesignMatrix& block) {
  if (controls.rows() != block.rows())
    fail(Errc::shape_mismatch, "assemble: controls have " + std::to_string(controls.rows()) +
                                   " rows, block has " + std::to_string(block.rows()));
  if (block.includes_controls())
    fail(Errc::shape_mismatch, "assemble: block already contains controls");
  if (!has_intercept(controls))
    fail(Errc::shape_mismatch, "assemble: controls lack an intercept column");
  DesignMatrix out;
  out.values.resize(controls.rows(), controls.cols() + block.cols());
  out.values << controls, block.values;
  out.blocks = block.blocks;
  out.control_count = controls.cols();
  out.standardizer = block.standardizer;
  return out;
}

// Symmetric inverse square root of a positive definite matrix. Throws
// RankDeficient when the smallest eigenvalue is below 1e-12 of the largest.
inline MatrixXd inverse_sqrt_spd(const MatrixXd& s) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(s);
  const VectorXd& ev = eig.eigenvalues();
  const double top = ev.maxCoeff();
  if (!(top > 0.0) || ev.minCoeff() < 1e-12 * top)
    fail(Errc::rank_deficient, "second-moment matrix is singular", ev.minCoeff());
  return eig.eigenvectors() * ev.cwiseSqrt().cwiseInverse().asDiagonal() *
         eig.eigenvectors().transpose();
}

// Rescales the nonparametric block so its sample second-moment matrix is the
// identity. The transform is kept for out-of-sample evaluation.
inline DesignMatrix standardize(const DesignMatrix& d) {
  DesignMatrix out = d;
  if (d.block_columns() == 0) return out;
  const MatrixXd block = d.nonparametric();
  const MatrixXd m = inverse_sqrt_spd(block.transpose() * block / static_cast<double>(d.rows()));
  out.values.rightCols(d.block_columns()) = block * m;
  out.standardizer = d.standardized() ? MatrixXd(d.standardizer * m) : m;
  return out;
}

// Orthogonal projection onto the column space of A, held as a thin
// orthonormal basis from a column-pivoted QR. The n x n matrix is never formed.
class Projector {
 public:
  Projector() = default;

  explicit Projector(const MatrixXd& a, double rel_tol = 1e-12)
      : rows_(a.rows()), cols_(a.cols()) {
    Eigen::ColPivHouseholderQR<MatrixXd> qr(a);
    qr.setThreshold(rel_tol);
    rank_ = qr.rank();
    basis_ = qr.householderQ() * MatrixXd::Identity(rows_, rank_);
    r11_ = qr.matrixR().topLeftCorner(rank_, rank_).triangularView<Eigen::Upper>();
    perm_ = qr.colsPermutation();
  }

  Index rows() const { return rows_; }
  Index cols() const { return cols_; }
  Index rank() const { return rank_; }
  bool full_rank() const { return rank_ == cols_; }
  const MatrixXd& basis() const { return basis_; }

  MatrixXd coordinates(const MatrixXd& v) const {
    check(v);
    return basis_.transpose() * v;
  }

  MatrixXd apply(const MatrixXd& v) const {
    check(v);
    return basis_ * (basis_.transpose() * v);
  }

  // Coefficients b on the columns of A with A b = basis() * c. Columns dropped
  // by the rank decision get zero.
  MatrixXd coefficients(const MatrixXd& c) const {
    MatrixXd top = r11_.triangularView<Eigen::Upper>().solve(c);
    MatrixXd padded = MatrixXd::Zero(cols_, c.cols());
    padded.topRows(rank_) = top;
    return perm_ * padded;
  }

 private:
  void check(const MatrixXd& v) const {
    if (v.rows() != rows_)
      fail(Errc::shape_mismatch, "projector has " + std::to_string(rows_) +
                                     " rows, argument has " + std::to_string(v.rows()));
  }

  Index rows_ = 0;
  Index cols_ = 0;
  Index rank_ = 0;
  MatrixXd basis_;
  MatrixXd r11_;
  Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic> perm_;
};

inline MatrixXd project(const Projector& pi, const MatrixXd& v) { return pi.apply(v); }

// How the nonparametric part of P or Q is built from a dataset.
struct SieveOptions {
  int degree = 3;
  std::vector<bool> discrete_endogenous;   // indicator basis where true
  std::vector<bool> discrete_instruments;
  bool standardize = true;
};

namespace detail {

inline DesignMatrix additive_sieve(const MatrixXd& controls, const MatrixXd& vars,
                                   Index per_variable, const SieveOptions& opt,
                                   const std::vector<bool>& discrete) {
  if (per_variable < 1) fail(Errc::invalid_argument, "sieve block size must be >= 1");
  std::vector<DesignMatrix> parts;
  for (Index c = 0; c < vars.cols(); ++c) {
    const bool is_discrete = c < static_cast<Index>(discrete.size()) && discrete[c];
    if (is_discrete) {
      parts.push_back(build_indicator(vars.col(c), c));
    } else {
      // Blocks narrower than the degree fall back to a lower-degree spline.
      const int degree = static_cast<int>(std::min<Index>(opt.degree, per_variable));
      parts.push_back(build_bspline(vars.col(c), degree,
                                    static_cast<int>(per_variable) - degree, true, c));
    }
  }
  DesignMatrix d = assemble(controls, hstack(parts));
  return opt.standardize ? standardize(d) : d;
}

}  // namespace detail

// P = [X1 | p^k(X2)] with one k-column block per endogenous variable.
inline DesignMatrix regressor_sieve(const Dataset& data, Index k, const SieveOptions& opt = {}) {
  return detail::additive_sieve(data.controls, data.endogenous, k, opt, opt.discrete_endogenous);
}

// Q = [Z1 | q^j(Z2)] with one j-column block per excluded instrument.
inline DesignMatrix instrument_sieve(const Dataset& data, Index j, const SieveOptions& opt = {}) {
  return detail::additive_sieve(data.controls, data.instruments, j, opt, opt.discrete_instruments);
}

}  // namespace oliva
