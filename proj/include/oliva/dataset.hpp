#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "oliva/error.hpp"

namespace oliva {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

// One sample split by role. Controls carry the intercept; they enter both the
// regressor vector X = (X1', X2')' and the instrument vector Z = (X1', Z2')'.
struct Dataset {
  VectorXd y;
  MatrixXd controls;     // n x p1, exogenous, includes an intercept column
  MatrixXd endogenous;   // n x p2
  MatrixXd instruments;  // n x q2, excluded instruments

  std::string outcome_name = "y";
  std::vector<std::string> control_names;
  std::vector<std::string> endogenous_names;
  std::vector<std::string> instrument_names;

  Index n() const { return y.size(); }
  Index p1() const { return controls.cols(); }
  Index p2() const { return endogenous.cols(); }
  Index p() const { return p1() + p2(); }
  Index q2() const { return instruments.cols(); }

  // n x p regressor matrix [X1 X2].
  MatrixXd regressors() const {
    MatrixXd x(n(), p());
    x << controls, endogenous;
    return x;
  }

  std::vector<std::string> coefficient_names() const {
    std::vector<std::string> names = control_names;
    names.insert(names.end(), endogenous_names.begin(), endogenous_names.end());
    return names;
  }

  void validate() const {
    const Index rows = n();
    if (rows == 0) fail(Errc::insufficient_data, "dataset has no rows");
    if (controls.rows() != rows || endogenous.rows() != rows ||
        instruments.rows() != rows)
      fail(Errc::shape_mismatch, "dataset blocks have different row counts");
    if (p2() < 1) fail(Errc::shape_mismatch, "no endogenous regressor");
    if (q2() < 1) fail(Errc::shape_mismatch, "no excluded instrument");
    if (p1() < 1) fail(Errc::shape_mismatch, "controls must include an intercept");
    if (!y.allFinite() || !controls.allFinite() || !endogenous.allFinite() ||
        !instruments.allFinite())
      fail(Errc::degenerate_input, "dataset contains NaN or Inf");
  }
};

// Intercept-only controls, the common case in simulations.
inline Dataset make_dataset(VectorXd y, MatrixXd endogenous,
                            MatrixXd instruments) {
  Dataset d;
  const Index n = y.size();
  d.y = std::move(y);
  d.controls = MatrixXd::Ones(n, 1);
  d.endogenous = std::move(endogenous);
  d.instruments = std::move(instruments);
  d.control_names = {"(intercept)"};
  for (Index j = 0; j < d.endogenous.cols(); ++j)
    d.endogenous_names.push_back("x" + std::to_string(j + 1));
  for (Index j = 0; j < d.instruments.cols(); ++j)
    d.instrument_names.push_back("z" + std::to_string(j + 1));
  return d;
}

}  // namespace oliva
