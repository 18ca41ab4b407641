#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>

#include "oliva/dataset.hpp"
#include "oliva/design.hpp"

namespace testing_util {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

inline MatrixXd gaussian(Index rows, Index cols, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd;
  MatrixXd m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = nd(gen);
  return m;
}

inline MatrixXd uniform(Index rows, Index cols, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> ud;
  MatrixXd m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = ud(gen);
  return m;
}

// A (A'A)^{-1} A' formed explicitly.
inline MatrixXd dense_projection(const MatrixXd& a) {
  return a * (a.transpose() * a).inverse() * a.transpose();
}

// Small endogenous design: D ~ N(0,1), X = 0.8 D + 0.6 e, Y = X + X^2/2 + u.
inline oliva::Dataset toy_dataset(Index n, std::uint64_t seed, double rho = 0.5) {
  const MatrixXd e = gaussian(n, 3, seed);
  VectorXd d = e.col(0);
  VectorXd v = e.col(1);
  VectorXd x = 0.8 * d + 0.6 * v;
  VectorXd y = x + 0.5 * x.array().square().matrix() + rho * v + e.col(2);
  return oliva::make_dataset(std::move(y), std::move(x), std::move(d));
}

}  // namespace testing_util
