#pragma once

// Generalized cross-validation over tau = {j, c, lambda}.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <thread>
#include <vector>

#include "oliva/dataset.hpp"
#include "oliva/design.hpp"
#include "oliva/first_stage.hpp"
#include "oliva/tsiv.hpp"

namespace oliva {

enum class GcvTarget { tsiv, structural };

inline std::vector<double> log_spaced(double lo, double hi, int count) {
  if (count < 1 || !(lo > 0.0) || !(hi >= lo))
    fail(Errc::invalid_argument, "log_spaced needs 0 < lo <= hi and count >= 1");
  std::vector<double> out;
  if (count == 1) return {lo};
  const double a = std::log10(lo), b = std::log10(hi);
  for (int i = 0; i < count; ++i) out.push_back(std::pow(10.0, a + (b - a) * i / (count - 1)));
  return out;
}

struct GcvGrid {
  std::vector<Index> j_values{4, 5, 6, 7};
  std::vector<double> c_values{1.0, 1.5, 2.0, 2.5, 3.0};
  std::vector<double> lambda_values = log_spaced(1e-8, 1e-1, 10);
  GcvTarget target = GcvTarget::tsiv;

  void validate() const {
    if (j_values.empty() || c_values.empty() || lambda_values.empty())
      fail(Errc::invalid_argument, "GCV grid lists must be nonempty");
    for (double l : lambda_values)
      if (!(l > 0.0) || !std::isfinite(l))
        fail(Errc::invalid_argument, "GCV lambda values must be positive");
    for (Index j : j_values)
      if (j < 1) fail(Errc::invalid_argument, "GCV j values must be >= 1");
    for (double c : c_values)
      if (!(c >= 1.0 && c <= 3.0)) fail(Errc::invalid_argument, "GCV c values must lie in [1, 3]");
  }
};

// Fixed (j, c), search over lambda only.
inline GcvGrid lambda_only_grid(Index j, double c, std::vector<double> lambdas,
                                GcvTarget target = GcvTarget::tsiv) {
  GcvGrid g;
  g.j_values = {j};
  g.c_values = {c};
  g.lambda_values = std::move(lambdas);
  g.target = target;
  return g;
}

struct GcvEntry {
  TuningTriple tau;
  double score = std::numeric_limits<double>::infinity();
  double effective_df = 0.0;  // v_tau = trace(L_tau)
  std::string failure;        // why the score is infinite, if it is
};

struct GcvResult {
  TuningTriple chosen;
  double score = std::numeric_limits<double>::infinity();
  double effective_df = 0.0;
  std::vector<GcvEntry> table;
};

namespace detail {

inline double gcv_formula(const VectorXd& y, const VectorXd& fitted, double df) {
  const double n = static_cast<double>(y.size());
  const double denom = 1.0 - df / n;
  if (!(denom > 0.0)) return std::numeric_limits<double>::infinity();
  return (y - fitted).squaredNorm() / n / (denom * denom);
}

// Bases for one (j, c) pair. For the structural target the roles of j and k
// are switched: P carries j columns per variable and Q carries k.
struct GcvBases {
  DesignMatrix P, Q;
  Projector pp, pq;
};

inline GcvBases gcv_bases(const Dataset& data, Index j, double c, GcvTarget target,
                          const SieveOptions& sieve) {
  const TuningTriple t{j, c, 0.0};
  const Index k = t.k();
  GcvBases b;
  if (target == GcvTarget::tsiv) {
    b.P = regressor_sieve(data, k, sieve);
    b.Q = instrument_sieve(data, j, sieve);
  } else {
    b.P = regressor_sieve(data, j, sieve);
    b.Q = instrument_sieve(data, k, sieve);
  }
  b.pp = Projector(b.P.values);
  b.pq = Projector(b.Q.values);
  return b;
}

// Scores every lambda for fixed bases; failures become +inf entries.
inline std::vector<GcvEntry> gcv_lambda_path(const Dataset& data, const GcvBases& b, Index j,
                                             double c, const std::vector<double>& lambdas,
                                             GcvTarget target,
                                             const std::optional<VectorXd>& weights) {
  std::vector<GcvEntry> out;
  const double n = static_cast<double>(data.n());
  const MatrixXd x = data.regressors();
  const bool tsiv = target == GcvTarget::tsiv;
  const RegularizedCore core = tsiv ? RegularizedCore(b.pp, b.pq) : RegularizedCore(b.pq, b.pp);
  MatrixXd coords;
  try {
    coords = core.target_coordinates(tsiv ? first_stage_target(data, weights) : MatrixXd(data.y));
  } catch (const Error& e) {
    for (double l : lambdas) out.push_back({{j, c, l}, std::numeric_limits<double>::infinity(), 0.0, e.what()});
    return out;
  }
  for (double lambda : lambdas) {
    GcvEntry e;
    e.tau = {j, c, lambda};
    try {
      const MatrixXd red = core.solve_coordinates(coords, lambda);
      VectorXd fitted;
      if (tsiv) {
        const MatrixXd h = with_controls(data, core.sieve().basis() * red);
        const VectorXd beta = fit_tsiv(data, h);
        fitted = x * beta;
        // trace(X (H'X)^{-1} H') = trace((H'X)^{-1} H'X) = p.
        e.effective_df = static_cast<double>(data.p());
      } else {
        fitted = core.sieve().basis() * red.col(0);
        e.effective_df = core.smoother_trace(lambda);
      }
      if (e.effective_df / n >= 1.0) {
        e.failure = "DegenerateTrace: v/n >= 1";
      } else {
        e.score = gcv_formula(data.y, fitted, e.effective_df);
        if (!std::isfinite(e.score)) e.failure = "non-finite score";
      }
    } catch (const Error& err) {
      e.failure = std::string(err.name()) + ": " + err.what();
    }
    out.push_back(std::move(e));
  }
  return out;
}

inline GcvEntry gcv_single(const Dataset& data, const TuningTriple& tau, GcvTarget target,
                           const SieveOptions& sieve, const std::optional<VectorXd>& weights) {
  try {
    const GcvBases b = gcv_bases(data, tau.j, tau.c, target, sieve);
    return gcv_lambda_path(data, b, tau.j, tau.c, {tau.lambda}, target, weights).front();
  } catch (const Error& err) {
    GcvEntry e;
    e.tau = tau;
    e.failure = std::string(err.name()) + ": " + err.what();
    return e;
  }
}

// Strictly better score wins; exact ties go to larger lambda, then smaller j,
// then smaller c.
inline bool gcv_preferred(const GcvEntry& a, const GcvEntry& b) {
  if (a.score != b.score) return a.score < b.score;
  if (a.tau.lambda != b.tau.lambda) return a.tau.lambda > b.tau.lambda;
  if (a.tau.j != b.tau.j) return a.tau.j < b.tau.j;
  return a.tau.c < b.tau.c;
}

}  // namespace detail

// GCV_n(tau) for the TSIV smoother L = X (H'X)^{-1} H'. Infinite when the
// pipeline fails at tau.
inline double gcv_score_tsiv(const Dataset& data, const TuningTriple& tau,
                             const SieveOptions& sieve = {},
                             const std::optional<VectorXd>& weights = std::nullopt) {
  return detail::gcv_single(data, tau, GcvTarget::tsiv, sieve, weights).score;
}

// GCV_n(tau) for the structural smoother L = P B^{-1} P' Pi_Q.
inline double gcv_score_structural(const Dataset& data, const TuningTriple& tau,
                                   const SieveOptions& sieve = {}) {
  return detail::gcv_single(data, tau, GcvTarget::structural, sieve, std::nullopt).score;
}

// Exhaustive grid search. (j, c) pairs are spread over `threads` workers; the
// table order and the choice do not depend on the worker count.
inline GcvResult select(const Dataset& data, const GcvGrid& grid, const SieveOptions& sieve = {},
                        const std::optional<VectorXd>& weights = std::nullopt, int threads = 1) {
  grid.validate();
  struct Pair {
    Index j;
    double c;
  };
  std::vector<Pair> pairs;
  for (Index j : grid.j_values)
    for (double c : grid.c_values) pairs.push_back({j, c});

  std::vector<std::vector<GcvEntry>> paths(pairs.size());
  auto work = [&](std::size_t i) {
    const auto [j, c] = pairs[i];
    try {
      const detail::GcvBases b = detail::gcv_bases(data, j, c, grid.target, sieve);
      paths[i] = detail::gcv_lambda_path(data, b, j, c, grid.lambda_values, grid.target, weights);
    } catch (const Error& err) {
      for (double l : grid.lambda_values)
        paths[i].push_back({{j, c, l}, std::numeric_limits<double>::infinity(), 0.0,
                            std::string(err.name()) + ": " + err.what()});
    }
  };
  const auto workers = static_cast<std::size_t>(std::max(1, threads));
  if (workers == 1 || pairs.size() == 1) {
    for (std::size_t i = 0; i < pairs.size(); ++i) work(i);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < std::min(workers, pairs.size()); ++w)
      pool.emplace_back([&, w] {
        for (std::size_t i = w; i < pairs.size(); i += workers) work(i);
      });
    for (auto& t : pool) t.join();
  }

  GcvResult r;
  const GcvEntry* best = nullptr;
  for (auto& path : paths)
    for (auto& e : path) r.table.push_back(std::move(e));
  for (const auto& e : r.table)
    if (std::isfinite(e.score) && (!best || detail::gcv_preferred(e, *best))) best = &e;
  if (!best) {
    std::string reason = r.table.empty() ? "empty grid" : r.table.front().failure;
    fail(Errc::all_scores_infinite, "no tuning point produced a valid fit (" + reason +
                                        "); try a wider lambda grid");
  }
  r.chosen = best->tau;
  r.score = best->score;
  r.effective_df = best->effective_df;
  return r;
}

}  // namespace oliva
