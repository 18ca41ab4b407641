#pragma once

// Monte Carlo designs and the replication harness comparing OLS, linear IV
// and TSIV, with confidence-interval coverage and both Hausman tests.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <string>
#include <thread>
#include <vector>

#include "oliva/dataset.hpp"
#include "oliva/design.hpp"
#include "oliva/exogeneity.hpp"
#include "oliva/first_stage.hpp"
#include "oliva/numeric.hpp"
#include "oliva/rng.hpp"
#include "oliva/selection.hpp"
#include "oliva/structural.hpp"
#include "oliva/tsiv.hpp"

namespace oliva {

// Probabilists' Hermite polynomials He_0..He_3.
inline double hermite(int j, double x) {
  switch (j) {
    case 0: return 1.0;
    case 1: return x;
    case 2: return x * x - 1.0;
    case 3: return x * x * x - 3.0 * x;
    default:
      fail(Errc::unsupported_degree, "Hermite degree " + std::to_string(j) + " is not supported");
  }
}

// The instrument is Z = s(D) with s the identity (1), the cube (2) or the
// logistic function (3); the structural function is sum_{j<=dgp} He_j(X).
inline double dgp_link(int dgp, double d) {
  switch (dgp) {
    case 1: return d;
    case 2: return d * d * d;
    case 3: return 1.0 / (1.0 + std::exp(-d));
    default: fail(Errc::invalid_dgp, "dgp must be 1, 2 or 3");
  }
}

inline double dgp_link_inverse(int dgp, double z) {
  switch (dgp) {
    case 1: return z;
    case 2: return std::cbrt(z);
    case 3: return std::log(z) - std::log1p(-z);
    default: fail(Errc::invalid_dgp, "dgp must be 1, 2 or 3");
  }
}

struct DgpConfig {
  int dgp = 1;
  double rho = 0.0;    // E[eps | X] = rho X
  double gamma = 0.8;  // corr(X, D)
  Index n = 1000;
  std::uint64_t seed = 0;

  double rho_epsilon() const { return rho / (1.0 - gamma * gamma); }

  void validate() const {
    if (dgp < 1 || dgp > 3) fail(Errc::invalid_dgp, "dgp must be 1, 2 or 3", dgp);
    if (!(std::abs(gamma) < 1.0) || gamma == 0.0)
      fail(Errc::invalid_argument, "gamma must lie in (-1, 1) and be nonzero");
    if (!(rho >= 0.0 && rho < 1.0)) fail(Errc::invalid_argument, "rho must lie in [0, 1)");
    if (n < 20) fail(Errc::invalid_argument, "n must be at least 20");
  }
};

struct DgpDraw {
  Dataset data;
  VectorXd latent;      // D
  VectorXd structural;  // g(X)
  VectorXd error;       // eps
  VectorXd v;           // X - E[X | Z]
};

inline DgpDraw draw_dgp(const DgpConfig& cfg) {
  cfg.validate();
  const Index n = cfg.n;
  const CounterRng rng(cfg.seed);
  const double g = cfg.gamma;
  const double tail = std::sqrt(1.0 - g * g);
  const double rho_eps = cfg.rho_epsilon();

  DgpDraw out;
  VectorXd x(n), z(n), y(n);
  out.latent.resize(n);
  out.structural.resize(n);
  out.error.resize(n);
  out.v.resize(n);
  for (Index i = 0; i < n; ++i) {
    const auto a = rng.normals(static_cast<std::uint64_t>(i), 0u);
    const auto b = rng.normals(static_cast<std::uint64_t>(i), 1u);
    const double xi = a[0];
    const double di = g * a[0] + tail * a[1];
    const double vi = xi - g * di;
    const double eps = rho_eps * vi + b[0];
    double gx = 0.0;
    for (int j = 1; j <= cfg.dgp; ++j) gx += hermite(j, xi);
    x(i) = xi;
    z(i) = dgp_link(cfg.dgp, di);
    y(i) = gx + eps;
    out.latent(i) = di;
    out.structural(i) = gx;
    out.error(i) = eps;
    out.v(i) = vi;
  }
  out.data = make_dataset(std::move(y), std::move(x), std::move(z));
  return out;
}

inline Dataset gen_dgp(const DgpConfig& cfg) { return draw_dgp(cfg).data; }

struct EstimatorSet {
  bool ols = true;
  bool iv = true;
  bool tsiv = true;
  bool hausman = true;
};

struct SimulationOptions {
  // Q = [1 | 5 spline columns] (J = 6), P = [1 | 11 spline columns] (K = 12).
  Index j = 5;
  double c = 2.2;
  std::vector<double> lambdas = log_spaced(1e-8, 1e-1, 10);
  double lambda_multiplier = 1.0;
  double level = 0.95;       // confidence level for coverage
  double test_level = 0.05;  // Hausman nominal size
  int degree = 3;
  EstimatorSet estimators;
  int threads = 1;
};

inline constexpr double kTrueSlope = 1.0;

struct ReplicationResult {
  bool ok = false;
  std::string failure;
  double err_ols = 0.0, err_iv = 0.0, err_tsiv = 0.0;
  bool covered = false;
  double t_standard = 0.0, t_robust = 0.0;
  double p_standard = 1.0, p_robust = 1.0;
  double lambda = 0.0;
};

inline ReplicationResult run_replication(const DgpConfig& cfg, const SimulationOptions& opt) {
  ReplicationResult r;
  try {
    const Dataset data = gen_dgp(cfg);
    const EstimatorSet& est = opt.estimators;
    if (est.ols) r.err_ols = fit_tsiv(data, data.regressors())(1) - kTrueSlope;
    if (est.iv) {
      MatrixXd z(data.n(), 2);
      z << data.controls, data.instruments;
      r.err_iv = fit_tsiv(data, z)(1) - kTrueSlope;
    }
    if (est.hausman) {
      const HausmanResult s = standard_hausman(data);
      r.t_standard = s.t_stat;
      r.p_standard = s.p_value;
    }
    if (est.tsiv || est.hausman) {
      SieveOptions sieve;
      sieve.degree = opt.degree;
      const GcvResult sel = select(data, lambda_only_grid(opt.j, opt.c, opt.lambdas), sieve);
      const TuningTriple tau{opt.j, opt.c, sel.chosen.lambda * opt.lambda_multiplier};
      r.lambda = tau.lambda;
      const Index k = tau.k();
      const InstrumentFit h = estimate_instrument(data, regressor_sieve(data, k, sieve),
                                                  instrument_sieve(data, opt.j, sieve), tau.lambda);
      if (est.tsiv) {
        // Structural fit with the roles of J and K switched, same lambda.
        const StructuralFit g = estimate_g(data, regressor_sieve(data, opt.j, sieve),
                                           instrument_sieve(data, k, sieve), tau.lambda);
        const TsivFit f = make_tsiv_fit(data, h, g, opt.level, tau);
        r.err_tsiv = f.beta(1) - kTrueSlope;
        r.covered = f.ci(1, 0) <= kTrueSlope && kTrueSlope <= f.ci(1, 1);
      }
      if (est.hausman) {
        const HausmanResult rb = robust_hausman(data, h);
        r.t_robust = rb.t_stat;
        r.p_robust = rb.p_value;
      }
    }
    r.ok = true;
  } catch (const Error& e) {
    r.ok = false;
    r.failure = std::string(e.name()) + ": " + e.what();
  }
  return r;
}

struct EstimatorSummary {
  double bias = 0.0;
  double mse = 0.0;
  double se_bias = 0.0;
  double se_mse = 0.0;
};

struct RateSummary {
  double rate = 0.0;
  double se = 0.0;
};

struct McSummary {
  DgpConfig cfg;
  std::uint64_t base_seed = 0;
  Index replications = 0;
  Index failures = 0;
  bool valid = true;  // at most 1% failed replications
  EstimatorSummary ols, iv, tsiv;
  RateSummary coverage;
  RateSummary reject_standard, reject_robust;
  std::vector<double> t_standard, t_robust;  // per successful replication
  std::vector<std::string> failure_reasons;
};

namespace detail {

inline EstimatorSummary summarize_errors(const std::vector<double>& err) {
  EstimatorSummary s;
  const auto r = static_cast<double>(err.size());
  if (err.empty()) return s;
  CompensatedSum sum, sq;
  for (double e : err) {
    sum.add(e);
    sq.add(e * e);
  }
  s.bias = sum.value() / r;
  s.mse = sq.value() / r;
  if (err.size() > 1) {
    CompensatedSum dev, dev_sq;
    for (double e : err) {
      dev.add((e - s.bias) * (e - s.bias));
      dev_sq.add((e * e - s.mse) * (e * e - s.mse));
    }
    s.se_bias = std::sqrt(dev.value() / (r - 1.0) / r);
    s.se_mse = std::sqrt(dev_sq.value() / (r - 1.0) / r);
  }
  return s;
}

inline RateSummary summarize_rate(Index hits, Index total) {
  RateSummary s;
  if (total == 0) return s;
  s.rate = static_cast<double>(hits) / static_cast<double>(total);
  s.se = std::sqrt(s.rate * (1.0 - s.rate) / static_cast<double>(total));
  return s;
}

}  // namespace detail

// Runs `replications` draws of `cfg`; replication r uses
// derive_seed(base_seed, r, dgp). Results are gathered by position and
// aggregated in replication order, so the summary does not depend on the
// number of worker threads.
inline McSummary run_cell(DgpConfig cfg, Index replications, const SimulationOptions& opt,
                          std::uint64_t base_seed) {
  cfg.validate();
  if (replications < 1) fail(Errc::invalid_argument, "replications must be >= 1");
  std::vector<ReplicationResult> reps(static_cast<std::size_t>(replications));
  auto work = [&](std::size_t i) {
    DgpConfig c = cfg;
    c.seed = derive_seed(base_seed, i, static_cast<std::uint64_t>(cfg.dgp));
    reps[i] = run_replication(c, opt);
  };
  const auto workers = static_cast<std::size_t>(std::max(1, opt.threads));
  if (workers == 1) {
    for (std::size_t i = 0; i < reps.size(); ++i) work(i);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < std::min(workers, reps.size()); ++w)
      pool.emplace_back([&, w] {
        for (std::size_t i = w; i < reps.size(); i += workers) work(i);
      });
    for (auto& t : pool) t.join();
  }

  McSummary s;
  s.cfg = cfg;
  s.base_seed = base_seed;
  s.replications = replications;
  std::vector<double> e_ols, e_iv, e_tsiv;
  Index covered = 0, rej_s = 0, rej_r = 0, ok = 0;
  for (const auto& r : reps) {
    if (!r.ok) {
      ++s.failures;
      s.failure_reasons.push_back(r.failure);
      continue;
    }
    ++ok;
    e_ols.push_back(r.err_ols);
    e_iv.push_back(r.err_iv);
    e_tsiv.push_back(r.err_tsiv);
    covered += r.covered ? 1 : 0;
    rej_s += r.p_standard < opt.test_level ? 1 : 0;
    rej_r += r.p_robust < opt.test_level ? 1 : 0;
    s.t_standard.push_back(r.t_standard);
    s.t_robust.push_back(r.t_robust);
  }
  s.valid = static_cast<double>(s.failures) <= 0.01 * static_cast<double>(replications);
  s.ols = detail::summarize_errors(e_ols);
  s.iv = detail::summarize_errors(e_iv);
  s.tsiv = detail::summarize_errors(e_tsiv);
  s.coverage = detail::summarize_rate(covered, ok);
  s.reject_standard = detail::summarize_rate(rej_s, ok);
  s.reject_robust = detail::summarize_rate(rej_r, ok);
  return s;
}

// Share of alternative statistics beyond the empirical (1 - level) quantile of
// the null statistics. Pass |t| (or Wald) values for two-sided tests.
inline double size_corrected_power(const std::vector<double>& null_stats,
                                   const std::vector<double>& alt_stats, double level) {
  if (null_stats.empty() || alt_stats.empty())
    fail(Errc::insufficient_samples, "size-corrected power needs null and alternative draws");
  if (!(level > 0.0 && level < 1.0)) fail(Errc::invalid_level, "level must lie in (0, 1)", level);
  const double crit = sample_quantile(null_stats, 1.0 - level);
  Index above = 0;
  for (double t : alt_stats) above += t > crit ? 1 : 0;
  return static_cast<double>(above) / static_cast<double>(alt_stats.size());
}

inline std::vector<double> absolute(std::vector<double> v) {
  for (double& x : v) x = std::abs(x);
  return v;
}

}  // namespace oliva
