#pragma once

// End-to-end TSIV estimation: GCV choice of tau, first stage, beta, the
// structural fit and the sandwich covariance.

#include <optional>

#include "oliva/dataset.hpp"
#include "oliva/design.hpp"
#include "oliva/first_stage.hpp"
#include "oliva/selection.hpp"
#include "oliva/structural.hpp"
#include "oliva/tsiv.hpp"

namespace oliva {

enum class StructuralTuning {
  reuse_lambda,  // same lambda as the first stage
  gcv,           // GCV over the lambda grid with j and k switched
};

struct EstimateOptions {
  GcvGrid grid;
  SieveOptions sieve;
  double level = 0.95;
  StructuralTuning structural = StructuralTuning::gcv;
  double lambda_multiplier = 1.0;
  std::optional<VectorXd> weights;
  int threads = 1;
};

struct Estimate {
  TsivFit tsiv;
  InstrumentFit instrument;
  StructuralFit structural;
  GcvResult selection;
  std::optional<GcvResult> structural_selection;
  FirstStageDiagnostics diagnostics;
};

inline Estimate estimate(const Dataset& data, const EstimateOptions& opt = {}) {
  data.validate();
  if (!(opt.lambda_multiplier > 0.0))
    fail(Errc::invalid_argument, "lambda multiplier must be positive");
  Estimate out;
  GcvGrid grid = opt.grid;
  grid.target = GcvTarget::tsiv;
  out.selection = select(data, grid, opt.sieve, opt.weights, opt.threads);

  TuningTriple tau = out.selection.chosen;
  tau.lambda *= opt.lambda_multiplier;
  const Index j = tau.j;
  const Index k = tau.k();

  out.instrument = estimate_instrument(data, regressor_sieve(data, k, opt.sieve),
                                       instrument_sieve(data, j, opt.sieve), tau.lambda,
                                       opt.weights);

  double g_lambda = tau.lambda;
  if (opt.structural == StructuralTuning::gcv) {
    GcvGrid g = lambda_only_grid(j, tau.c, opt.grid.lambda_values, GcvTarget::structural);
    out.structural_selection = select(data, g, opt.sieve, std::nullopt, opt.threads);
    g_lambda = out.structural_selection->chosen.lambda;
  }
  out.structural = estimate_g(data, regressor_sieve(data, j, opt.sieve),
                              instrument_sieve(data, k, opt.sieve), g_lambda);

  out.tsiv = make_tsiv_fit(data, out.instrument, out.structural, opt.level, tau);
  out.diagnostics = first_stage_diagnostics(out.instrument, data);
  return out;
}

}  // namespace oliva
