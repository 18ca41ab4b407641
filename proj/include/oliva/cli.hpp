#pragma once

// Command-line front end: estimate, hausman and simulate.
//
//   oliva estimate --data eis.csv --outcome dc --endogenous r
//                  --instruments r1 pi1 dc1 dp1
//   oliva simulate --dgp 1 --rho 0 0.3 0.9 --gamma 0.8 --n 1000 --reps 1000
//
// Every flag can also be given in a key=value file passed with --config.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "oliva/dataset.hpp"
#include "oliva/design.hpp"
#include "oliva/error.hpp"
#include "oliva/exogeneity.hpp"
#include "oliva/io.hpp"
#include "oliva/pipeline.hpp"
#include "oliva/rng.hpp"
#include "oliva/selection.hpp"
#include "oliva/simulate.hpp"
#include "oliva/tsiv.hpp"

namespace oliva::cli {

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

struct RunConfig {
  std::string command;

  // data and roles
  std::string input_path;
  std::string outcome;
  std::vector<std::string> endogenous;
  std::vector<std::string> controls;
  std::vector<std::string> instruments;
  std::vector<std::string> discrete;

  // tuning; empty lists mean the defaults of the command
  std::vector<Index> j_values;
  std::vector<double> c_values;
  std::vector<double> lambdas;
  double lambda_min = 1e-8;
  double lambda_max = 1e-1;
  int lambda_count = 10;
  int degree = 3;
  double lambda_multiplier = 1.0;
  std::string structural = "gcv";

  double level = 0.95;
  bool hc_robust = false;
  std::string format = "json";
  std::string output;

  // simulate
  std::vector<int> dgp{1};
  std::vector<double> rho{0.0};
  std::vector<double> gamma{0.8};
  std::vector<Index> n{1000};
  Index reps = 1000;
  std::uint64_t seed = 7;
  double test_level = 0.05;
  std::string sample_out;

  int threads = 1;
};

inline std::vector<double> lambda_grid(const RunConfig& cfg) {
  if (!cfg.lambdas.empty()) return cfg.lambdas;
  return log_spaced(cfg.lambda_min, cfg.lambda_max, cfg.lambda_count);
}

inline GcvGrid gcv_grid(const RunConfig& cfg) {
  GcvGrid g;
  if (!cfg.j_values.empty()) g.j_values = cfg.j_values;
  if (!cfg.c_values.empty()) g.c_values = cfg.c_values;
  g.lambda_values = lambda_grid(cfg);
  g.validate();
  return g;
}

// Dataset from a parsed CSV. An intercept is prepended to the controls.
inline Dataset load_dataset(const CsvTable& table, const RunConfig& cfg,
                            SieveOptions* sieve = nullptr) {
  if (cfg.outcome.empty()) fail(Errc::role_error, "no outcome column given (--outcome)");
  if (cfg.endogenous.empty())
    fail(Errc::role_error, "at least one endogenous column is required (--endogenous)");
  if (cfg.instruments.empty())
    fail(Errc::role_error, "at least one instrument column is required (--instruments)");

  std::map<std::string, std::string> role_of;
  auto claim = [&](const std::string& name, const char* role) {
    if (table.column(name) < 0)
      fail(Errc::role_error, "column '" + name + "' not found in the CSV header");
    const auto [it, fresh] = role_of.emplace(name, role);
    if (!fresh)
      fail(Errc::role_error, "column '" + name + "' is used as both " + it->second + " and " + role);
  };
  claim(cfg.outcome, "outcome");
  for (const auto& c : cfg.endogenous) claim(c, "endogenous");
  for (const auto& c : cfg.controls) claim(c, "control");
  for (const auto& c : cfg.instruments) claim(c, "instrument");

  const Index n = table.values.rows();
  auto block = [&](const std::vector<std::string>& names) {
    MatrixXd m(n, static_cast<Index>(names.size()));
    for (std::size_t j = 0; j < names.size(); ++j)
      m.col(static_cast<Index>(j)) = table.values.col(table.column(names[j]));
    return m;
  };

  Dataset d;
  d.y = table.values.col(table.column(cfg.outcome));
  const MatrixXd extra = block(cfg.controls);
  for (Index j = 0; j < extra.cols(); ++j)
    if (n > 0 && (extra.col(j).array() == extra(0, j)).all())
      fail(Errc::role_error, "control '" + cfg.controls[static_cast<std::size_t>(j)] +
                                 "' is constant; the intercept is added automatically");
  d.controls.resize(n, 1 + extra.cols());
  d.controls << MatrixXd::Ones(n, 1), extra;
  d.endogenous = block(cfg.endogenous);
  d.instruments = block(cfg.instruments);
  d.outcome_name = cfg.outcome;
  d.control_names = {"(intercept)"};
  d.control_names.insert(d.control_names.end(), cfg.controls.begin(), cfg.controls.end());
  d.endogenous_names = cfg.endogenous;
  d.instrument_names = cfg.instruments;

  if (sieve) {
    sieve->degree = cfg.degree;
    sieve->discrete_endogenous.assign(cfg.endogenous.size(), false);
    sieve->discrete_instruments.assign(cfg.instruments.size(), false);
  }
  for (const auto& name : cfg.discrete) {
    bool found = false;
    for (std::size_t j = 0; j < cfg.endogenous.size(); ++j)
      if (cfg.endogenous[j] == name) {
        if (sieve) sieve->discrete_endogenous[j] = true;
        found = true;
      }
    for (std::size_t j = 0; j < cfg.instruments.size(); ++j)
      if (cfg.instruments[j] == name) {
        if (sieve) sieve->discrete_instruments[j] = true;
        found = true;
      }
    if (!found)
      fail(Errc::role_error,
           "discrete column '" + name + "' is neither endogenous nor an instrument");
  }
  d.validate();
  return d;
}

inline Dataset load_dataset(const RunConfig& cfg, SieveOptions* sieve = nullptr) {
  if (cfg.input_path.empty()) fail(Errc::role_error, "no input file given (--data)");
  return load_dataset(read_csv_file(cfg.input_path), cfg, sieve);
}

namespace detail {

inline Json number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

inline Json coefficient_table(const Dataset& d, const TsivFit& f) {
  Json rows = Json::array();
  const auto names = d.coefficient_names();
  for (Index i = 0; i < f.beta.size(); ++i)
    rows.push_back({{"term", names[static_cast<std::size_t>(i)]},
                    {"estimate", number(f.beta(i))},
                    {"se", number(f.se(i))},
                    {"ci_lower", number(f.ci(i, 0))},
                    {"ci_upper", number(f.ci(i, 1))}});
  return rows;
}

inline Json tuning_json(const TuningTriple& t, double score) {
  return {{"j", t.j}, {"c", t.c}, {"k", t.k()}, {"lambda", t.lambda}, {"gcv", number(score)}};
}

inline Json diagnostics_json(const FirstStageDiagnostics& d, double condition) {
  return {{"smallest_singular_value", number(d.smallest_singular)},
          {"moment_discrepancy", number(d.discrepancy)},
          {"projection_residual", number(d.residual)},
          {"condition_hx", number(condition)}};
}

inline Json failure_json(const Error& e) {
  return {{"error", std::string(e.name())}, {"message", e.what()}};
}

inline EstimateOptions estimate_options(const RunConfig& cfg, const SieveOptions& sieve) {
  EstimateOptions opt;
  opt.grid = gcv_grid(cfg);
  opt.sieve = sieve;
  opt.level = cfg.level;
  opt.lambda_multiplier = cfg.lambda_multiplier;
  opt.threads = cfg.threads;
  if (cfg.structural == "gcv") opt.structural = StructuralTuning::gcv;
  else if (cfg.structural == "reuse") opt.structural = StructuralTuning::reuse_lambda;
  else fail(Errc::invalid_argument, "--structural must be 'gcv' or 'reuse'");
  return opt;
}

inline void check_level(double level) {
  if (!(level > 0.0 && level < 1.0)) fail(Errc::invalid_level, "level must lie in (0, 1)", level);
}

}  // namespace detail

inline Json estimate_report(const Dataset& data, const RunConfig& cfg, const SieveOptions& sieve) {
  detail::check_level(cfg.level);
  const Estimate est = estimate(data, detail::estimate_options(cfg, sieve));

  Json r;
  r["schema"] = kSchemaVersion;
  r["command"] = "estimate";
  r["n"] = data.n();
  r["outcome"] = data.outcome_name;
  r["level"] = cfg.level;
  Json estimators;
  estimators["tsiv"] = detail::coefficient_table(data, est.tsiv);
  estimators["ols"] = detail::coefficient_table(data, fit_ols(data, cfg.level));
  try {
    estimators["tsls"] = detail::coefficient_table(data, fit_linear_iv(data, cfg.level));
  } catch (const Error& e) {
    estimators["tsls"] = detail::failure_json(e);
  }
  r["estimators"] = std::move(estimators);
  r["tuning"] = detail::tuning_json(est.selection.chosen, est.selection.score);
  r["tuning"]["lambda_used"] = est.tsiv.tuning.lambda;
  r["tuning"]["structural_lambda"] = est.structural.lambda;
  r["diagnostics"] = detail::diagnostics_json(est.diagnostics, est.tsiv.condition);
  r["diagnostics"]["structural_effective_df"] = est.structural.effective_df;
  return r;
}

inline Json hausman_report(const Dataset& data, const RunConfig& cfg, const SieveOptions& sieve) {
  EstimateOptions opt = detail::estimate_options(cfg, sieve);
  GcvGrid grid = opt.grid;
  const GcvResult sel = select(data, grid, opt.sieve, std::nullopt, opt.threads);
  TuningTriple tau = sel.chosen;
  tau.lambda *= cfg.lambda_multiplier;
  const InstrumentFit h = estimate_instrument(data, regressor_sieve(data, tau.k(), opt.sieve),
                                              instrument_sieve(data, tau.j, opt.sieve), tau.lambda);
  HausmanOptions hopt;
  hopt.hc_robust = cfg.hc_robust;

  Json tests = Json::array();
  auto add = [&](auto&& run) {
    try {
      const HausmanResult t = run();
      Json rho = Json::array(), se = Json::array();
      for (Index i = 0; i < t.rho_hat.size(); ++i) {
        rho.push_back(detail::number(t.rho_hat(i)));
        se.push_back(detail::number(t.se_rho(i)));
      }
      tests.push_back({{"variant", variant_name(t.variant)},
                       {"statistic", t.df == 1 ? "t" : "wald"},
                       {"value", detail::number(t.t_stat)},
                       {"df", t.df},
                       {"p_value", detail::number(t.p_value)},
                       {"rho_hat", rho},
                       {"se_rho", se}});
    } catch (const Error& e) {
      tests.push_back(detail::failure_json(e));
    }
  };
  add([&] { return robust_hausman(data, h, hopt); });
  add([&] { return standard_hausman(data, hopt); });

  Json r;
  r["schema"] = kSchemaVersion;
  r["command"] = "hausman";
  r["n"] = data.n();
  r["covariance"] = cfg.hc_robust ? "hc0" : "classical";
  r["tests"] = std::move(tests);
  r["tuning"] = detail::tuning_json(sel.chosen, sel.score);
  r["diagnostics"] = detail::diagnostics_json(first_stage_diagnostics(h, data), 0.0);
  r["diagnostics"].erase("condition_hx");
  return r;
}

// One simulation table: a header and rows of numbers; integer columns are
// flagged so they print without an exponent.
struct Table {
  std::vector<std::string> header;
  std::vector<bool> integer;
  std::vector<std::vector<double>> rows;
};

inline Table simulate_table(const RunConfig& cfg) {
  detail::check_level(cfg.level);
  if (!(cfg.test_level > 0.0 && cfg.test_level < 1.0))
    fail(Errc::invalid_level, "test level must lie in (0, 1)", cfg.test_level);
  if (cfg.reps < 1) fail(Errc::invalid_argument, "--reps must be >= 1");
  if (cfg.j_values.size() > 1 || cfg.c_values.size() > 1)
    fail(Errc::invalid_argument, "simulate takes a single --j and --c");
  for (int d : cfg.dgp)
    if (d < 1 || d > 3) fail(Errc::invalid_dgp, "dgp must be 1, 2 or 3", d);

  SimulationOptions opt;
  if (!cfg.j_values.empty()) opt.j = cfg.j_values.front();
  if (!cfg.c_values.empty()) opt.c = cfg.c_values.front();
  if (opt.j < 1 || !(opt.c >= 1.0)) fail(Errc::invalid_argument, "need j >= 1 and c >= 1");
  opt.lambdas = lambda_grid(cfg);
  opt.lambda_multiplier = cfg.lambda_multiplier;
  if (!(opt.lambda_multiplier > 0.0)) fail(Errc::invalid_argument, "lambda multiplier must be positive");
  opt.level = cfg.level;
  opt.test_level = cfg.test_level;
  opt.degree = cfg.degree;
  opt.threads = cfg.threads;

  std::vector<McSummary> cells;
  for (int d : cfg.dgp)
    for (double g : cfg.gamma)
      for (Index n : cfg.n)
        for (double rho : cfg.rho) {
          DgpConfig c;
          c.dgp = d;
          c.rho = rho;
          c.gamma = g;
          c.n = n;
          cells.push_back(run_cell(c, cfg.reps, opt, cfg.seed));
        }

  // Null cells (rho = 0) keyed by (dgp, gamma, n) for size-corrected power.
  std::map<std::tuple<int, double, Index>, const McSummary*> nulls;
  for (const auto& s : cells)
    if (s.cfg.rho == 0.0) nulls[{s.cfg.dgp, s.cfg.gamma, s.cfg.n}] = &s;
  const bool power = !nulls.empty();

  Table t;
  auto col = [&](const char* name, bool integer = false) {
    t.header.emplace_back(name);
    t.integer.push_back(integer);
  };
  col("dgp", true), col("rho"), col("gamma"), col("n", true), col("reps", true),
      col("failures", true);
  col("BIAS_OLS"), col("BIAS_IV"), col("BIAS_TSIV"), col("MSE_OLS"), col("MSE_IV"),
      col("MSE_TSIV"), col("COV_TSIV"), col("REJ_S"), col("REJ_R");
  if (power) col("PWR_S"), col("PWR_R");
  col("SE_BIAS_OLS"), col("SE_BIAS_IV"), col("SE_BIAS_TSIV"), col("SE_MSE_OLS"),
      col("SE_MSE_IV"), col("SE_MSE_TSIV"), col("SE_COV_TSIV"), col("SE_REJ_S"),
      col("SE_REJ_R");

  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const auto& s : cells) {
    std::vector<double> row{static_cast<double>(s.cfg.dgp), s.cfg.rho, s.cfg.gamma,
                            static_cast<double>(s.cfg.n), static_cast<double>(s.replications),
                            static_cast<double>(s.failures), s.ols.bias, s.iv.bias, s.tsiv.bias,
                            s.ols.mse, s.iv.mse, s.tsiv.mse, s.coverage.rate,
                            s.reject_standard.rate, s.reject_robust.rate};
    if (power) {
      const auto it = nulls.find({s.cfg.dgp, s.cfg.gamma, s.cfg.n});
      double ps = nan, pr = nan;
      if (it != nulls.end()) {
        const McSummary& null = *it->second;
        if (!null.t_standard.empty() && !s.t_standard.empty()) {
          ps = size_corrected_power(absolute(null.t_standard), absolute(s.t_standard),
                                    cfg.test_level);
          pr = size_corrected_power(absolute(null.t_robust), absolute(s.t_robust),
                                    cfg.test_level);
        }
      }
      row.push_back(ps);
      row.push_back(pr);
    }
    for (double v : {s.ols.se_bias, s.iv.se_bias, s.tsiv.se_bias, s.ols.se_mse, s.iv.se_mse,
                     s.tsiv.se_mse, s.coverage.se, s.reject_standard.se, s.reject_robust.se})
      row.push_back(v);
    t.rows.push_back(std::move(row));
  }
  return t;
}

inline std::string format_cell(double v, bool integer) {
  if (integer && std::isfinite(v)) return std::to_string(static_cast<long long>(v));
  return format_number(v);
}

inline void write_table_csv(std::ostream& out, const Table& t) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& r : t.rows) {
    std::vector<std::string> s;
    for (std::size_t j = 0; j < r.size(); ++j) s.push_back(format_cell(r[j], t.integer[j]));
    rows.push_back(std::move(s));
  }
  write_csv(out, t.header, rows);
}

inline Json table_json(const Table& t, const RunConfig& cfg) {
  Json cells = Json::array();
  for (const auto& r : t.rows) {
    Json row;
    for (std::size_t j = 0; j < r.size(); ++j) {
      if (t.integer[j]) row[t.header[j]] = static_cast<long long>(r[j]);
      else row[t.header[j]] = detail::number(r[j]);
    }
    cells.push_back(std::move(row));
  }
  Json out;
  out["schema"] = kSchemaVersion;
  out["command"] = "simulate";
  out["seed"] = cfg.seed;
  out["cells"] = std::move(cells);
  return out;
}

inline void write_estimate_csv(std::ostream& out, const Json& report) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& [name, table] : report.at("estimators").items()) {
    if (!table.is_array()) continue;
    for (const auto& row : table) {
      std::vector<std::string> r{name, row.at("term").get<std::string>()};
      for (const char* key : {"estimate", "se", "ci_lower", "ci_upper"}) {
        const auto& v = row.at(key);
        r.push_back(v.is_null() ? "nan" : format_number(v.get<double>()));
      }
      rows.push_back(std::move(r));
    }
  }
  write_csv(out, {"estimator", "term", "estimate", "se", "ci_lower", "ci_upper"}, rows);
}

inline void write_hausman_csv(std::ostream& out, const Json& report) {
  std::vector<std::vector<std::string>> rows;
  auto num = [](const Json& v) { return v.is_null() ? std::string("nan") : format_number(v.get<double>()); };
  for (const auto& t : report.at("tests")) {
    if (!t.contains("variant")) continue;
    rows.push_back({t.at("variant").get<std::string>(), t.at("statistic").get<std::string>(),
                    num(t.at("value")), std::to_string(t.at("df").get<long long>()),
                    num(t.at("p_value"))});
  }
  write_csv(out, {"variant", "statistic", "value", "df", "p_value"}, rows);
}

// Writes the first replication's sample of the first cell as y,x,z.
inline void write_sample(const RunConfig& cfg) {
  DgpConfig c;
  c.dgp = cfg.dgp.front();
  c.rho = cfg.rho.front();
  c.gamma = cfg.gamma.front();
  c.n = cfg.n.front();
  c.seed = derive_seed(cfg.seed, 0, static_cast<std::uint64_t>(c.dgp));
  const Dataset d = gen_dgp(c);
  std::ofstream f(cfg.sample_out);
  if (!f) fail(Errc::invalid_argument, "cannot write '" + cfg.sample_out + "'");
  std::vector<std::vector<std::string>> rows;
  for (Index i = 0; i < d.n(); ++i)
    rows.push_back({format_number(d.y(i)), format_number(d.endogenous(i, 0)),
                    format_number(d.instruments(i, 0))});
  write_csv(f, {"y", "x", "z"}, rows);
}

// Runs the configured command and writes its report to `out`.
inline void execute(const RunConfig& cfg, std::ostream& out) {
  if (cfg.format != "json" && cfg.format != "csv")
    fail(Errc::invalid_argument, "--format must be 'json' or 'csv'");
  if (cfg.threads < 1) fail(Errc::invalid_argument, "thread count must be >= 1");

  std::ostringstream buf;
  if (cfg.command == "simulate") {
    const Table t = simulate_table(cfg);
    if (cfg.format == "csv") write_table_csv(buf, t);
    else buf << table_json(t, cfg).dump(2) << '\n';
    if (!cfg.sample_out.empty()) write_sample(cfg);
  } else if (cfg.command == "estimate" || cfg.command == "hausman") {
    SieveOptions sieve;
    const Dataset data = load_dataset(cfg, &sieve);
    const bool est = cfg.command == "estimate";
    const Json r = est ? estimate_report(data, cfg, sieve) : hausman_report(data, cfg, sieve);
    if (cfg.format == "json") buf << r.dump(2) << '\n';
    else if (est) write_estimate_csv(buf, r);
    else write_hausman_csv(buf, r);
  } else {
    fail(Errc::invalid_argument, "unknown command '" + cfg.command + "'");
  }

  if (cfg.output.empty()) {
    out << buf.str();
  } else {
    std::ofstream f(cfg.output, std::ios::binary);
    if (!f) fail(Errc::invalid_argument, "cannot write '" + cfg.output + "'");
    f << buf.str();
  }
}

inline const char* remediation(Errc e) {
  switch (e) {
    case Errc::all_scores_infinite: return "widen the lambda grid (--lambda-min/--lambda-max)";
    case Errc::singular_system: return "use larger lambda values or smaller j/c";
    case Errc::instrument_rank_deficient: return "instruments look weak; inspect the first-stage diagnostics";
    case Errc::rank_deficient: return "drop constant or duplicated columns";
    case Errc::collinear_augmentation: return "the first stage carries no information beyond the controls";
    case Errc::insufficient_data: return "more observations are needed for this sieve size";
    default: return "";
  }
}

inline void report_error(std::ostream& err, std::string_view name, const std::string& message,
                         const char* hint = "") {
  Json j{{"error", std::string(name)}, {"message", message}};
  if (hint && *hint) j["hint"] = hint;
  err << j.dump() << '\n';
}

inline void add_options(CLI::App& app, RunConfig& cfg) {
  app.set_config("--config", "", "key=value file mirroring the command-line flags");
  app.add_option("command", cfg.command, "estimate, hausman or simulate")
      ->required()
      ->check(CLI::IsMember({"estimate", "hausman", "simulate"}));

  auto* data = app.add_option_group("Data");
  data->add_option("--data,-i", cfg.input_path, "input CSV with a header row");
  data->add_option("--outcome,-y", cfg.outcome, "outcome column");
  data->add_option("--endogenous,-x", cfg.endogenous, "endogenous columns")->delimiter(',');
  data->add_option("--controls", cfg.controls, "exogenous controls (intercept is added)")
      ->delimiter(',');
  data->add_option("--instruments,-z", cfg.instruments, "excluded instruments")->delimiter(',');
  data->add_option("--discrete", cfg.discrete, "columns given an indicator basis")
      ->delimiter(',');

  auto* tune = app.add_option_group("Tuning");
  tune->add_option("--j", cfg.j_values, "instrument sieve sizes (spline columns per variable)")
      ->delimiter(',');
  tune->add_option("--c", cfg.c_values, "ratios k/j")->delimiter(',');
  tune->add_option("--lambda", cfg.lambdas, "explicit lambda grid")->delimiter(',');
  tune->add_option("--lambda-min", cfg.lambda_min, "smallest lambda of the log grid");
  tune->add_option("--lambda-max", cfg.lambda_max, "largest lambda of the log grid");
  tune->add_option("--lambda-count", cfg.lambda_count, "points of the log grid");
  tune->add_option("--lambda-mult", cfg.lambda_multiplier, "multiplier on the GCV lambda");
  tune->add_option("--degree", cfg.degree, "B-spline degree");
  tune->add_option("--structural", cfg.structural, "structural lambda: gcv or reuse");

  auto* outg = app.add_option_group("Output");
  outg->add_option("--level", cfg.level, "confidence level");
  outg->add_flag("--hc-robust", cfg.hc_robust, "HC0 errors in the Hausman regression");
  outg->add_option("--format,-f", cfg.format, "json or csv");
  outg->add_option("--output,-o", cfg.output, "output file (default stdout)");

  auto* sim = app.add_option_group("Simulation");
  sim->add_option("--dgp", cfg.dgp, "designs 1, 2, 3")->delimiter(',');
  sim->add_option("--rho", cfg.rho, "endogeneity levels")->delimiter(',');
  sim->add_option("--gamma", cfg.gamma, "instrument strengths")->delimiter(',');
  sim->add_option("--n", cfg.n, "sample sizes")->delimiter(',');
  sim->add_option("--reps", cfg.reps, "replications per cell");
  sim->add_option("--seed", cfg.seed, "base seed");
  sim->add_option("--test-level", cfg.test_level, "Hausman nominal size");
  sim->add_option("--sample-out", cfg.sample_out, "write the first simulated sample as CSV");

  app.add_option("--threads", cfg.threads, "worker threads")->envname("OLIVA_THREADS");
}

// Exit codes: 0 success, 2 input error, 3 numerical failure.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"OLIVA: two-step IV estimation of the optimal linear IV approximation"};
  app.name("oliva");
  RunConfig cfg;
  add_options(app, cfg);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e, out, err);
      return 0;
    }
    report_error(err, "ArgumentError", e.what());
    return 2;
  }
  try {
    execute(cfg, out);
  } catch (const Error& e) {
    report_error(err, e.name(), e.what(), remediation(e.code()));
    return is_input_error(e.code()) ? 2 : 3;
  } catch (const std::exception& e) {
    report_error(err, "InternalError", e.what());
    return 3;
  }
  return 0;
}

inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"oliva"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace oliva::cli
