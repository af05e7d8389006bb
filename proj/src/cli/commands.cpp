// Copyright 2026 The kmsolve Authors
// SPDX-License-Identifier: Apache-2.0

#include "kmsolve/cli/commands.hpp"

#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include "kmsolve/analysis.hpp"
#include "kmsolve/cli/config.hpp"
#include "kmsolve/cli/csv.hpp"
#include "kmsolve/solver.hpp"

namespace kmsolve::cli {
namespace {

ExperimentConfig resolve(const CommandOptions& opts) {
  ExperimentConfig cfg = load_config(opts.config_path);
  if (opts.out_path) cfg.output = opts.out_path;
  if (opts.seeds) {
    if (*opts.seeds < 1) throw ConfigError(0, "--seeds must be at least 1");
    cfg.seed_count = *opts.seeds;
  }
  if (opts.base_seed) cfg.base_seed = *opts.base_seed;
  return cfg;
}

SolverConfig solver_config(const ExperimentConfig& cfg, const ProblemInstance& inst) {
  SolverConfig sc;
  sc.K = cfg.K;
  sc.step = cfg.step;
  sc.batch = cfg.batch;
  sc.x0 = inst.x0;
  sc.seed = cfg.base_seed;
  sc.stream_id = 0;
  sc.residual_cadence = cfg.residual_cadence;
  sc.region = CertifiedRegion{inst.x_star, inst.r};
  sc.draw_budget = cfg.draw_budget;
  return sc;
}

/// Writes `text` to the configured output path, or to `out` when none is set.
/// Returns false when the file cannot be written.
bool emit(const ExperimentConfig& cfg, const std::string& text, std::ostream& out, std::ostream& err) {
  if (!cfg.output) {
    out << text;
    out.flush();
    return true;
  }
  std::ofstream f(*cfg.output, std::ios::binary | std::ios::trunc);
  if (!f || !(f << text) || !f.flush()) {
    err << "error: cannot write '" << *cfg.output << "'\n";
    return false;
  }
  return true;
}

template <class Body>
int guarded(std::ostream& err, Body&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << e.what() << '\n';
    return kExitConfigError;
  } catch (const InvalidArgument& e) {
    err << "config: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const NumericFailure& e) {
    err << "numeric failure at iteration " << e.iteration() << ": " << e.what() << '\n';
    return kExitNumericFailure;
  } catch (const ResourceLimit& e) {
    err << "resource limit: " << e.what() << '\n';
    return kExitNumericFailure;
  }
}

std::string fixed(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

}  // namespace

int cmd_solve(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const ExperimentConfig cfg = resolve(opts);
    const ProblemInstance inst = make_instance(cfg.problem);
    const RunTrace trace = run(inst.family, solver_config(cfg, inst));

    std::ostringstream csv;
    write_trace_csv(csv, trace.records);
    if (!emit(cfg, csv.str(), out, err)) return int{kExitConfigError};
    if (!opts.quiet) {
      err << "solve: " << to_string(inst.kind) << " d=" << inst.family.dim()
          << " n=" << inst.family.size() << " K=" << cfg.K << " final residual "
          << fixed(trace.records.back().residual) << ", draws " << trace.total_draws
          << ", outside certified region " << trace.region_violations.size() << " times\n";
    }
    return int{kExitOk};
  });
}

int cmd_bench(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const ExperimentConfig cfg = resolve(opts);
    if (cfg.K_grid.empty()) throw ConfigError(0, "config: bench needs K_grid");
    if (cfg.seed_count < 2) throw ConfigError(0, "config: bench needs seeds.count >= 2");
    const ProblemInstance inst = make_instance(cfg.problem);
    SolverConfig sc = solver_config(cfg, inst);
    sc.K = cfg.K_grid.back();
    sc.residual_cadence = 1;

    const auto seeds = make_seeds(cfg.base_seed, cfg.seed_count);
    const auto runs = run_many(inst.family, sc, seeds);
    const AggregateTrace agg = aggregate(runs);
    const double dist0 = (inst.x0 - inst.x_star).norm();
    const RateReport rep =
        rate_report(agg, cfg.K_grid, dist0, inst.constants.sigma, cfg.step, cfg.batch);

    std::ostringstream csv;
    write_rate_report_csv(csv, rep);
    if (!emit(cfg, csv.str(), out, err)) return int{kExitConfigError};

    std::string slope = rep.fit ? "slope=" + fixed(rep.fit->slope) + " stderr=" + fixed(rep.fit->stderr_slope)
                                : "slope=n/a";
    std::string verdict;
    int code = kExitOk;
    if (!rep.theoretical_bound.empty()) {
      const bool ok = bound_dominates(rep);
      verdict = std::string(ok ? "PASS" : "FAIL") + " " + slope +
                " bound-dominance=" + (ok ? "pass" : "fail");
      if (!ok) code = kExitVerificationFailure;
    } else {
      const FloorEstimate fl = floor_from_runs(runs);
      verdict = "FLOOR floor=" + fixed(fl.floor) + " " + slope;
      if (fl.last_quarter_slope) verdict += " last-quarter-slope=" + fixed(*fl.last_quarter_slope);
      verdict += fl.plateau ? " non-vanishing" : " still-decreasing";
      verdict += " (no bound: " + rep.note + ")";
    }
    if (!opts.quiet) (cfg.output ? out : err) << "verdict: " << verdict << '\n';
    return code;
  });
}

}  // namespace kmsolve::cli
