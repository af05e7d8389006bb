// Copyright 2026 The kmsolve Authors
// SPDX-License-Identifier: Apache-2.0

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>

#include "doctest.h"
#include "kmsolve/cli/commands.hpp"
#include "kmsolve/cli/config.hpp"
#include "kmsolve/cli/csv.hpp"

using namespace kmsolve;
using namespace kmsolve::cli;
namespace fs = std::filesystem;

namespace {

const char* kMinimal =
    "problem.kind = feasibility\n"
    "problem.d = 3\n"
    "problem.n = 1\n"
    "step.kind = constant\n"
    "step.alpha = 0.5\n"
    "batch.kind = constant\n"
    "batch.b = 1\n"
    "K = 10\n";

fs::path scratch_dir() {
  static const fs::path dir = [] {
    auto p = fs::temp_directory_path() / ("kmsolve-cli-" + std::to_string(::getpid()));
    fs::create_directories(p);
    return p;
  }();
  return dir;
}

fs::path write_file(const std::string& name, const std::string& text) {
  const auto p = scratch_dir() / name;
  std::ofstream(p, std::ios::binary) << text;
  return p;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_binary(const std::string& args) {
  const std::string cmd = std::string(KMSOLVE_BIN) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("parse_config: full example") {
  const auto cfg = parse_config(
      "# comment line\n"
      "problem.kind = zero-point   # trailing comment\n"
      "problem.d = 4\nproblem.n = 6\nproblem.seed = 9\nproblem.beta_fraction = 0.25\n"
      "step.kind = diminishing\nstep.a = 0.75\n"
      "batch.kind = polynomial\nbatch.a = 1\nbatch.b0 = 2\nbatch.c = 3\nbatch.cap = 500\n"
      "K_grid = 8, 16,32 , 64\nseeds.count = 5\nseeds.base = 3\nresidual_cadence = 2\noutput = x.csv\n");
  CHECK(cfg.problem.kind == ProblemKind::zero_point);
  CHECK(cfg.problem.d == 4);
  CHECK(cfg.problem.n == 6);
  CHECK(cfg.problem.seed == 9);
  CHECK(cfg.problem.beta_fraction == 0.25);
  CHECK(cfg.step == StepSchedule::diminishing(0.75));
  CHECK(cfg.batch == BatchSchedule::polynomial(1, 2, 3).with_cap(500));
  CHECK(cfg.K_grid == std::vector<std::uint64_t>{8, 16, 32, 64});
  CHECK(cfg.K == 64);
  CHECK(cfg.seed_count == 5);
  CHECK(cfg.base_seed == 3);
  CHECK(cfg.residual_cadence == 2);
  CHECK(cfg.output == "x.csv");
}

TEST_CASE("parse_config: strictness") {
  auto error_of = [](const std::string& text) -> std::string {
    try {
      parse_config(text);
    } catch (const ConfigError& e) {
      return e.what();
    }
    return "";
  };
  const std::string base = kMinimal;
  CHECK(error_of(base + "stepp = 3\n").find("unknown key 'stepp'") != std::string::npos);
  CHECK(error_of(base + "stepp = 3\n").find("config:9:") != std::string::npos);
  CHECK(error_of(base + "K = 11\n").find("duplicate") != std::string::npos);
  CHECK(error_of(base + "batch.delta = 2\n").find("does not apply") != std::string::npos);
  CHECK(error_of(base + "problem.beta_fraction = 0.5\n").find("does not apply") != std::string::npos);
  CHECK(error_of(base + "just text\n").find("key = value") != std::string::npos);
  CHECK_FALSE(error_of("problem.kind = feasibility\n").empty());
  std::string bad_alpha = base;
  bad_alpha.replace(bad_alpha.find("0.5"), 3, "1.5");
  CHECK(error_of(bad_alpha).find("step.alpha") != std::string::npos);
  std::string bad_num = base;
  bad_num.replace(bad_num.find("K = 10"), 6, "K = 1e");
  CHECK(error_of(bad_num).find("config:8:") != std::string::npos);
  CHECK(error_of(base + "K_grid = 4, 2\n").find("increasing") != std::string::npos);
  CHECK(error_of(base + "K_grid = 4, 20\n").find("exceed K") != std::string::npos);
  CHECK(error_of(base).empty());
}

TEST_CASE("format_double round-trips") {
  RngStream rng(1, 0);
  for (int i = 0; i < 10000; ++i) {
    const double v = std::ldexp(rng.uniform01() - 0.5, static_cast<int>(rng.uniform_below(2000)) - 1000);
    CHECK(std::stod(format_double(v)) == v);
  }
  CHECK(format_double(0.5) == "0.5");
  CHECK(format_double(std::numeric_limits<double>::denorm_min()) == "4.9406564584124654e-324");
}

TEST_CASE("trace CSV round-trips") {
  std::vector<TraceRecord> recs;
  RngStream rng(2, 0);
  for (std::size_t k = 0; k < 200; ++k) {
    TraceRecord r{k, rng.uniform01(), rng.next_u64() >> 1, std::exp(30 * rng.normal()), std::nullopt};
    if (k % 3) r.dist_to_fixed = rng.uniform01() * 1e-7;
    recs.push_back(r);
  }
  std::stringstream ss;
  write_trace_csv(ss, recs);
  const std::string text = ss.str();
  CHECK(text.rfind("k,alpha,batch,residual,dist_to_fixed\n", 0) == 0);
  CHECK(text.find('\r') == std::string::npos);
  CHECK(parse_trace_csv(ss) == recs);
  std::istringstream bad("k,alpha\n1,2\n");
  CHECK_THROWS_AS(parse_trace_csv(bad), InvalidArgument);
  std::istringstream bad_row("k,alpha,batch,residual,dist_to_fixed\n1,x,2,3,\n");
  CHECK_THROWS_AS(parse_trace_csv(bad_row), InvalidArgument);
}

TEST_CASE("rate report CSV") {
  RateReport rep;
  rep.K_grid = {4, 8};
  rep.min_mean_residual = {0.5, 0.25};
  rep.fit = RateFit{-1.0, 0.0, 0.0};
  std::ostringstream os;
  write_rate_report_csv(os, rep);
  CHECK(os.str() == "K,min_mean_residual,theoretical_bound,slope,stderr\n4,0.5,,-1,0\n8,0.25,,-1,0\n");
}

TEST_CASE("cmd_solve: minimal config gives K + 1 rows, byte-identical on rerun") {
  const auto cfg = write_file("minimal.conf", kMinimal);
  CommandOptions opts;
  opts.config_path = cfg.string();
  std::ostringstream out1, out2, err;
  CHECK(cmd_solve(opts, out1, err) == kExitOk);
  CHECK(cmd_solve(opts, out2, err) == kExitOk);
  CHECK(out1.str() == out2.str());
  std::istringstream in(out1.str());
  CHECK(parse_trace_csv(in).size() == 11);

  opts.out_path = (scratch_dir() / "trace.csv").string();
  std::ostringstream none;
  CHECK(cmd_solve(opts, none, err) == kExitOk);
  CHECK(none.str().empty());
  CHECK(read_file(*opts.out_path) == out1.str());
}

TEST_CASE("cmd_solve: error exits") {
  CommandOptions opts;
  std::ostringstream out, err;
  opts.config_path = write_file("stepp.conf", std::string(kMinimal) + "stepp = 1\n").string();
  CHECK(cmd_solve(opts, out, err) == kExitConfigError);
  CHECK(err.str().find("stepp") != std::string::npos);
  opts.config_path = (scratch_dir() / "missing.conf").string();
  CHECK(cmd_solve(opts, out, err) == kExitConfigError);
  opts.config_path = write_file("budget.conf", std::string(kMinimal) + "draw_budget = 3\n").string();
  CHECK(cmd_solve(opts, out, err) == kExitNumericFailure);
}

TEST_CASE("cmd_bench: increasing batch verdict and constant batch floor") {
  CommandOptions opts;
  opts.quiet = false;
  opts.config_path = write_file("bench.conf",
                                "problem.kind = feasibility\nproblem.d = 4\nproblem.n = 6\nproblem.seed = 3\n"
                                "step.kind = constant\nstep.alpha = 0.5\n"
                                "batch.kind = polynomial\nbatch.a = 1\nbatch.b0 = 1\nbatch.c = 2.5\n"
                                "K_grid = 8, 16, 32, 64\nseeds.count = 4\n")
                         .string();
  std::ostringstream out, err;
  CHECK(cmd_bench(opts, out, err) == kExitOk);
  CHECK(out.str().rfind("K,min_mean_residual,theoretical_bound,slope,stderr\n", 0) == 0);
  CHECK(err.str().find("verdict: PASS") != std::string::npos);

  std::ostringstream out2, err2;
  opts.config_path = write_file("floor.conf",
                                "problem.kind = feasibility\nproblem.d = 4\nproblem.n = 6\nproblem.seed = 3\n"
                                "step.kind = constant\nstep.alpha = 0.5\nbatch.kind = constant\nbatch.b = 4\n"
                                "K_grid = 8, 16, 32, 64\nseeds.count = 4\n")
                         .string();
  CHECK(cmd_bench(opts, out2, err2) == kExitOk);
  CHECK(err2.str().find("verdict: FLOOR") != std::string::npos);

  std::ostringstream out3, err3;
  opts.seeds = 1;
  CHECK(cmd_bench(opts, out3, err3) == kExitConfigError);
}

TEST_CASE("cmd_bench: sigma = 0 single component decays below 1e-8 within K = 1000") {
  CommandOptions opts;
  opts.config_path = write_file("single.conf",
                                "problem.kind = feasibility\nproblem.d = 5\nproblem.n = 1\n"
                                "step.kind = constant\nstep.alpha = 0.5\nbatch.kind = exponential\n"
                                "batch.b0 = 1\nbatch.delta = 1.01\nK_grid = 10, 100, 1000\nseeds.count = 2\n")
                         .string();
  std::ostringstream out, err;
  CHECK(cmd_bench(opts, out, err) == kExitOk);
  std::istringstream in(out.str());
  std::string line, last;
  while (std::getline(in, line)) last = line;
  const double min_res = std::stod(last.substr(last.find(',') + 1));
  CHECK(min_res < 1e-8);
}

TEST_CASE("cmd_verify and its fault hooks") {
  std::ostringstream out, err;
  CHECK(cmd_verify({}, true, out, err) == kExitOk);
  std::ostringstream out2, err2;
  CHECK(cmd_verify({.step_alpha = 1.5}, true, out2, err2) == kExitVerificationFailure);
  CHECK(out2.str().find("precondition") != std::string::npos);
  std::ostringstream out3, err3;
  CHECK(cmd_verify({.scale_component = 1.5}, true, out3, err3) == kExitVerificationFailure);
  CHECK(out3.str().find("FAIL nonexpansivity") != std::string::npos);
}

TEST_CASE("binary exit codes") {
  const auto good = write_file("bin.conf", kMinimal);
  const auto bad = write_file("bin_bad.conf", std::string(kMinimal) + "stepp = 1\n");
  CHECK(run_binary("solve --config " + good.string() + " --quiet") == 0);
  CHECK(run_binary("solve --config " + bad.string()) == 2);
  CHECK(run_binary("solve") == 2);
  CHECK(run_binary("verify --quiet") == 0);
  CHECK(run_binary("verify --quiet --hook-alpha 1.5") == 1);
  CHECK(run_binary("verify --quiet --hook-scale-component 1.5") == 1);
  const auto out = scratch_dir() / "bin.csv";
  CHECK(run_binary("solve --config " + good.string() + " --out " + out.string() + " --base-seed 4") == 0);
  CHECK(fs::exists(out));
}
