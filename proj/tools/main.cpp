// Copyright 2026 The kmsolve Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "kmsolve/cli/commands.hpp"

int main(int argc, char** argv) {
  using namespace kmsolve::cli;

  CLI::App app{"kmsolve: mini-batch stochastic Krasnosel'skii-Mann solver"};
  app.require_subcommand(1);

  CommandOptions opts;
  std::string out_path;
  std::size_t seeds = 0;
  std::uint64_t base_seed = 0;
  VerifyHooks hooks;
  double hook_alpha = 0.0;
  double hook_scale = 0.0;

  auto add_run_flags = [&](CLI::App* sub) {
    sub->add_option("--config", opts.config_path, "experiment config file")->required();
    sub->add_option("--out", out_path, "output CSV path (default: config `output`, else stdout)");
    sub->add_option("--seeds", seeds, "number of seeds");
    sub->add_option("--base-seed", base_seed, "base seed");
    sub->add_flag("--quiet", opts.quiet, "suppress diagnostics");
  };

  auto* solve = app.add_subcommand("solve", "single run, trace CSV");
  add_run_flags(solve);
  auto* bench = app.add_subcommand("bench", "multi-seed rate report CSV and verdict");
  add_run_flags(bench);
  auto* verify = app.add_subcommand("verify", "audit inequalities on built-in instances");
  verify->add_flag("--quiet", opts.quiet, "print failures only");
  verify->add_option("--hook-alpha", hook_alpha)->group("");
  verify->add_option("--hook-scale-component", hook_scale)->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfigError;
  }

  auto set_overrides = [&](CLI::App* sub) {
    if (sub->count("--out")) opts.out_path = out_path;
    if (sub->count("--seeds")) opts.seeds = seeds;
    if (sub->count("--base-seed")) opts.base_seed = base_seed;
  };

  if (*solve) {
    set_overrides(solve);
    return cmd_solve(opts, std::cout, std::cerr);
  }
  if (*bench) {
    set_overrides(bench);
    return cmd_bench(opts, std::cout, std::cerr);
  }
  if (verify->count("--hook-alpha")) hooks.step_alpha = hook_alpha;
  if (verify->count("--hook-scale-component")) hooks.scale_component = hook_scale;
  return cmd_verify(hooks, opts.quiet, std::cout, std::cerr);
}
