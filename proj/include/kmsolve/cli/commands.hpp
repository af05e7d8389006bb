// Copyright 2026 The kmsolve Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

namespace kmsolve::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitVerificationFailure = 1,
  kExitConfigError = 2,
  kExitNumericFailure = 3,
};

struct CommandOptions {
  std::string config_path;
  std::optional<std::string> out_path;  // overrides `output` in the config
  std::optional<std::size_t> seeds;     // overrides seeds.count
  std::optional<std::uint64_t> base_seed;
  bool quiet = false;
};

/// Fault injection for verify, used to check that the audit fails loudly.
struct VerifyHooks {
  std::optional<double> step_alpha;     // constant step used by the audits
  std::optional<double> scale_component;  // multiplies T_1 of the first instance
};

/// One run with seed (base_seed, stream 0); writes the trace CSV to the
/// output path or `out`. Diagnostics go to `err`.
int cmd_solve(const CommandOptions& opts, std::ostream& out, std::ostream& err);

/// expected_trace over the seeds up to max(K_grid); writes the rate report
/// CSV and a one-line verdict.
int cmd_bench(const CommandOptions& opts, std::ostream& out, std::ostream& err);

/// Enumeration audits, nonexpansivity checks and schedule certificates on
/// built-in instances. Returns kExitOk iff nothing was violated.
int cmd_verify(const VerifyHooks& hooks, bool quiet, std::ostream& out, std::ostream& err);

}  // namespace kmsolve::cli
