// Copyright 2026 The kmsolve Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "kmsolve/problems.hpp"
#include "kmsolve/schedules.hpp"

namespace kmsolve::cli {

/// Parse or validation failure, tied to a line of the config file (0 when
/// the problem is a missing key rather than a bad line).
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::size_t line, const std::string& message)
      : std::runtime_error(message), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

struct ProblemSpec {
  ProblemKind kind = ProblemKind::feasibility;
  Eigen::Index d = 2;
  std::size_t n = 1;
  std::uint64_t seed = 0;
  double spread = 1.0;          // feasibility
  double beta_fraction = 0.5;   // zero-point
  double eta_fraction = 0.5;    // minimization
  double start_distance = 2.0;  // zero-point, minimization
};

struct ExperimentConfig {
  ProblemSpec problem;
  StepSchedule step = StepSchedule::constant(0.5);
  BatchSchedule batch = BatchSchedule::constant(1);
  std::uint64_t K = 1;
  std::vector<std::uint64_t> K_grid;
  std::size_t seed_count = 1;
  std::uint64_t base_seed = 0;
  std::uint64_t residual_cadence = 1;
  std::uint64_t draw_budget = std::uint64_t{1} << 32;
  std::optional<std::string> output;
};

/// Parses the flat `key = value` format:
///
///   # comment
///   problem.kind = feasibility        # feasibility | zero-point | minimization
///   problem.d = 10
///   problem.n = 20
///   problem.seed = 1
///   problem.spread = 1.0              # feasibility only
///   problem.beta_fraction = 0.5       # zero-point only
///   problem.eta_fraction = 0.5        # minimization only
///   problem.start_distance = 2.0      # zero-point and minimization
///   step.kind = constant              # constant | diminishing
///   step.alpha = 0.5                  # constant
///   step.a = 1.0                      # diminishing
///   batch.kind = exponential          # constant | polynomial | exponential
///   batch.b = 8                       # constant
///   batch.a = 1.0                     # polynomial
///   batch.b0 = 2                      # polynomial, exponential
///   batch.c = 3.0                     # polynomial
///   batch.delta = 2.0                 # exponential
///   batch.cap = 4096                  # optional
///   K = 1024
///   K_grid = 16, 64, 256, 1024        # bench; K defaults to the last entry
///   seeds.count = 20
///   seeds.base = 1
///   residual_cadence = 1
///   draw_budget = 4294967296
///   output = trace.csv
///
/// Unknown keys, duplicate keys, keys that do not apply to the selected kind,
/// and out-of-range values are rejected with the offending line number.
ExperimentConfig parse_config(std::string_view text);

ExperimentConfig load_config(const std::string& path);

/// Builds the problem instance the config describes.
ProblemInstance make_instance(const ProblemSpec& spec);

}  // namespace kmsolve::cli
