// Copyright 2026 The kmsolve Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "kmsolve/core.hpp"
#include "kmsolve/operators.hpp"
#include "kmsolve/schedules.hpp"

namespace kmsolve {

/// alpha admissibility for km_step. `strict` accepts (0, 1]; `relaxed`
/// accepts [0, 1] and exists for tests of the limiting cases.
enum class StepCheck { strict, relaxed };

/// (1 - alpha) x + alpha T_xi(x) for the batch given by `indices`.
Vector km_step(const OperatorFamily& fam, const Vector& x, double alpha,
               std::span<const std::size_t> indices, StepCheck check = StepCheck::strict);

/// Same update with the batch given as per-component multiplicities.
Vector km_step_counts(const OperatorFamily& fam, const Vector& x, double alpha,
                      std::span<const std::uint64_t> counts, StepCheck check = StepCheck::strict);

/// Ball in which a regional variance certificate is valid.
struct CertifiedRegion {
  Vector center;
  double radius = 0.0;
};

/// Replaces the random batch draw; receives (rng, n, b_k, k) and returns b_k
/// indices. Intended for tests that force deterministic batches.
using IndexSampler =
    std::function<std::vector<std::size_t>(RngStream&, std::size_t, std::uint64_t, std::uint64_t)>;

struct SolverConfig {
  std::uint64_t K = 1;
  StepSchedule step = StepSchedule::constant(0.5);
  BatchSchedule batch = BatchSchedule::constant(1);
  Vector x0;
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;
  /// Exact residual is recorded every `residual_cadence` iterations.
  std::uint64_t residual_cadence = 1;
  /// Iterations outside this ball are flagged in the trace.
  std::optional<CertifiedRegion> region;
  /// Total component draws allowed over the run.
  std::uint64_t draw_budget = std::uint64_t{1} << 32;
  IndexSampler sampler;
};

struct RunTrace {
  std::vector<TraceRecord> records;
  Vector final_iterate;
  std::uint64_t config_digest = 0;
  /// Iterations k whose iterate lay outside the certified region.
  std::vector<std::uint64_t> region_violations;
  std::uint64_t total_draws = 0;
};

/// FNV-1a digest of the configuration and the family's parameters.
std::uint64_t config_digest(const OperatorFamily& fam, const SolverConfig& cfg);

/// Runs K iterations of the mini-batch stochastic KM update.
///
/// Throws InvalidArgument for an invalid config, ResourceLimit when the batch
/// law leaves the integer range or the draw budget is spent, and
/// NumericFailure (carrying k) if an iterate becomes non-finite.
RunTrace run(const OperatorFamily& fam, const SolverConfig& cfg);

/// Runs `cfg` once per seed, overriding (seed, stream_id). Runs are spread
/// over up to `threads` worker threads (0 = hardware concurrency). The first
/// failing run's exception is rethrown after all workers finish.
std::vector<RunTrace> run_many(const OperatorFamily& fam, const SolverConfig& cfg,
                               std::span<const RngStream> seeds, unsigned threads = 0);

/// Per-recorded-k statistics of the residual across independent runs.
struct AggregateTrace {
  std::vector<std::uint64_t> k;
  std::vector<double> mean;
  std::vector<double> running_min_mean;
  std::vector<double> p10;
  std::vector<double> p90;
  std::vector<double> stderr_mean;
  std::size_t runs = 0;
};

/// Aggregates runs recorded at identical k. Requires at least one run.
AggregateTrace aggregate(std::span<const RunTrace> runs);

/// Sample-mean estimate of E||x_k - T(x_k)|| from at least two seeds.
AggregateTrace expected_trace(const OperatorFamily& fam, const SolverConfig& cfg,
                              std::span<const RngStream> seeds, unsigned threads = 0);

/// `count` streams sharing `base_seed` with stream ids 0..count-1.
std::vector<RngStream> make_seeds(std::uint64_t base_seed, std::size_t count);

}  // namespace kmsolve
