// Copyright 2026 The kmsolve Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kmsolve/core.hpp"
#include "kmsolve/operators.hpp"
#include "kmsolve/schedules.hpp"
#include "kmsolve/solver.hpp"

namespace kmsolve {

/// sum_{k>=0} alpha_k / b_k, accumulated until the last 1000 terms add less
/// than 1e-12 of the running total. Throws InvalidArgument when the series
/// diverges (constant or capped batch) and ResourceLimit if it has not
/// settled after 10^8 terms.
double alpha_over_batch_series(const StepSchedule& step, const BatchSchedule& batch);

/// sqrt(dist0^2 + sigma^2 S) / sqrt(sum_{k<K} alpha_k (1 - alpha_k)) with S
/// the full series of alpha_k / b_k: an upper bound on
/// min_{k<K} E||x_k - T(x_k)||.
double theorem_bound(double dist0, double sigma, const StepSchedule& step,
                     const BatchSchedule& batch, std::uint64_t K);

struct RateFit {
  double slope = 0.0;
  double stderr_slope = 0.0;
  double intercept = 0.0;
};

/// Least-squares fit of log(residual) against log(K). Needs >= 4 points, all
/// residuals positive.
RateFit fit_rate(std::span<const double> K_grid, std::span<const double> residuals);

struct RateReport {
  std::vector<std::uint64_t> K_grid;
  std::vector<double> min_mean_residual;
  /// Empty when the bound is unavailable (sum alpha_k / b_k diverges).
  std::vector<double> theoretical_bound;
  std::optional<RateFit> fit;  // unset when some residual is zero
  /// 3 * stderr / mean at the minimising k, per grid point.
  std::vector<double> stat_slack;
  std::string note;
};

/// Builds the report from an aggregate recorded with cadence 1 up to
/// max(K_grid). min_mean_residual[K] = min_{k<K} mean_k.
RateReport rate_report(const AggregateTrace& agg, std::span<const std::uint64_t> K_grid,
                       double dist0, double sigma, const StepSchedule& step,
                       const BatchSchedule& batch);

/// True when every grid point satisfies mean <= bound * (1 + slack).
bool bound_dominates(const RateReport& report);

struct FloorEstimate {
  double floor = 0.0;                 // mean over seeds of per-seed floors
  std::vector<double> per_seed;       // mean residual over the final quarter
  std::optional<double> last_quarter_slope;  // fitted on 20 block means
  bool plateau = false;  // |slope| < 0.02 or within 3 stderr of 0, positive residuals
};

/// Residual plateau of a constant-step, constant-batch run: per seed, the
/// mean residual over the last quarter of iterations. `plateau` is false
/// (inconclusive) when the seed-mean trace still moves in the last quarter.
FloorEstimate floor_estimate(const OperatorFamily& fam, const SolverConfig& cfg,
                             std::span<const RngStream> seeds, unsigned threads = 0);

/// Same estimate from already-computed runs of length K.
FloorEstimate floor_from_runs(std::span<const RunTrace> runs);

/// One-sided Wilcoxon rank-sum (Mann-Whitney) p-value for the alternative
/// that `lower` is stochastically smaller than `higher`. Normal approximation
/// with tie and continuity corrections.
double rank_sum_p_less(std::span<const double> lower, std::span<const double> higher);

struct AuditCheck {
  std::string name;
  std::size_t evaluations = 0;
  std::size_t violations = 0;
  double worst_slack = 0.0;  // min over evaluations of (allowed - observed)
};

struct AuditViolation {
  std::string check;
  std::uint64_t step = 0;
  double slack = 0.0;
};

struct AuditReport {
  std::vector<AuditCheck> checks;
  std::vector<AuditViolation> violations;
  std::size_t total_violations() const noexcept { return violations.size(); }
};

struct AuditSetup {
  const OperatorFamily* family = nullptr;
  Vector x_star;  // a common fixed point of T
  Vector x0;
  StepSchedule step = StepSchedule::constant(0.5);
  std::size_t batch = 1;
  std::uint64_t steps = 100;
};

/// Largest n^b for which inequality_audit enumerates a step.
inline constexpr std::uint64_t kAuditEnumerationBudget = 100;

/// Walks one sampled trajectory and, at every x_k, enumerates all n^b batch
/// outcomes to check: unbiasedness, variance = V_1 / b, the mini-batch
/// nonexpansivity bound, the residual sandwich, the expected descent of
/// ||x - x*||^2 and the expected residual drift. The exact pointwise
/// variance V_1(x_k) stands in for sigma^2.
AuditReport inequality_audit(const AuditSetup& setup, RngStream& rng);

}  // namespace kmsolve
