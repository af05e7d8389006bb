// Copyright 2026 The kmsolve Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "kmsolve/core.hpp"

namespace kmsolve {

/// Step-size law k -> alpha_k.
class StepSchedule {
 public:
  enum class Kind { constant, diminishing };

  /// alpha_k = alpha, alpha in (0, 1).
  static StepSchedule constant(double alpha);
  /// alpha_k = 1 / (k + 1)^a, a in (0, 1].
  static StepSchedule diminishing(double a);

  Kind kind() const noexcept { return kind_; }
  /// alpha for constant, exponent a for diminishing.
  double parameter() const noexcept { return param_; }

  double step_at(std::uint64_t k) const;

  friend bool operator==(const StepSchedule&, const StepSchedule&) = default;

 private:
  StepSchedule(Kind kind, double param) : kind_(kind), param_(param) {}
  Kind kind_;
  double param_;
};

/// Batch-size law k -> b_k.
///
/// Real-valued formulas are rounded up and floored at 1, then capped if a cap
/// is set. A capped schedule never certifies summability of b_k^{-1/2}.
class BatchSchedule {
 public:
  enum class Kind { constant, polynomial, exponential };

  static BatchSchedule constant(std::uint64_t b);
  /// b_k = (a k + b0)^c with a > 0, b0 > 0, c > 1.
  static BatchSchedule polynomial(double a, double b0, double c);
  /// b_k = b0 delta^k with b0 >= 1, delta > 1.
  static BatchSchedule exponential(double b0, double delta);

  BatchSchedule with_cap(std::uint64_t cap) const;

  Kind kind() const noexcept { return kind_; }
  const std::optional<std::uint64_t>& cap() const noexcept { return cap_; }
  /// Constant: b. Polynomial: a. Exponential: unused (0).
  double a() const noexcept { return a_; }
  double b0() const noexcept { return b0_; }
  double c() const noexcept { return c_; }
  double delta() const noexcept { return delta_; }

  /// Integer batch size. Throws ResourceLimit if b_k exceeds 2^63.
  std::uint64_t batch_at(std::uint64_t k) const;
  /// The same value as a double, without the integer-range limit.
  double batch_value(std::uint64_t k) const;

  friend bool operator==(const BatchSchedule&, const BatchSchedule&) = default;

 private:
  BatchSchedule(Kind kind, double a, double b0, double c, double delta)
      : kind_(kind), a_(a), b0_(b0), c_(c), delta_(delta) {}
  Kind kind_;
  double a_ = 0.0;
  double b0_ = 0.0;
  double c_ = 0.0;
  double delta_ = 0.0;
  std::optional<std::uint64_t> cap_;
};

/// sum_{k=0}^{K-1} alpha_k (1 - alpha_k), accumulated termwise.
double sum_alpha_one_minus_alpha(const StepSchedule& s, std::uint64_t K);

/// sum_{k=0}^{K-1} 1 / sqrt(b_k), accumulated termwise.
double sum_inv_sqrt_batch(const BatchSchedule& s, std::uint64_t K);

/// sum_{k=0}^{K-1} alpha_k / b_k, accumulated termwise.
double sum_alpha_over_batch(const StepSchedule& step, const BatchSchedule& batch, std::uint64_t K);

/// Closed-form lower bound on sum_{k<K} alpha_k (1 - alpha_k): alpha(1-alpha)K
/// for a constant step, and the four-case bound for 1/(k+1)^a.
double step_sum_lower_bound(const StepSchedule& s, std::uint64_t K);

struct ScheduleCertificate {
  bool divergent_step_sum = false;        // sum alpha_k (1 - alpha_k) = infinity
  bool summable_inv_sqrt_batch = false;   // sum 1 / sqrt(b_k) < infinity
  std::string notes;
};

ScheduleCertificate certify_conditions(const StepSchedule& step, const BatchSchedule& batch);

/// Whether sum alpha_k / b_k converges (polynomial or exponential batch,
/// no cap). This is weaker than summability of b_k^{-1/2}.
bool alpha_over_batch_summable(const StepSchedule& step, const BatchSchedule& batch);

/// The constant B bounding the partial sums of b_k^{-1/2} as commonly stated
/// for the increasing laws: (2c - 1) / ((c - 1) min{a, b0}) for polynomial,
/// delta / ((delta - 1) b0) for exponential. Reported verbatim; the
/// exponential value actually bounds sum 1/b_k (see exact_inv_sqrt_series).
/// Throws InvalidArgument for the constant kind or a capped schedule.
double closed_form_B(const BatchSchedule& batch);

/// sqrt(delta) / (sqrt(b0) (sqrt(delta) - 1)), the exact value of
/// sum_k (b0 delta^k)^{-1/2} before rounding. Exponential kind only.
double exact_inv_sqrt_series(const BatchSchedule& batch);

std::string to_string(const StepSchedule& s);
std::string to_string(const BatchSchedule& s);

}  // namespace kmsolve
