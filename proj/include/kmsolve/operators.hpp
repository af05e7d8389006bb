// Copyright 2026 The kmsolve Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "kmsolve/core.hpp"

namespace kmsolve {

/// Safety factor applied to power-iteration eigenvalue estimates before
/// admissible step ranges (beta, eta) are formed.
inline constexpr double kLambdaSafety = 1.001;

/// Largest eigenvalue of a symmetric positive semidefinite matrix by power
/// iteration, to relative residual `rel_tol`.
double lambda_max_psd(const Matrix& sym, double rel_tol = 1e-10);

/// Projection onto {x : <normal, x> <= offset}.
struct HalfspaceProjection {
  Vector normal;
  double offset = 0.0;
};

/// Projection onto the closed ball B_radius(center).
struct BallProjection {
  Vector center;
  double radius = 0.0;
};

/// Projection onto the box [lower, upper] (componentwise clamp).
struct BoxProjection {
  Vector lower;
  Vector upper;
};

/// x - beta * M (x - zero), the forward step of the cocoercive map
/// A(x) = M (x - zero). `lambda_max` is the power-iteration estimate of
/// lambda_max(M), so A is (1 / lambda_max)-cocoercive.
struct CocoerciveStep {
  double beta = 0.0;
  Matrix M;
  Vector zero;
  double lambda_max = 0.0;
};

/// x - eta * A^T (A x - y), the gradient step on f(x) = 0.5 ||A x - y||^2.
/// `lambda_max` estimates lambda_max(A^T A), the gradient Lipschitz constant.
struct GradientStep {
  double eta = 0.0;
  Matrix A;
  Vector y;
  double lambda_max = 0.0;
};

/// Test-only synthetic component x -> factor * x.
struct LinearScaling {
  Eigen::Index dim = 0;
  double factor = 1.0;
};

class ComponentOperator;

/// Test-only wrapper x -> factor * inner(x). Used to plant expansive maps.
struct ScaledComponent {
  std::shared_ptr<const ComponentOperator> inner;
  double factor = 1.0;
};

/// One nonexpansive component map T_i. Construct through the factories,
/// which enforce each kind's parameter constraints.
class ComponentOperator {
 public:
  using Kind = std::variant<HalfspaceProjection, BallProjection, BoxProjection, CocoerciveStep,
                            GradientStep, LinearScaling, ScaledComponent>;

  static ComponentOperator halfspace(Vector normal, double offset);
  static ComponentOperator ball(Vector center, double radius);
  static ComponentOperator box(Vector lower, Vector upper);
  /// Requires M symmetric PSD and beta in (0, 2 / lambda_max(M)].
  static ComponentOperator cocoercive_step(double beta, Matrix M, Vector zero);
  /// Requires eta in (0, 2 / lambda_max(A^T A)].
  static ComponentOperator gradient_step(double eta, Matrix A, Vector y);
  static ComponentOperator linear_scaling(Eigen::Index dim, double factor);
  static ComponentOperator scaled(ComponentOperator inner, double factor);

  const Kind& kind() const noexcept { return kind_; }
  Eigen::Index dim() const noexcept;
  /// Short kind name, e.g. "halfspace".
  const char* kind_name() const noexcept;

 private:
  explicit ComponentOperator(Kind kind) : kind_(std::move(kind)) {}
  Kind kind_;
};

/// The n components T_1..T_n with the mean map T = (1/n) sum T_i.
/// `sigma_bound` may be +infinity when no finite variance certificate exists.
class OperatorFamily {
 public:
  /// Throws InvalidArgument if `components` is empty, dimensions disagree, or
  /// a supplied fixed-point hint has residual above 1e-9.
  explicit OperatorFamily(std::vector<ComponentOperator> components, double sigma_bound = 0.0,
                          std::optional<Vector> fixed_point_hint = std::nullopt);

  std::size_t size() const noexcept { return components_.size(); }
  Eigen::Index dim() const noexcept { return dim_; }
  const std::vector<ComponentOperator>& components() const noexcept { return components_; }
  const ComponentOperator& component(std::size_t i) const { return components_.at(i); }
  double sigma_bound() const noexcept { return sigma_bound_; }
  const std::optional<Vector>& fixed_point_hint() const noexcept { return fixed_point_hint_; }

 private:
  std::vector<ComponentOperator> components_;
  Eigen::Index dim_ = 0;
  double sigma_bound_ = 0.0;
  std::optional<Vector> fixed_point_hint_;
};

Vector apply_component(const ComponentOperator& op, const Vector& x);

/// Exact mean map T(x).
Vector apply_mean(const OperatorFamily& fam, const Vector& x);

/// Mini-batch map (1/b) sum_j T_{indices[j]}(x). Indices are 0-based and
/// repeated indices count with multiplicity.
Vector apply_minibatch(const OperatorFamily& fam, const Vector& x,
                       std::span<const std::size_t> indices);

/// Mini-batch map given per-component multiplicities; b = sum(counts).
Vector apply_minibatch_counts(const OperatorFamily& fam, const Vector& x,
                              std::span<const std::uint64_t> counts);

/// ||x - T(x)||.
double residual(const OperatorFamily& fam, const Vector& x);

/// Largest n^b accepted by exact batch enumeration.
inline constexpr std::uint64_t kEnumerationBudget = 1'000'000;

/// n^b, or ResourceLimit if it exceeds `budget`.
std::uint64_t batch_outcome_count(std::size_t n, std::size_t b,
                                  std::uint64_t budget = kEnumerationBudget);

/// Calls visit(indices) for every ordered batch in [0, n)^b, in
/// lexicographic order. Throws ResourceLimit if n^b exceeds `budget`.
template <typename Visitor>
void for_each_batch(std::size_t n, std::size_t b, Visitor&& visit,
                    std::uint64_t budget = kEnumerationBudget) {
  const std::uint64_t total = batch_outcome_count(n, b, budget);
  std::vector<std::size_t> idx(b, 0);
  for (std::uint64_t t = 0; t < total; ++t) {
    visit(std::span<const std::size_t>(idx));
    for (std::size_t pos = b; pos-- > 0;) {
      if (++idx[pos] < n) break;
      idx[pos] = 0;
    }
  }
}

/// Largest excess ||T(x) - T(y)|| - ||x - y|| over `pairs` random pairs drawn
/// as center + spread * N(0, I). Nonpositive for a nonexpansive map.
double max_expansion(const ComponentOperator& op, const Vector& center, double spread,
                     std::size_t pairs, RngStream& rng);

/// E ||T_xi(x) - T(x)||^2 over all n^b equiprobable ordered batches.
double empirical_variance_exact(const OperatorFamily& fam, const Vector& x, std::size_t b);

/// Monte Carlo estimate of the same quantity from m sampled batches.
double empirical_variance_mc(const OperatorFamily& fam, const Vector& x, std::size_t b,
                             std::size_t m, RngStream& rng);

}  // namespace kmsolve
