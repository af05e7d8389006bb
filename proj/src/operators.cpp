// Copyright 2026 The kmsolve Authors
// SPDX-License-Identifier: Apache-2.0

#include "kmsolve/operators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace kmsolve {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void require_symmetric(const Matrix& m, const char* what) {
  if (m.rows() != m.cols()) throw InvalidArgument(std::string(what) + ": matrix is not square");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw InvalidArgument(std::string(what) + ": matrix is not symmetric");
  }
}

void require_finite_matrix(const Matrix& m, const char* what) {
  if (!m.allFinite()) throw InvalidArgument(std::string(what) + ": non-finite matrix entry");
}

}  // namespace

double lambda_max_psd(const Matrix& sym, double rel_tol) {
  const Eigen::Index d = sym.rows();
  if (d == 0) return 0.0;
  if (sym.cwiseAbs().maxCoeff() == 0.0) return 0.0;
  // Deterministic start with no special alignment to coordinate axes.
  Vector v(d);
  for (Eigen::Index i = 0; i < d; ++i) v[i] = 1.0 + 0.1 * std::sin(1.0 + static_cast<double>(i));
  v.normalize();
  double rho = 0.0;
  double rho_checkpoint = 0.0;
  constexpr int kMaxIter = 1'000'000;
  for (int it = 0; it < kMaxIter; ++it) {
    Vector w = sym * v;
    rho = v.dot(w);
    const double wn = w.norm();
    if (wn == 0.0) return 0.0;
    if ((w - rho * v).norm() <= rel_tol * std::abs(rho)) break;
    v = w / wn;
    // Near-degenerate top eigenvalues: the Rayleigh quotient has settled even
    // though the residual decays slowly.
    if (it % 1000 == 999) {
      if (std::abs(rho - rho_checkpoint) <= 1e-15 * std::abs(rho)) break;
      rho_checkpoint = rho;
    }
  }
  return rho;
}

ComponentOperator ComponentOperator::halfspace(Vector normal, double offset) {
  require_finite(normal, "halfspace normal");
  if (!std::isfinite(offset)) throw InvalidArgument("halfspace offset is not finite");
  if (normal.squaredNorm() == 0.0) throw InvalidArgument("halfspace normal has zero norm");
  return ComponentOperator(HalfspaceProjection{std::move(normal), offset});
}

ComponentOperator ComponentOperator::ball(Vector center, double radius) {
  require_finite(center, "ball center");
  if (!(radius > 0.0) || !std::isfinite(radius)) {
    throw InvalidArgument("ball radius must be positive and finite");
  }
  return ComponentOperator(BallProjection{std::move(center), radius});
}

ComponentOperator ComponentOperator::box(Vector lower, Vector upper) {
  require_finite(lower, "box lower");
  require_finite(upper, "box upper");
  require_same_dim(lower.size(), upper.size(), "box bounds");
  if ((lower.array() > upper.array()).any()) throw InvalidArgument("box lower exceeds upper");
  return ComponentOperator(BoxProjection{std::move(lower), std::move(upper)});
}

ComponentOperator ComponentOperator::cocoercive_step(double beta, Matrix M, Vector zero) {
  require_finite_matrix(M, "cocoercive step");
  require_symmetric(M, "cocoercive step");
  require_finite(zero, "cocoercive zero");
  require_same_dim(M.rows(), zero.size(), "cocoercive step");
  Eigen::SelfAdjointEigenSolver<Matrix> eig(M, Eigen::EigenvaluesOnly);
  const double scale = std::max(1.0, M.cwiseAbs().maxCoeff());
  if (eig.eigenvalues().minCoeff() < -1e-12 * scale) {
    throw InvalidArgument("cocoercive step: matrix is not positive semidefinite");
  }
  const double lmax = lambda_max_psd(M);
  if (!(beta > 0.0) || beta * lmax > 2.0 * (1.0 + 1e-9)) {
    throw InvalidArgument("cocoercive step: beta must lie in (0, 2 gamma]");
  }
  return ComponentOperator(CocoerciveStep{beta, std::move(M), std::move(zero), lmax});
}

ComponentOperator ComponentOperator::gradient_step(double eta, Matrix A, Vector y) {
  require_finite_matrix(A, "gradient step");
  require_finite(y, "gradient step target");
  require_same_dim(A.rows(), y.size(), "gradient step");
  const double lmax = lambda_max_psd(A.transpose() * A);
  if (!(eta > 0.0) || eta * lmax > 2.0 * (1.0 + 1e-9)) {
    throw InvalidArgument("gradient step: eta must lie in (0, 2L]");
  }
  return ComponentOperator(GradientStep{eta, std::move(A), std::move(y), lmax});
}

ComponentOperator ComponentOperator::linear_scaling(Eigen::Index dim, double factor) {
  if (dim < 1) throw InvalidArgument("linear scaling: dimension must be positive");
  if (!std::isfinite(factor)) throw InvalidArgument("linear scaling: factor is not finite");
  return ComponentOperator(LinearScaling{dim, factor});
}

ComponentOperator ComponentOperator::scaled(ComponentOperator inner, double factor) {
  if (!std::isfinite(factor)) throw InvalidArgument("scaled component: factor is not finite");
  return ComponentOperator(
      ScaledComponent{std::make_shared<const ComponentOperator>(std::move(inner)), factor});
}

Eigen::Index ComponentOperator::dim() const noexcept {
  return std::visit(overloaded{
                        [](const HalfspaceProjection& h) { return h.normal.size(); },
                        [](const BallProjection& b) { return b.center.size(); },
                        [](const BoxProjection& b) { return b.lower.size(); },
                        [](const CocoerciveStep& c) { return c.zero.size(); },
                        [](const GradientStep& g) { return g.A.cols(); },
                        [](const LinearScaling& l) { return l.dim; },
                        [](const ScaledComponent& s) { return s.inner->dim(); },
                    },
                    kind_);
}

const char* ComponentOperator::kind_name() const noexcept {
  return std::visit(overloaded{
                        [](const HalfspaceProjection&) { return "halfspace"; },
                        [](const BallProjection&) { return "ball"; },
                        [](const BoxProjection&) { return "box"; },
                        [](const CocoerciveStep&) { return "cocoercive-step"; },
                        [](const GradientStep&) { return "gradient-step"; },
                        [](const LinearScaling&) { return "linear-scaling"; },
                        [](const ScaledComponent&) { return "scaled"; },
                    },
                    kind_);
}

OperatorFamily::OperatorFamily(std::vector<ComponentOperator> components, double sigma_bound,
                               std::optional<Vector> fixed_point_hint)
    : components_(std::move(components)),
      sigma_bound_(sigma_bound),
      fixed_point_hint_(std::move(fixed_point_hint)) {
  if (components_.empty()) throw InvalidArgument("operator family needs at least one component");
  dim_ = components_.front().dim();
  for (const auto& c : components_) require_same_dim(c.dim(), dim_, "operator family");
  if (!(sigma_bound_ >= 0.0)) throw InvalidArgument("sigma bound must be nonnegative");
  if (fixed_point_hint_) {
    require_same_dim(fixed_point_hint_->size(), dim_, "fixed point hint");
    if (residual(*this, *fixed_point_hint_) > 1e-9) {
      throw InvalidArgument("fixed point hint has residual above 1e-9");
    }
  }
}

Vector apply_component(const ComponentOperator& op, const Vector& x) {
  require_same_dim(x.size(), op.dim(), "apply_component");
  return std::visit(
      overloaded{
          [&](const HalfspaceProjection& h) -> Vector {
            const double excess = h.normal.dot(x) - h.offset;
            if (excess <= 0.0) return x;
            return x - (excess / h.normal.squaredNorm()) * h.normal;
          },
          [&](const BallProjection& b) -> Vector {
            const Vector diff = x - b.center;
            const double dist = diff.norm();
            if (dist <= b.radius) return x;
            return b.center + (b.radius / dist) * diff;
          },
          [&](const BoxProjection& b) -> Vector { return x.cwiseMax(b.lower).cwiseMin(b.upper); },
          [&](const CocoerciveStep& c) -> Vector { return x - c.beta * (c.M * (x - c.zero)); },
          [&](const GradientStep& g) -> Vector {
            return x - g.eta * (g.A.transpose() * (g.A * x - g.y));
          },
          [&](const LinearScaling& l) -> Vector { return l.factor * x; },
          [&](const ScaledComponent& s) -> Vector { return s.factor * apply_component(*s.inner, x); },
      },
      op.kind());
}

Vector apply_minibatch_counts(const OperatorFamily& fam, const Vector& x,
                              std::span<const std::uint64_t> counts) {
  require_same_dim(x.size(), fam.dim(), "apply_minibatch");
  if (counts.size() != fam.size()) throw InvalidArgument("batch counts size differs from n");
  std::uint64_t b = 0;
  for (auto c : counts) b += c;
  if (b == 0) throw InvalidArgument("batch index sequence is empty");
  const double bd = static_cast<double>(b);
  Vector out = Vector::Zero(fam.dim());
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] == 0) continue;
    out += (static_cast<double>(counts[i]) / bd) * apply_component(fam.component(i), x);
  }
  return out;
}

Vector apply_mean(const OperatorFamily& fam, const Vector& x) {
  const std::vector<std::uint64_t> ones(fam.size(), 1);
  return apply_minibatch_counts(fam, x, ones);
}

Vector apply_minibatch(const OperatorFamily& fam, const Vector& x,
                       std::span<const std::size_t> indices) {
  const auto counts = tally_indices(indices, fam.size());
  return apply_minibatch_counts(fam, x, counts);
}

double residual(const OperatorFamily& fam, const Vector& x) {
  return (x - apply_mean(fam, x)).norm();
}

std::uint64_t batch_outcome_count(std::size_t n, std::size_t b, std::uint64_t budget) {
  if (n == 0 || b == 0) throw InvalidArgument("batch enumeration needs n >= 1 and b >= 1");
  std::uint64_t total = 1;
  for (std::size_t j = 0; j < b; ++j) {
    if (total > budget / n) {
      throw ResourceLimit("batch enumeration: n^b = " + std::to_string(n) + "^" +
                          std::to_string(b) + " exceeds budget " + std::to_string(budget));
    }
    total *= n;
  }
  if (total > budget) throw ResourceLimit("batch enumeration exceeds budget");
  return total;
}

double empirical_variance_exact(const OperatorFamily& fam, const Vector& x, std::size_t b) {
  require_finite(x, "empirical_variance");
  const std::uint64_t total = batch_outcome_count(fam.size(), b);
  std::vector<Vector> images;
  images.reserve(fam.size());
  for (const auto& c : fam.components()) images.push_back(apply_component(c, x));
  const Vector mean = apply_mean(fam, x);
  double acc = 0.0;
  for_each_batch(fam.size(), b, [&](std::span<const std::size_t> idx) {
    Vector batch_mean = Vector::Zero(fam.dim());
    for (std::size_t i : idx) batch_mean += images[i];
    batch_mean /= static_cast<double>(b);
    acc += (batch_mean - mean).squaredNorm();
  });
  return acc / static_cast<double>(total);
}

double empirical_variance_mc(const OperatorFamily& fam, const Vector& x, std::size_t b,
                             std::size_t m, RngStream& rng) {
  require_finite(x, "empirical_variance");
  if (m == 0) throw InvalidArgument("monte carlo variance needs m >= 1");
  if (b == 0) throw InvalidArgument("batch size must be positive");
  std::vector<Vector> images;
  images.reserve(fam.size());
  for (const auto& c : fam.components()) images.push_back(apply_component(c, x));
  const Vector mean = apply_mean(fam, x);
  double acc = 0.0;
  for (std::size_t s = 0; s < m; ++s) {
    Vector batch_mean = Vector::Zero(fam.dim());
    for (std::size_t j = 0; j < b; ++j) batch_mean += images[rng.uniform_below(fam.size())];
    batch_mean /= static_cast<double>(b);
    acc += (batch_mean - mean).squaredNorm();
  }
  return acc / static_cast<double>(m);
}

double max_expansion(const ComponentOperator& op, const Vector& center, double spread,
                     std::size_t pairs, RngStream& rng) {
  require_same_dim(center.size(), op.dim(), "max_expansion");
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p < pairs; ++p) {
    const Vector x = center + spread * rng.normal_vector(op.dim());
    const Vector y = center + spread * rng.normal_vector(op.dim());
    const double excess = (apply_component(op, x) - apply_component(op, y)).norm() - (x - y).norm();
    worst = std::max(worst, excess);
  }
  return worst;
}

}  // namespace kmsolve
