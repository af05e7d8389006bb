// Copyright 2026 The kmsolve Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <vector>

#include "../oracles.hpp"
#include "doctest.h"
#include "json.hpp"
#include "kmsolve/problems.hpp"

using namespace kmsolve;

namespace {

Vector vec2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

std::vector<ProblemInstance> sample_instances() {
  std::vector<ProblemInstance> out;
  for (std::uint64_t s = 0; s < 3; ++s) {
    RngStream rng(500 + s, 0);
    out.push_back(gen_feasibility(2 + s, 3 + 2 * s, rng, 0.5 + s));
    out.push_back(gen_zero_point(2 + s, 3 + 2 * s, rng, 0.3 + 0.3 * s));
    out.push_back(gen_minimization(2 + s, 3 + 2 * s, rng, 0.4 + 0.3 * s));
  }
  return out;
}

}  // namespace

TEST_CASE("problem kind names") {
  CHECK(parse_problem_kind("zero-point") == ProblemKind::zero_point);
  CHECK(to_string(ProblemKind::minimization) == "minimization");
  CHECK_THROWS_AS(parse_problem_kind("zero_point"), InvalidArgument);
}

TEST_CASE("feasibility certificate: r = 2, |x*| = 1 gives sigma = 3") {
  const Vector xs = vec2(0.6, 0.8);
  ProblemInstance inst{ProblemKind::feasibility,
                       OperatorFamily({ComponentOperator::halfspace(vec2(1, 0), 1.0)}, 3.0, xs),
                       xs, vec2(0, 0), 2.0, {}};
  CHECK(certify_sigma(inst) == doctest::Approx(3.0).epsilon(1e-15));
}

TEST_CASE("zero-point certificate with beta = gamma") {
  // unscaled bound r / sqrt(beta (2 gamma - beta)) = 1 / gamma
  for (double gamma : {0.5, 1.0, 4.0}) {
    CHECK(zero_point_sigma_unscaled(1.0, gamma, gamma) == doctest::Approx(1.0 / gamma).epsilon(1e-15));
  }
  // the certificate for T_xi carries the beta^2 factor: r sqrt(beta / (2 gamma - beta)) = r
  const Matrix M = 2.0 * Matrix::Identity(2, 2);
  const double gamma = 0.5;
  ProblemInstance inst{ProblemKind::zero_point,
                       OperatorFamily({ComponentOperator::cocoercive_step(gamma, M, Vector::Zero(2))}, 1.0,
                                      Vector::Zero(2)),
                       Vector::Zero(2), vec2(1, 0), 1.0, {}};
  inst.constants.gamma = gamma;
  inst.constants.beta = gamma;
  CHECK(certify_sigma(inst) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("minimization certificate from closed-form value gaps") {
  RngStream rng(11, 0);
  const auto inst = gen_minimization(3, 4, rng);
  const auto gaps = minimization_value_gaps(inst);
  RngStream probe(12, 0);
  double acc = 0.0;
  for (std::size_t i = 0; i < gaps.size(); ++i) {
    const auto& g = std::get<GradientStep>(inst.family.component(i).kind());
    // f* by the normal equations
    const Vector xm = (g.A.transpose() * g.A).ldlt().solve(g.A.transpose() * g.y);
    const double fstar = 0.5 * (g.A * xm - g.y).squaredNorm();
    CHECK(std::abs(gaps[i].first - fstar) <= 1e-10);
    CHECK(fstar <= 1e-20);
    // f** dominates sampled values on the ball and is attained up to the safety factor
    const double lam = (g.A.transpose() * g.A).selfadjointView<Eigen::Lower>().eigenvalues().maxCoeff();
    double sampled = 0.0;
    for (int t = 0; t < 10000; ++t) {
      const Vector x = inst.x_star + inst.r * probe.unit_vector(3);
      sampled = std::max(sampled, 0.5 * (g.A * x - g.y).squaredNorm());
    }
    CHECK(gaps[i].second >= sampled);
    CHECK(gaps[i].second <= 0.5 * lam * inst.r * inst.r * (1.001 + 1e-9));
    acc += (gaps[i].second - gaps[i].first) * 1.001 * g.lambda_max;
  }
  const double sigma_g = std::sqrt(2.0 * acc / 4.0);
  CHECK(certify_sigma(inst) == doctest::Approx(*inst.constants.eta * sigma_g).epsilon(1e-14));
  CHECK(inst.constants.sigma == certify_sigma(inst));
  CHECK(inst.family.sigma_bound() == inst.constants.sigma);
}

TEST_CASE("certify_sigma rejects mismatched kinds") {
  RngStream rng(13, 0);
  auto inst = gen_feasibility(2, 3, rng);
  inst.kind = ProblemKind::zero_point;
  CHECK_THROWS_AS(certify_sigma(inst), InvalidArgument);
  auto zp = gen_zero_point(2, 3, rng);
  zp.kind = ProblemKind::minimization;
  CHECK_THROWS_AS(certify_sigma(zp), InvalidArgument);
}

TEST_CASE("feasibility generator") {
  RngStream rng(14, 0);
  const auto one = gen_feasibility(3, 1, rng);
  CHECK(apply_component(one.family.component(0), one.x_star) == one.x_star);

  const auto inst = gen_feasibility(6, 12, rng, 2.0);
  for (const auto& c : inst.family.components()) {
    CHECK((apply_component(c, inst.x_star) - inst.x_star).norm() <= 1e-12);
    if (const auto* h = std::get_if<HalfspaceProjection>(&c.kind())) {
      CHECK(h->normal.dot(inst.x_star) <= h->offset);
    }
  }
  CHECK(residual(inst.family, inst.x_star) <= 1e-9);
  CHECK(inst.r == doctest::Approx(1.5 * (inst.x0 - inst.x_star).norm()));
  CHECK(inst.constants.sigma == doctest::Approx(inst.r + inst.x_star.norm()));
}

TEST_CASE("zero-point generator") {
  const OperatorFamily id({ComponentOperator::cocoercive_step(1.0, Matrix::Identity(3, 3), Vector::Zero(3))});
  RngStream rng(15, 0);
  for (int t = 0; t < 5; ++t) CHECK(apply_mean(id, rng.normal_vector(3)).norm() == 0.0);

  const auto inst = gen_zero_point(4, 5, rng, 0.8);
  for (const auto& c : inst.family.components()) {
    const auto& k = std::get<CocoerciveStep>(c.kind());
    CHECK((k.M * (inst.x_star - k.zero)).norm() <= 1e-12);
    const double lam = k.M.selfadjointView<Eigen::Lower>().eigenvalues().maxCoeff();
    const double gamma_i = 1.0 / lam;
    for (int p = 0; p < 1000; ++p) {
      const Vector x = 3.0 * rng.normal_vector(4), y = 3.0 * rng.normal_vector(4);
      const Vector dA = k.M * (x - y);
      CHECK((x - y).dot(dA) >= gamma_i * dA.squaredNorm() - 1e-10);
    }
  }
  CHECK(*inst.constants.beta <= 2.0 * *inst.constants.gamma * (1 + 1e-9));
  CHECK(residual(inst.family, inst.x_star) <= 1e-9);
}

TEST_CASE("zero-point generator at beta = 2 gamma has no finite certificate") {
  RngStream rng(16, 0);
  const auto inst = gen_zero_point(2, 2, rng, 1.0);
  CHECK(std::isinf(inst.constants.sigma));
}

TEST_CASE("minimization generator") {
  const OperatorFamily neg({ComponentOperator::gradient_step(2.0, Matrix::Identity(2, 2), Vector::Zero(2))});
  CHECK(apply_mean(neg, vec2(1.5, -2)) == vec2(-1.5, 2));

  RngStream rng(17, 0);
  const auto inst = gen_minimization(5, 4, rng, 0.9);
  CHECK(*inst.constants.eta <= 2.0 * *inst.constants.L * (1 + 1e-9));
  Vector grad = Vector::Zero(5);
  for (const auto& c : inst.family.components()) {
    const auto& g = std::get<GradientStep>(c.kind());
    grad += g.A.transpose() * (g.A * inst.x_star - g.y);
    auto f = [&](const Vector& x) { return 0.5 * (g.A * x - g.y).squaredNorm(); };
    for (int p = 0; p < 100; ++p) {
      const Vector x = rng.normal_vector(5);
      const Vector fd = oracle::fd_gradient(f, x);
      const Vector exact = (x - apply_component(c, x)) / g.eta;
      CHECK((fd - exact).norm() <= 1e-5 * exact.norm());
    }
  }
  CHECK(grad.norm() <= 1e-10);
}

TEST_CASE("every generated component is nonexpansive and fixes x*") {
  RngStream rng(18, 0);
  for (const auto& inst : sample_instances()) {
    INFO(to_string(inst.kind));
    CHECK(residual(inst.family, inst.x_star) <= 1e-9);
    for (const auto& c : inst.family.components()) {
      CHECK(max_expansion(c, inst.x_star, inst.r, 1000, rng) <= 1e-12);
    }
  }
}

TEST_CASE("certified sigma dominates the Monte Carlo variance on B_r(x*)") {
  RngStream rng(19, 0);
  for (const auto& inst : sample_instances()) {
    if (inst.family.dim() != 2) continue;  // one of each kind
    INFO(to_string(inst.kind));
    const double s2 = inst.constants.sigma * inst.constants.sigma;
    const Eigen::Index d = inst.family.dim();
    double worst = 0.0;
    for (int t = 0; t < 1000; ++t) {
      const double rad = inst.r * std::pow(rng.uniform01(), 1.0 / static_cast<double>(d));
      const Vector x = inst.x_star + rad * rng.unit_vector(d);
      worst = std::max(worst, empirical_variance_mc(inst.family, x, 1, 10000, rng));
    }
    CHECK(worst <= s2 * 1.05);
  }
}

TEST_CASE("generator preconditions") {
  RngStream rng(20, 0);
  CHECK_THROWS_AS(gen_feasibility(0, 3, rng), InvalidArgument);
  CHECK_THROWS_AS(gen_zero_point(2, 0, rng), InvalidArgument);
  CHECK_THROWS_AS(gen_zero_point(2, 2, rng, 1.5), InvalidArgument);
  CHECK_THROWS_AS(gen_minimization(2, 2, rng, 0.0), InvalidArgument);
}

TEST_CASE("JSON round trip") {
  for (const auto& inst : sample_instances()) {
    const std::string text = to_json(inst);
    const auto back = instance_from_json(text);
    CHECK(back.kind == inst.kind);
    CHECK(back.x_star == inst.x_star);
    CHECK(back.x0 == inst.x0);
    CHECK(back.r == inst.r);
    CHECK(back.constants.sigma == inst.constants.sigma);
    CHECK(back.family.size() == inst.family.size());
    RngStream rng(21, 0);
    for (int t = 0; t < 5; ++t) {
      const Vector x = rng.normal_vector(inst.family.dim());
      CHECK(apply_mean(back.family, x) == apply_mean(inst.family, x));
    }
    CHECK(to_json(back) == text);
  }
}

TEST_CASE("JSON errors") {
  CHECK_THROWS_AS(instance_from_json("{"), InvalidArgument);
  CHECK_THROWS_AS(instance_from_json("{\"format\": \"other\"}"), InvalidArgument);
  RngStream rng(22, 0);
  auto j = nlohmann::json::parse(to_json(gen_feasibility(2, 2, rng)));
  // component 1 (0-based) is a ball
  j["components"][1]["radius"] = -1.0;
  CHECK_THROWS_AS(instance_from_json(j.dump()), InvalidArgument);
  j = nlohmann::json::parse(to_json(gen_feasibility(2, 2, rng)));
  j["x_star"] = nlohmann::json::array({1.0});
  CHECK_THROWS_AS(instance_from_json(j.dump()), InvalidArgument);
}
