// Copyright 2026 The kmsolve Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "kmsolve/core.hpp"
#include "kmsolve/operators.hpp"

namespace kmsolve {

enum class ProblemKind { feasibility, zero_point, minimization };

std::string_view to_string(ProblemKind kind);
/// Accepts "feasibility", "zero-point", "minimization".
ProblemKind parse_problem_kind(std::string_view text);

/// Constants certified for an instance. Only those meaningful for the kind
/// are set.
struct ProblemConstants {
  std::optional<double> gamma;  // min_i gamma_i, zero-point
  std::optional<double> beta;   // zero-point step
  std::optional<double> L;      // min_i L_i, minimization
  std::optional<double> eta;    // minimization step
  std::optional<double> sigma_g;
  double sigma = 0.0;
};

struct ProblemInstance {
  ProblemKind kind = ProblemKind::feasibility;
  OperatorFamily family;
  Vector x_star;
  Vector x0;
  /// Radius of the ball around x_star on which sigma is certified.
  double r = 0.0;
  ProblemConstants constants;
};

/// Convex feasibility: n halfspaces and balls that all contain a ball of
/// positive margin around a drawn common point x_star. `spread` scales the
/// constraint offsets and the start distance (x0 lies 4 * spread from
/// x_star).
ProblemInstance gen_feasibility(Eigen::Index d, std::size_t n, RngStream& rng, double spread = 1.0);

/// Common zero of n maps A_i(x) = M_i (x - z) with M_i = Q diag(U[0.1, 1]) Q^T;
/// components x - beta A_i(x) with beta = beta_fraction * 2 gamma.
ProblemInstance gen_zero_point(Eigen::Index d, std::size_t n, RngStream& rng,
                               double beta_fraction = 0.5, double start_distance = 2.0);

/// Consistent least squares f_i(x) = 0.5 ||A_i x - A_i w||^2 with shared
/// minimizer w; components x - eta grad f_i(x) with eta = eta_fraction * 2L.
ProblemInstance gen_minimization(Eigen::Index d, std::size_t n, RngStream& rng,
                                 double eta_fraction = 0.5, double start_distance = 2.0);

/// Variance certificate sigma valid on B_r(x_star):
///   feasibility   r + ||x_star||
///   zero-point    r sqrt(beta / (2 gamma - beta))   (bound on V[x - beta A_xi(x)])
///   minimization  eta sigma_g, sigma_g^2 = (2/n) sum lambda_i (f_i** - f_i*)
/// Throws InvalidArgument if the components do not match the kind.
double certify_sigma(const ProblemInstance& instance);

/// r / sqrt(beta (2 gamma - beta)): the zero-point bound as it applies to
/// V[A_xi(x)], without the beta^2 factor that carries it over to T_xi.
double zero_point_sigma_unscaled(double r, double beta, double gamma);

/// Per-component (f_i*, f_i**) for a minimization instance: the exact
/// minimum of f_i and the exact maximum of f_i over B_r(x_star).
std::vector<std::pair<double, double>> minimization_value_gaps(const ProblemInstance& instance);

/// Serializes to the documented JSON instance format.
std::string to_json(const ProblemInstance& instance);
/// Parses and re-validates an instance. Throws InvalidArgument on bad input.
ProblemInstance instance_from_json(std::string_view text);

}  // namespace kmsolve
