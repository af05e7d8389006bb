// Copyright 2026 The kmsolve Authors
// SPDX-License-Identifier: Apache-2.0

#include "kmsolve/problems.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

namespace kmsolve {

using nlohmann::json;

std::string_view to_string(ProblemKind kind) {
  switch (kind) {
    case ProblemKind::feasibility:
      return "feasibility";
    case ProblemKind::zero_point:
      return "zero-point";
    case ProblemKind::minimization:
      return "minimization";
  }
  return "unknown";
}

ProblemKind parse_problem_kind(std::string_view text) {
  if (text == "feasibility") return ProblemKind::feasibility;
  if (text == "zero-point") return ProblemKind::zero_point;
  if (text == "minimization") return ProblemKind::minimization;
  throw InvalidArgument("unknown problem kind '" + std::string(text) + "'");
}

namespace {

void require_shape(Eigen::Index d, std::size_t n) {
  if (d < 1) throw InvalidArgument("problem dimension must be >= 1");
  if (n < 1) throw InvalidArgument("problem needs at least one component");
}

Matrix random_orthogonal(Eigen::Index d, RngStream& rng) {
  Matrix g(d, d);
  for (Eigen::Index c = 0; c < d; ++c)
    for (Eigen::Index r = 0; r < d; ++r) g(r, c) = rng.normal();
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  // Sign fix so Q is Haar distributed.
  const Matrix rmat = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index i = 0; i < d; ++i) {
    if (rmat(i, i) < 0) q.col(i) *= -1.0;
  }
  return q;
}

Matrix random_psd(Eigen::Index d, RngStream& rng) {
  const Matrix q = random_orthogonal(d, rng);
  Vector lambda(d);
  for (Eigen::Index i = 0; i < d; ++i) lambda[i] = 0.1 + 0.9 * rng.uniform01();
  Matrix m = q * lambda.asDiagonal() * q.transpose();
  return 0.5 * (m + m.transpose());
}

Vector start_point(const Vector& x_star, double distance, RngStream& rng) {
  return x_star + distance * rng.unit_vector(x_star.size());
}

double zero_point_sigma(double r, double beta, double gamma) {
  const double gap = 2.0 * gamma - beta;
  if (!(gap > 0.0)) return std::numeric_limits<double>::infinity();
  return r * std::sqrt(beta / gap);
}

json vec_json(const Vector& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

json mat_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Vector json_vec(const json& j, const char* what) {
  if (!j.is_array()) throw InvalidArgument(std::string("instance: '") + what + "' is not an array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  return v;
}

Matrix json_mat(const json& j, const char* what) {
  if (!j.is_array() || j.empty()) {
    throw InvalidArgument(std::string("instance: '") + what + "' is not a nonempty matrix");
  }
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j[0].size());
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw InvalidArgument(std::string("instance: '") + what + "' has ragged rows");
    }
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

json component_json(const ComponentOperator& op) {
  return std::visit(
      [&](const auto& k) -> json {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, HalfspaceProjection>) {
          return {{"type", "halfspace"}, {"normal", vec_json(k.normal)}, {"offset", k.offset}};
        } else if constexpr (std::is_same_v<K, BallProjection>) {
          return {{"type", "ball"}, {"center", vec_json(k.center)}, {"radius", k.radius}};
        } else if constexpr (std::is_same_v<K, BoxProjection>) {
          return {{"type", "box"}, {"lower", vec_json(k.lower)}, {"upper", vec_json(k.upper)}};
        } else if constexpr (std::is_same_v<K, CocoerciveStep>) {
          return {{"type", "cocoercive-step"},
                  {"beta", k.beta},
                  {"matrix", mat_json(k.M)},
                  {"zero", vec_json(k.zero)}};
        } else if constexpr (std::is_same_v<K, GradientStep>) {
          return {{"type", "gradient-step"},
                  {"eta", k.eta},
                  {"matrix", mat_json(k.A)},
                  {"target", vec_json(k.y)}};
        } else if constexpr (std::is_same_v<K, LinearScaling>) {
          return {{"type", "linear-scaling"}, {"dimension", k.dim}, {"factor", k.factor}};
        } else {
          return {{"type", "scaled"}, {"factor", k.factor}, {"inner", component_json(*k.inner)}};
        }
      },
      op.kind());
}

ComponentOperator component_from_json(const json& j) {
  const auto type = j.at("type").get<std::string>();
  if (type == "halfspace") {
    return ComponentOperator::halfspace(json_vec(j.at("normal"), "normal"),
                                        j.at("offset").get<double>());
  }
  if (type == "ball") {
    return ComponentOperator::ball(json_vec(j.at("center"), "center"), j.at("radius").get<double>());
  }
  if (type == "box") {
    return ComponentOperator::box(json_vec(j.at("lower"), "lower"),
                                  json_vec(j.at("upper"), "upper"));
  }
  if (type == "cocoercive-step") {
    return ComponentOperator::cocoercive_step(
        j.at("beta").get<double>(), json_mat(j.at("matrix"), "matrix"), json_vec(j.at("zero"), "zero"));
  }
  if (type == "gradient-step") {
    return ComponentOperator::gradient_step(j.at("eta").get<double>(),
                                            json_mat(j.at("matrix"), "matrix"),
                                            json_vec(j.at("target"), "target"));
  }
  if (type == "linear-scaling") {
    return ComponentOperator::linear_scaling(j.at("dimension").get<Eigen::Index>(),
                                             j.at("factor").get<double>());
  }
  if (type == "scaled") {
    return ComponentOperator::scaled(component_from_json(j.at("inner")),
                                     j.at("factor").get<double>());
  }
  throw InvalidArgument("instance: unknown component type '" + type + "'");
}

}  // namespace

double zero_point_sigma_unscaled(double r, double beta, double gamma) {
  const double denom = beta * (2.0 * gamma - beta);
  if (!(denom > 0.0)) return std::numeric_limits<double>::infinity();
  return r / std::sqrt(denom);
}

ProblemInstance gen_feasibility(Eigen::Index d, std::size_t n, RngStream& rng, double spread) {
  require_shape(d, n);
  if (!(spread > 0.0)) throw InvalidArgument("feasibility spread must be positive");
  const Vector x_star = rng.normal_vector(d);
  const double margin = 0.1 * spread;
  std::vector<ComponentOperator> comps;
  comps.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (i % 2 == 0) {
      const Vector a = rng.unit_vector(d);
      const double offset = a.dot(x_star) + margin + spread * rng.uniform01();
      comps.push_back(ComponentOperator::halfspace(a, offset));
    } else {
      const Vector u = rng.unit_vector(d);
      const double t = spread * (1.0 + 2.0 * rng.uniform01());
      const double radius = t + margin * (1.0 + rng.uniform01());
      comps.push_back(ComponentOperator::ball(x_star + t * u, radius));
    }
  }
  const Vector x0 = start_point(x_star, 4.0 * spread, rng);
  const double r = 1.5 * (x0 - x_star).norm();
  const double sigma = r + x_star.norm();
  ProblemInstance inst{ProblemKind::feasibility,
                       OperatorFamily(std::move(comps), sigma, x_star),
                       x_star,
                       x0,
                       r,
                       {}};
  inst.constants.sigma = sigma;
  return inst;
}

ProblemInstance gen_zero_point(Eigen::Index d, std::size_t n, RngStream& rng,
                               double beta_fraction, double start_distance) {
  require_shape(d, n);
  if (!(beta_fraction > 0.0 && beta_fraction <= 1.0)) {
    throw InvalidArgument("beta_fraction must lie in (0, 1]");
  }
  const Vector z = rng.normal_vector(d);
  std::vector<Matrix> ms;
  double gamma = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    Matrix m = random_psd(d, rng);
    const double lmax = lambda_max_psd(m);
    gamma = std::min(gamma, 1.0 / (kLambdaSafety * lmax));
    ms.push_back(std::move(m));
  }
  const double beta = beta_fraction * 2.0 * gamma;
  std::vector<ComponentOperator> comps;
  comps.reserve(n);
  for (auto& m : ms) comps.push_back(ComponentOperator::cocoercive_step(beta, std::move(m), z));
  const Vector x0 = start_point(z, start_distance, rng);
  const double r = 1.5 * (x0 - z).norm();
  const double sigma = zero_point_sigma(r, beta, gamma);
  ProblemInstance inst{ProblemKind::zero_point, OperatorFamily(std::move(comps), sigma, z), z, x0, r,
                       {}};
  inst.constants.gamma = gamma;
  inst.constants.beta = beta;
  inst.constants.sigma = sigma;
  return inst;
}

ProblemInstance gen_minimization(Eigen::Index d, std::size_t n, RngStream& rng,
                                 double eta_fraction, double start_distance) {
  require_shape(d, n);
  if (!(eta_fraction > 0.0 && eta_fraction <= 1.0)) {
    throw InvalidArgument("eta_fraction must lie in (0, 1]");
  }
  const Vector w = rng.normal_vector(d);
  std::vector<Matrix> as;
  double L = std::numeric_limits<double>::infinity();
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  for (std::size_t i = 0; i < n; ++i) {
    Matrix a(d, d);
    for (Eigen::Index c = 0; c < d; ++c)
      for (Eigen::Index r = 0; r < d; ++r) a(r, c) = scale * rng.normal();
    const double lmax = lambda_max_psd(a.transpose() * a);
    L = std::min(L, 1.0 / (kLambdaSafety * lmax));
    as.push_back(std::move(a));
  }
  const double eta = eta_fraction * 2.0 * L;
  std::vector<ComponentOperator> comps;
  comps.reserve(n);
  for (auto& a : as) {
    Vector y = a * w;
    comps.push_back(ComponentOperator::gradient_step(eta, std::move(a), std::move(y)));
  }
  const Vector x0 = start_point(w, start_distance, rng);
  const double r = 1.5 * (x0 - w).norm();
  // sigma is filled in below from the value gaps.
  ProblemInstance inst{ProblemKind::minimization, OperatorFamily(std::move(comps), 0.0, w), w, x0, r,
                       {}};
  inst.constants.L = L;
  inst.constants.eta = eta;
  const double sigma = certify_sigma(inst);
  inst.constants.sigma_g = sigma / eta;
  inst.constants.sigma = sigma;
  inst.family = OperatorFamily(inst.family.components(), sigma, w);
  return inst;
}

std::vector<std::pair<double, double>> minimization_value_gaps(const ProblemInstance& instance) {
  std::vector<std::pair<double, double>> gaps;
  for (const auto& c : instance.family.components()) {
    const auto* g = std::get_if<GradientStep>(&c.kind());
    if (!g) throw InvalidArgument("minimization instance holds a non-gradient component");
    const Vector x_ls = g->A.completeOrthogonalDecomposition().solve(g->y);
    const double f_min = 0.5 * (g->A * x_ls - g->y).squaredNorm();
    // max over ||x - x*|| <= r of 0.5 ||A (x - x*) + e||^2 with e = A x* - y.
    const double e = (g->A * instance.x_star - g->y).norm();
    const double reach = std::sqrt(kLambdaSafety * g->lambda_max) * instance.r + e;
    gaps.emplace_back(f_min, 0.5 * reach * reach);
  }
  return gaps;
}

double certify_sigma(const ProblemInstance& instance) {
  const auto& fam = instance.family;
  switch (instance.kind) {
    case ProblemKind::feasibility: {
      for (const auto& c : fam.components()) {
        const auto& k = c.kind();
        if (!std::holds_alternative<HalfspaceProjection>(k) &&
            !std::holds_alternative<BallProjection>(k) && !std::holds_alternative<BoxProjection>(k)) {
          throw InvalidArgument("feasibility instance holds a non-projection component");
        }
      }
      return instance.r + instance.x_star.norm();
    }
    case ProblemKind::zero_point: {
      if (!instance.constants.beta || !instance.constants.gamma) {
        throw InvalidArgument("zero-point instance lacks beta or gamma");
      }
      for (const auto& c : fam.components()) {
        if (!std::holds_alternative<CocoerciveStep>(c.kind())) {
          throw InvalidArgument("zero-point instance holds a non-cocoercive component");
        }
      }
      return zero_point_sigma(instance.r, *instance.constants.beta, *instance.constants.gamma);
    }
    case ProblemKind::minimization: {
      if (!instance.constants.eta) throw InvalidArgument("minimization instance lacks eta");
      const auto gaps = minimization_value_gaps(instance);
      double acc = 0.0;
      for (std::size_t i = 0; i < gaps.size(); ++i) {
        const auto& g = std::get<GradientStep>(fam.component(i).kind());
        // (f** - f*) / L_i with 1/L_i the gradient Lipschitz constant.
        acc += (gaps[i].second - gaps[i].first) * kLambdaSafety * g.lambda_max;
      }
      const double sigma_g = std::sqrt(2.0 * acc / static_cast<double>(gaps.size()));
      return *instance.constants.eta * sigma_g;
    }
  }
  throw InvalidArgument("unknown problem kind");
}

std::string to_json(const ProblemInstance& instance) {
  json j;
  j["format"] = "kmsolve-instance";
  j["version"] = 1;
  j["kind"] = std::string(to_string(instance.kind));
  j["dimension"] = instance.family.dim();
  j["r"] = instance.r;
  j["x_star"] = vec_json(instance.x_star);
  j["x0"] = vec_json(instance.x0);
  json consts = json::object();
  const auto& c = instance.constants;
  if (c.gamma) consts["gamma"] = *c.gamma;
  if (c.beta) consts["beta"] = *c.beta;
  if (c.L) consts["L"] = *c.L;
  if (c.eta) consts["eta"] = *c.eta;
  if (c.sigma_g) consts["sigma_g"] = *c.sigma_g;
  // JSON has no infinity; an unbounded certificate is written as null.
  consts["sigma"] = std::isfinite(c.sigma) ? json(c.sigma) : json(nullptr);
  j["constants"] = consts;
  json comps = json::array();
  for (const auto& op : instance.family.components()) comps.push_back(component_json(op));
  j["components"] = comps;
  return j.dump(2);
}

ProblemInstance instance_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InvalidArgument(std::string("instance: ") + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != "kmsolve-instance") {
      throw InvalidArgument("instance: unexpected format tag");
    }
    if (j.at("version").get<int>() != 1) throw InvalidArgument("instance: unsupported version");
    const auto kind = parse_problem_kind(j.at("kind").get<std::string>());
    const Vector x_star = json_vec(j.at("x_star"), "x_star");
    const Vector x0 = json_vec(j.at("x0"), "x0");
    const double r = j.at("r").get<double>();
    ProblemConstants consts;
    const auto& cj = j.at("constants");
    auto opt = [&](const char* key) -> std::optional<double> {
      if (cj.contains(key)) return cj.at(key).get<double>();
      return std::nullopt;
    };
    consts.gamma = opt("gamma");
    consts.beta = opt("beta");
    consts.L = opt("L");
    consts.eta = opt("eta");
    consts.sigma_g = opt("sigma_g");
    consts.sigma = cj.at("sigma").is_null() ? std::numeric_limits<double>::infinity()
                                            : cj.at("sigma").get<double>();
    std::vector<ComponentOperator> comps;
    for (const auto& cjson : j.at("components")) comps.push_back(component_from_json(cjson));
    if (static_cast<Eigen::Index>(j.at("dimension").get<long long>()) != x_star.size()) {
      throw InvalidArgument("instance: dimension disagrees with x_star");
    }
    ProblemInstance inst{kind, OperatorFamily(std::move(comps), consts.sigma, x_star), x_star, x0,
                         r, consts};
    require_same_dim(x0.size(), inst.family.dim(), "instance x0");
    return inst;
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("instance: ") + e.what());
  }
}

}  // namespace kmsolve
