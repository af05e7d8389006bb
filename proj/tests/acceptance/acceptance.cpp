// Copyright 2026 The kmsolve Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance run: one PASS/FAIL line per criterion A1..A7, with indented
// diagnostics. Exit status is the number of failed criteria (capped at 125).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "../oracles.hpp"
#include "kmsolve/analysis.hpp"
#include "kmsolve/problems.hpp"
#include "kmsolve/solver.hpp"

using namespace kmsolve;

namespace {

constexpr std::size_t kSeeds = 20;
// Per-run component draw budget for the rate experiments. The batch laws in
// A2 and A4 exceed any budget long before their K.
constexpr std::uint64_t kDrawBudget = std::uint64_t{1} << 26;

struct Outcome {
  bool pass = false;
  std::string summary;
  std::vector<std::string> info;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string g(double v) { return fmt("%.4g", v); }

ProblemInstance rate_instance() {
  RngStream rng(2024, 0);
  return gen_feasibility(10, 20, rng);
}

SolverConfig base_config(const ProblemInstance& inst, std::uint64_t K, StepSchedule step, BatchSchedule batch) {
  SolverConfig cfg;
  cfg.K = K;
  cfg.step = step;
  cfg.batch = batch;
  cfg.x0 = inst.x0;
  cfg.region = CertifiedRegion{inst.x_star, inst.r};
  cfg.draw_budget = kDrawBudget;
  return cfg;
}

std::uint64_t total_draws(const BatchSchedule& b, std::uint64_t K) {
  double s = 0.0;
  for (std::uint64_t k = 0; k < K; ++k) s += b.batch_value(k);
  return s >= 1.8e19 ? UINT64_MAX : static_cast<std::uint64_t>(s);
}

// --- A1 -------------------------------------------------------------------

Outcome a1() {
  Outcome out;
  struct Named {
    std::string name;
    OperatorFamily fam;
    Vector x_star, x0;
  };
  std::vector<Named> inst;
  {
    RngStream r1(101, 0), r2(102, 0), r3(103, 0);
    auto f = gen_feasibility(2, 2, r1);
    auto z = gen_zero_point(3, 3, r2);
    auto m = gen_minimization(4, 3, r3);
    inst.push_back({"feasibility d=2 n=2", f.family, f.x_star, f.x0});
    inst.push_back({"zero-point d=3 n=3", z.family, z.x_star, z.x0});
    inst.push_back({"minimization d=4 n=3", m.family, m.x_star, m.x0});
    Vector a = Vector::Ones(1);
    inst.push_back({"opposing halfspaces d=1 n=2",
                    OperatorFamily({ComponentOperator::halfspace(a, -1.0), ComponentOperator::halfspace(-a, -1.0)},
                                   1.0, Vector::Zero(1)),
                    Vector::Zero(1), Vector::Constant(1, 3.0)});
  }
  std::size_t evaluations = 0, violations = 0, audits = 0;
  std::uint64_t stream = 0;
  for (const auto& in : inst) {
    for (const auto& step : {StepSchedule::constant(0.5), StepSchedule::diminishing(0.75)}) {
      for (std::size_t b : {1u, 2u}) {
        RngStream rng(2025, stream++);
        const auto rep = inequality_audit({&in.fam, in.x_star, in.x0, step, b, 100}, rng);
        ++audits;
        for (const auto& c : rep.checks) {
          evaluations += c.evaluations;
          violations += c.violations;
          if (c.violations) {
            out.info.push_back(c.name + " violated on " + in.name + " b=" + std::to_string(b) + " " +
                               to_string(step) + " (worst slack " + g(c.worst_slack) + ")");
          }
        }
      }
    }
  }
  out.pass = violations == 0;
  out.summary = std::to_string(audits) + " audits x 100 steps, " + std::to_string(evaluations) +
                " inequality evaluations, " + std::to_string(violations) + " violations";
  return out;
}

// --- A2 -------------------------------------------------------------------

Outcome a2() {
  Outcome out;
  const auto inst = rate_instance();
  const auto step = StepSchedule::constant(0.5);
  const auto batch = BatchSchedule::exponential(2.0, 2.0);
  const std::vector<std::uint64_t> grid{16, 64, 256, 1024};
  const double dist0 = (inst.x0 - inst.x_star).norm();
  const auto seeds = make_seeds(1, kSeeds);

  out.info.push_back("component draws needed per seed for K=1024: " +
                     g(static_cast<double>(total_draws(batch, 1024))) + " (b_1023 = " +
                     g(batch.batch_value(1023)) + ")");
  try {
    const auto agg = expected_trace(inst.family, base_config(inst, grid.back(), step, batch), seeds);
    const auto rep = rate_report(agg, grid, dist0, inst.constants.sigma, step, batch);
    const bool slope_ok = rep.fit && rep.fit->slope >= -0.65 && rep.fit->slope <= -0.35;
    const bool dom = bound_dominates(rep);
    out.pass = slope_ok && dom;
    out.summary = "slope " + (rep.fit ? g(rep.fit->slope) : std::string("n/a")) + ", bound dominance " +
                  (dom ? "holds" : "fails");
  } catch (const ResourceLimit& e) {
    out.pass = false;
    out.summary = std::string("run cannot complete: ") + e.what();
  }

  // The largest grid this batch law can reach within the budget.
  const std::vector<std::uint64_t> feasible{8, 12, 16, 20};
  const auto agg = expected_trace(inst.family, base_config(inst, feasible.back(), step, batch), seeds);
  const auto rep = rate_report(agg, feasible, dist0, inst.constants.sigma, step, batch);
  std::string line = "reachable grid K={8,12,16,20}: min mean residual";
  for (double v : rep.min_mean_residual) line += " " + g(v);
  out.info.push_back(line);
  out.info.push_back("reachable grid: slope " + (rep.fit ? g(rep.fit->slope) : std::string("n/a")) +
                     ", bound dominance " + (bound_dominates(rep) ? "holds" : "fails") + ", bound at K=20 " +
                     g(rep.theoretical_bound.back()));
  return out;
}

// --- A3 -------------------------------------------------------------------

Outcome a3() {
  Outcome out;
  const auto inst = rate_instance();
  const auto step = StepSchedule::constant(0.5);
  const std::uint64_t K = 10000;
  const auto seeds = make_seeds(3, kSeeds);
  const std::vector<std::uint64_t> bs{4, 16, 64};
  std::vector<FloorEstimate> floors;
  for (auto b : bs) {
    const auto runs = run_many(inst.family, base_config(inst, K, step, BatchSchedule::constant(b)), seeds);
    floors.push_back(floor_from_runs(runs));
    const auto& f = floors.back();
    out.info.push_back("b=" + std::to_string(b) + ": floor " + g(f.floor) + ", last-quarter slope " +
                       (f.last_quarter_slope ? g(*f.last_quarter_slope) : std::string("n/a")) +
                       (f.plateau ? ", plateau" : ", no plateau"));
  }

  bool decreasing = true;
  for (std::size_t i = 1; i < floors.size(); ++i) {
    const double p = rank_sum_p_less(floors[i].per_seed, floors[i - 1].per_seed);
    out.info.push_back("floor(b=" + std::to_string(bs[i]) + ") < floor(b=" + std::to_string(bs[i - 1]) +
                       "): one-sided rank-sum p = " + g(p));
    decreasing = decreasing && p < 0.05;
  }
  const bool above = std::all_of(floors.begin(), floors.end(), [](const auto& f) { return f.floor > 1e-6; });

  // The increasing-batch configuration at the sample budget b * K.
  const auto exp_batch = BatchSchedule::exponential(2.0, 2.0);
  bool beats = true;
  for (std::size_t i = 0; i < bs.size(); ++i) {
    const std::uint64_t budget = bs[i] * K;
    std::uint64_t k_eq = 0;
    while (total_draws(exp_batch, k_eq + 1) <= budget) ++k_eq;
    const auto agg = expected_trace(inst.family, base_config(inst, k_eq, step, exp_batch), seeds);
    const double best = agg.running_min_mean.back();
    out.info.push_back("increasing batch at " + std::to_string(budget) + " draws (K=" + std::to_string(k_eq) +
                       "): min mean residual " + g(best));
    beats = beats && best < floors[i].floor;
  }

  out.pass = decreasing && above && beats;
  out.summary = std::string("floors decrease: ") + (decreasing ? "yes" : "no") +
                ", all floors > 1e-6: " + (above ? "yes" : "no") +
                ", increasing batch below each floor at equal budget: " + (beats ? "yes" : "no");
  return out;
}

// --- A4 -------------------------------------------------------------------

Outcome a4() {
  Outcome out;
  const auto inst = rate_instance();
  const auto batch = BatchSchedule::exponential(2.0, 2.0);
  const std::uint64_t K = 10000;
  const auto seeds = make_seeds(4, kSeeds);
  try {
    const auto dim =
        expected_trace(inst.family, base_config(inst, K, StepSchedule::diminishing(1.0), batch), seeds);
    const auto con = expected_trace(inst.family, base_config(inst, K, StepSchedule::constant(0.5), batch), seeds);
    const double ratio = dim.running_min_mean.back() / con.running_min_mean.back();
    out.pass = ratio >= 3.0;
    out.summary = "ratio " + g(ratio);
  } catch (const ResourceLimit& e) {
    out.pass = false;
    out.summary = std::string("run cannot complete: ") + e.what();
  }

  const std::uint64_t Kf = 20;
  const auto dim = expected_trace(inst.family, base_config(inst, Kf, StepSchedule::diminishing(1.0), batch), seeds);
  const auto con = expected_trace(inst.family, base_config(inst, Kf, StepSchedule::constant(0.5), batch), seeds);
  out.info.push_back("at the reachable K=20: min mean residual diminishing " + g(dim.running_min_mean.back()) +
                     ", constant " + g(con.running_min_mean.back()) + ", ratio " +
                     g(dim.running_min_mean.back() / con.running_min_mean.back()));
  return out;
}

// --- A5 -------------------------------------------------------------------

Outcome a5() {
  Outcome out;
  const auto step = StepSchedule::constant(0.5);
  const auto batch = BatchSchedule::polynomial(0.01, 1.0, 2.5);
  const auto cert = certify_conditions(step, batch);
  if (!cert.divergent_step_sum || !cert.summable_inv_sqrt_batch) {
    out.summary = "schedule not certified: " + cert.notes;
    return out;
  }
  std::vector<ProblemInstance> instances;
  {
    RngStream r1(2024, 0), r2(2024, 1), r3(2024, 2);
    instances.push_back(gen_feasibility(10, 20, r1));
    instances.push_back(gen_zero_point(10, 20, r2));
    instances.push_back(gen_minimization(10, 20, r3));
  }
  const auto seeds = make_seeds(5, 50);
  bool pass = true;
  for (const auto& inst : instances) {
    SolverConfig cfg = base_config(inst, 4096, step, batch);
    cfg.draw_budget = std::uint64_t{1} << 32;
    const auto runs = run_many(inst.family, cfg, seeds);
    std::size_t converged = 0, bounded = 0;
    double worst_ratio = 0.0;
    for (const auto& r : runs) {
      const double ratio = r.records.back().residual / r.records.front().residual;
      worst_ratio = std::max(worst_ratio, ratio);
      if (ratio <= 1e-2) ++converged;
      const double d0 = *r.records.front().dist_to_fixed;
      const bool ok = std::all_of(r.records.begin(), r.records.end(),
                                  [&](const TraceRecord& t) { return *t.dist_to_fixed <= 1.5 * d0; });
      if (ok) ++bounded;
    }
    const bool kind_ok = converged == runs.size() && bounded >= 49;
    pass = pass && kind_ok;
    out.info.push_back(std::string(to_string(inst.kind)) + ": " + std::to_string(converged) +
                       "/50 seeds reach residual <= 1e-2 x initial (worst ratio " + g(worst_ratio) + "), " +
                       std::to_string(bounded) + "/50 keep dist_to_fixed <= 1.5 x initial");
  }
  out.pass = pass;
  out.summary = "three instance kinds, " + to_string(step) + " + " + to_string(batch) + ", 50 seeds, K=4096";
  return out;
}

// --- A6 -------------------------------------------------------------------

Outcome a6() {
  Outcome out;
  std::size_t ok = 0, total = 0;
  const std::vector<std::pair<BatchSchedule, bool>> batches{
      {BatchSchedule::constant(8), false},
      {BatchSchedule::polynomial(1.0, 1.0, 3.0), true},
      {BatchSchedule::exponential(2.0, 2.0), true}};
  for (const auto& s : {StepSchedule::constant(0.5), StepSchedule::diminishing(1.0)}) {
    for (const auto& [b, summable] : batches) {
      const auto cert = certify_conditions(s, b);
      ++total;
      if (cert.divergent_step_sum && cert.summable_inv_sqrt_batch == summable) {
        ++ok;
      } else {
        out.info.push_back("mismatch: " + to_string(s) + " + " + to_string(b));
      }
    }
  }
  std::size_t bounds_ok = 0, bounds = 0;
  for (const auto& s : {StepSchedule::constant(0.5), StepSchedule::diminishing(0.25), StepSchedule::diminishing(0.5),
                        StepSchedule::diminishing(0.75), StepSchedule::diminishing(1.0)}) {
    for (std::uint64_t K : {10u, 100u, 1000u, 10000u}) {
      ++bounds;
      if (sum_alpha_one_minus_alpha(s, K) >= step_sum_lower_bound(s, K) - 1e-9) {
        ++bounds_ok;
      } else {
        out.info.push_back("lower bound fails: " + to_string(s) + " K=" + std::to_string(K));
      }
    }
  }
  const auto weak = certify_conditions(StepSchedule::constant(0.5), BatchSchedule::polynomial(1.0, 1.0, 1.5));
  out.info.push_back("polynomial c=1.5 (outside the canonical pairs): summable = " +
                     std::string(weak.summable_inv_sqrt_batch ? "true" : "false") + "; " + weak.notes);
  out.pass = ok == total && bounds_ok == bounds;
  out.summary = std::to_string(ok) + "/" + std::to_string(total) + " classifications, " + std::to_string(bounds_ok) +
                "/" + std::to_string(bounds) + " partial-sum lower bounds";
  return out;
}

// --- A7 -------------------------------------------------------------------

Outcome a7() {
  Outcome out;
  RngStream rng(7, 7);
  double worst_proj = 0.0;
  std::size_t cases = 0, bad = 0;
  // `member` is some point of the set; the projection is no farther from x.
  auto check = [&](const ComponentOperator& op, const Vector& x, const Vector& member,
                   const std::function<bool(const Vector&)>& in) {
    const double R = 1.0 + 2.0 * (x - member).norm();
    const Vector ref = oracle::grid_projection_2d(x, in, R);
    const double err = (apply_component(op, x) - ref).norm();
    worst_proj = std::max(worst_proj, err);
    ++cases;
    if (err > 1e-3) ++bad;
  };
  for (int t = 0; t < 50; ++t) {
    const Vector a = rng.normal_vector(2);
    const double b = rng.normal();
    check(ComponentOperator::halfspace(a, b), 3.0 * rng.normal_vector(2), Vector(a * (b / a.squaredNorm())),
          [&](const Vector& y) { return a.dot(y) <= b; });
  }
  for (int t = 0; t < 50; ++t) {
    const Vector c = rng.normal_vector(2);
    const double r = 0.5 + 2.0 * rng.uniform01();
    check(ComponentOperator::ball(c, r), 3.0 * rng.normal_vector(2), c,
          [&](const Vector& y) { return (y - c).norm() <= r; });
  }
  for (int t = 0; t < 50; ++t) {
    const Vector lo = rng.normal_vector(2);
    const Vector hi = lo.array() + 0.5 + 2.0 * rng.uniform01();
    check(ComponentOperator::box(lo, hi), 3.0 * rng.normal_vector(2), lo, [&](const Vector& y) {
      return (y.array() >= lo.array()).all() && (y.array() <= hi.array()).all();
    });
  }

  double worst_grad = 0.0;
  std::size_t grad_bad = 0, grad_cases = 0;
  for (int t = 0; t < 50; ++t) {
    const Eigen::Index d = 2 + static_cast<Eigen::Index>(rng.uniform_below(5));
    const Matrix A = Matrix::NullaryExpr(d + 1, d, [&] { return rng.normal(); });
    const Vector y = rng.normal_vector(d + 1);
    const double lam = (A.transpose() * A).selfadjointView<Eigen::Lower>().eigenvalues().maxCoeff();
    const double eta = 1.5 / lam;
    const auto op = ComponentOperator::gradient_step(eta, A, y);
    const Vector x = rng.normal_vector(d);
    const Vector fd = oracle::fd_gradient([&](const Vector& z) { return 0.5 * (A * z - y).squaredNorm(); }, x);
    const Vector step_grad = (x - apply_component(op, x)) / eta;
    const double rel = (fd - step_grad).norm() / fd.norm();
    worst_grad = std::max(worst_grad, rel);
    ++grad_cases;
    if (rel > 1e-5) ++grad_bad;
  }
  out.pass = bad == 0 && grad_bad == 0;
  out.summary = std::to_string(cases) + " projections (worst error " + g(worst_proj) + "), " +
                std::to_string(grad_cases) + " gradient steps (worst relative error " + g(worst_grad) + ")";
  return out;
}

}  // namespace

int main() {
  struct Criterion {
    const char* id;
    const char* what;
    Outcome (*fn)();
    double limit_s;
  };
  const Criterion criteria[] = {
      {"A1", "exact enumeration audit", a1, 10},
      {"A2", "O(1/sqrt K) rate with exponential batch", a2, 120},
      {"A3", "constant-batch floor", a3, 180},
      {"A4", "diminishing-step slowdown", a4, 120},
      {"A5", "convergence on all three kinds", a5, 300},
      {"A6", "schedule certificates", a6, 1},
      {"A7", "oracle projections and gradients", a7, 30},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.fn();
    } catch (const std::exception& e) {
      o.pass = false;
      o.summary = std::string("aborted: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs > c.limit_s) {
      o.pass = false;
      o.info.push_back("runtime " + g(secs) + " s exceeds the " + g(c.limit_s) + " s limit");
    }
    std::printf("%s %s  %s: %s [%.1f s]\n", c.id, o.pass ? "PASS" : "FAIL", c.what, o.summary.c_str(), secs);
    for (const auto& line : o.info) std::printf("     %s\n", line.c_str());
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  std::printf("%d of 7 criteria passed\n", 7 - failed);
  return std::min(failed, 125);
}
