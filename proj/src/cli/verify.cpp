// Copyright 2026 The kmsolve Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "kmsolve/analysis.hpp"
#include "kmsolve/cli/commands.hpp"
#include "kmsolve/cli/csv.hpp"
#include "kmsolve/problems.hpp"

namespace kmsolve::cli {
namespace {

struct NamedInstance {
  std::string name;
  OperatorFamily family;
  Vector x_star;
  Vector x0;
};

// 1-D halfspaces {x <= -1} and {x >= 1}: no common fixed point, T has the
// single fixed point 0 and the variance there is 1.
NamedInstance opposing_halfspaces() {
  Vector a(1), x_star(1), x0(1);
  a << 1.0;
  x_star << 0.0;
  x0 << 3.0;
  std::vector<ComponentOperator> comps{ComponentOperator::halfspace(a, -1.0),
                                       ComponentOperator::halfspace(-a, -1.0)};
  return {"opposing-halfspaces", OperatorFamily(std::move(comps), 0.0, x_star), x_star, x0};
}

std::vector<NamedInstance> builtin_instances(const VerifyHooks& hooks) {
  std::vector<NamedInstance> out;
  auto add = [&](const std::string& name, ProblemInstance inst) {
    out.push_back({name, std::move(inst.family), inst.x_star, inst.x0});
  };
  RngStream r1(101, 0), r2(102, 0), r3(103, 0);
  add("feasibility(d=2,n=2)", gen_feasibility(2, 2, r1));
  add("zero-point(d=3,n=3)", gen_zero_point(3, 3, r2));
  add("minimization(d=4,n=3)", gen_minimization(4, 3, r3));
  out.push_back(opposing_halfspaces());

  if (hooks.scale_component) {
    auto& first = out.front();
    auto comps = first.family.components();
    comps[0] = ComponentOperator::scaled(comps[0], *hooks.scale_component);
    first.family = OperatorFamily(std::move(comps));
    first.name += "[T_1 scaled]";
  }
  return out;
}

class Tally {
 public:
  Tally(bool quiet, std::ostream& out) : quiet_(quiet), out_(out) {}

  void pass(const std::string& what) {
    ++checks_;
    if (!quiet_) out_ << "ok   " << what << '\n';
  }
  void fail(const std::string& what) {
    ++checks_;
    ++failures_;
    out_ << "FAIL " << what << '\n';
  }
  std::size_t checks() const { return checks_; }
  std::size_t failures() const { return failures_; }

 private:
  bool quiet_;
  std::ostream& out_;
  std::size_t checks_ = 0;
  std::size_t failures_ = 0;
};

void nonexpansivity_checks(const std::vector<NamedInstance>& instances, Tally& t) {
  constexpr std::size_t kPairs = 1000;
  RngStream rng(7, 1);
  for (const auto& inst : instances) {
    const double spread = std::max(1.0, (inst.x0 - inst.x_star).norm());
    double worst = -std::numeric_limits<double>::infinity();
    std::size_t worst_i = 0;
    for (std::size_t i = 0; i < inst.family.size(); ++i) {
      const double e = max_expansion(inst.family.component(i), inst.x_star, spread, kPairs, rng);
      if (e > worst) {
        worst = e;
        worst_i = i;
      }
    }
    const std::string what = "nonexpansivity instance=" + inst.name + " (" +
                             std::to_string(kPairs) + " pairs per component)";
    if (worst > 1e-12 * spread) {
      t.fail(what + ": component " + std::to_string(worst_i + 1) + " expands by " + format_double(worst));
    } else {
      t.pass(what);
    }
  }
}

void audits(const std::vector<NamedInstance>& instances, const std::vector<StepSchedule>& steps,
            Tally& t) {
  std::uint64_t stream = 0;
  for (const auto& inst : instances) {
    for (const auto& step : steps) {
      for (std::size_t b : {1u, 2u}) {
        AuditSetup setup{&inst.family, inst.x_star, inst.x0, step, b, 100};
        RngStream rng(2024, stream++);
        const AuditReport rep = inequality_audit(setup, rng);
        const std::string where = "instance=" + inst.name + " b=" + std::to_string(b) + " " + to_string(step);
        if (rep.total_violations() == 0) {
          std::size_t evals = 0;
          for (const auto& c : rep.checks) evals += c.evaluations;
          t.pass("audit " + where + " (" + std::to_string(evals) + " evaluations)");
          continue;
        }
        for (const auto& c : rep.checks) {
          if (c.violations == 0) continue;
          const auto first = std::find_if(rep.violations.begin(), rep.violations.end(),
                                          [&](const AuditViolation& v) { return v.check == c.name; });
          t.fail("audit " + c.name + " " + where + " step=" + std::to_string(first->step) + " slack=" +
                 format_double(first->slack) + " (" + std::to_string(c.violations) + " violations)");
        }
      }
    }
  }
}

void schedule_checks(Tally& t) {
  const std::vector<StepSchedule> steps{StepSchedule::constant(0.5), StepSchedule::diminishing(1.0)};
  const std::vector<std::pair<BatchSchedule, bool>> batches{
      {BatchSchedule::constant(8), false},
      {BatchSchedule::polynomial(1.0, 1.0, 3.0), true},
      {BatchSchedule::exponential(2.0, 2.0), true}};
  for (const auto& s : steps) {
    for (const auto& [b, summable] : batches) {
      const auto cert = certify_conditions(s, b);
      const std::string what = "certificate " + to_string(s) + " + " + to_string(b);
      if (cert.divergent_step_sum && cert.summable_inv_sqrt_batch == summable) {
        t.pass(what);
      } else {
        t.fail(what + ": got divergent=" + std::to_string(cert.divergent_step_sum) +
               " summable=" + std::to_string(cert.summable_inv_sqrt_batch));
      }
    }
  }
  for (const auto& s : {StepSchedule::constant(0.5), StepSchedule::diminishing(0.25),
                        StepSchedule::diminishing(0.5), StepSchedule::diminishing(0.75),
                        StepSchedule::diminishing(1.0)}) {
    for (std::uint64_t K : {10u, 100u, 1000u, 10000u}) {
      const double sum = sum_alpha_one_minus_alpha(s, K);
      const double lb = step_sum_lower_bound(s, K);
      const std::string what = "partial-sum lower bound " + to_string(s) + " K=" + std::to_string(K);
      if (sum >= lb - 1e-12 * std::abs(sum)) {
        t.pass(what);
      } else {
        t.fail(what + ": sum=" + format_double(sum) + " bound=" + format_double(lb));
      }
    }
  }
}

}  // namespace

int cmd_verify(const VerifyHooks& hooks, bool quiet, std::ostream& out, std::ostream& err) {
  Tally t(quiet, out);
  std::vector<StepSchedule> steps;
  try {
    if (hooks.step_alpha) {
      steps.push_back(StepSchedule::constant(*hooks.step_alpha));
    } else {
      steps = {StepSchedule::constant(0.5), StepSchedule::diminishing(0.75)};
    }
  } catch (const InvalidArgument& e) {
    t.fail(std::string("precondition: step size alpha must lie in (0, 1): ") + e.what());
    err << "verify: " << t.failures() << " violation(s)\n";
    return kExitVerificationFailure;
  }

  try {
    const auto instances = builtin_instances(hooks);
    nonexpansivity_checks(instances, t);
    audits(instances, steps, t);
    schedule_checks(t);
  } catch (const std::exception& e) {
    t.fail(std::string("verify aborted: ") + e.what());
  }

  if (t.failures() == 0) {
    if (!quiet) out << "verify: " << t.checks() << " checks, 0 violations\n";
    return kExitOk;
  }
  err << "verify: " << t.failures() << " of " << t.checks() << " checks violated\n";
  return kExitVerificationFailure;
}

}  // namespace kmsolve::cli
