// Copyright 2026 The kmsolve Authors
// SPDX-License-Identifier: Apache-2.0

#include "kmsolve/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>

namespace kmsolve {

double alpha_over_batch_series(const StepSchedule& step, const BatchSchedule& batch) {
  if (!alpha_over_batch_summable(step, batch)) {
    throw InvalidArgument("bound unavailable: sum alpha_k / b_k diverges for " + to_string(batch));
  }
  constexpr std::uint64_t kWindow = 1000;
  constexpr std::uint64_t kMaxTerms = 100'000'000;
  std::deque<double> window;
  double total = 0.0;
  double window_sum = 0.0;
  for (std::uint64_t k = 0; k < kMaxTerms; ++k) {
    const double term = step.step_at(k) / batch.batch_value(k);
    total += term;
    window.push_back(term);
    window_sum += term;
    if (window.size() > kWindow) {
      window_sum -= window.front();
      window.pop_front();
    }
    if (window.size() == kWindow && window_sum < 1e-12 * total) return total;
  }
  throw ResourceLimit("sum alpha_k / b_k did not settle within 1e8 terms");
}

double theorem_bound(double dist0, double sigma, const StepSchedule& step,
                     const BatchSchedule& batch, std::uint64_t K) {
  if (K == 0) throw InvalidArgument("theorem_bound: K must be positive");
  if (!(dist0 >= 0.0) || !(sigma >= 0.0)) {
    throw InvalidArgument("theorem_bound: dist0 and sigma must be nonnegative");
  }
  const double series = alpha_over_batch_series(step, batch);
  const double denom = sum_alpha_one_minus_alpha(step, K);
  if (!(denom > 0.0)) return std::numeric_limits<double>::infinity();
  return std::sqrt(dist0 * dist0 + sigma * sigma * series) / std::sqrt(denom);
}

RateFit fit_rate(std::span<const double> K_grid, std::span<const double> residuals) {
  if (K_grid.size() != residuals.size()) throw InvalidArgument("fit_rate: length mismatch");
  const std::size_t m = K_grid.size();
  if (m < 4) throw InvalidArgument("fit_rate: needs at least 4 grid points");
  std::vector<double> lx(m), ly(m);
  for (std::size_t i = 0; i < m; ++i) {
    if (!(K_grid[i] > 0.0)) throw InvalidArgument("fit_rate: grid values must be positive");
    if (!(residuals[i] > 0.0)) {
      throw InvalidArgument("fit_rate: nonpositive residual (exclude converged runs first)");
    }
    lx[i] = std::log(K_grid[i]);
    ly[i] = std::log(residuals[i]);
  }
  const double md = static_cast<double>(m);
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / md;
  const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / md;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (!(sxx > 0.0)) throw InvalidArgument("fit_rate: grid values must not all be equal");
  RateFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ssr = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double e = ly[i] - (fit.intercept + fit.slope * lx[i]);
    ssr += e * e;
  }
  fit.stderr_slope = std::sqrt(ssr / (md - 2.0) / sxx);
  return fit;
}

RateReport rate_report(const AggregateTrace& agg, std::span<const std::uint64_t> K_grid,
                       double dist0, double sigma, const StepSchedule& step,
                       const BatchSchedule& batch) {
  RateReport rep;
  rep.K_grid.assign(K_grid.begin(), K_grid.end());
  for (std::size_t g = 0; g < K_grid.size(); ++g) {
    if (g > 0 && K_grid[g] <= K_grid[g - 1]) {
      throw InvalidArgument("rate_report: K grid must be increasing");
    }
    double best = std::numeric_limits<double>::infinity();
    double slack = 0.0;
    for (std::size_t j = 0; j < agg.k.size() && agg.k[j] < K_grid[g]; ++j) {
      if (agg.mean[j] < best) {
        best = agg.mean[j];
        slack = best > 0.0 ? 3.0 * agg.stderr_mean[j] / best : 0.0;
      }
    }
    if (!std::isfinite(best)) throw InvalidArgument("rate_report: no records below K");
    rep.min_mean_residual.push_back(best);
    rep.stat_slack.push_back(slack);
  }
  try {
    for (auto K : K_grid) rep.theoretical_bound.push_back(theorem_bound(dist0, sigma, step, batch, K));
  } catch (const InvalidArgument& e) {
    rep.theoretical_bound.clear();
    rep.note = e.what();
  }
  const bool all_positive = std::all_of(rep.min_mean_residual.begin(), rep.min_mean_residual.end(),
                                        [](double v) { return v > 0.0; });
  if (all_positive && K_grid.size() >= 4) {
    std::vector<double> kd(K_grid.begin(), K_grid.end());
    rep.fit = fit_rate(kd, rep.min_mean_residual);
  } else if (!all_positive) {
    if (!rep.note.empty()) rep.note += "; ";
    rep.note += "slope unavailable: some runs converged to zero residual";
  }
  return rep;
}

bool bound_dominates(const RateReport& report) {
  if (report.theoretical_bound.size() != report.min_mean_residual.size()) return false;
  for (std::size_t g = 0; g < report.min_mean_residual.size(); ++g) {
    if (report.min_mean_residual[g] > report.theoretical_bound[g] * (1.0 + report.stat_slack[g])) {
      return false;
    }
  }
  return true;
}

FloorEstimate floor_from_runs(std::span<const RunTrace> runs) {
  if (runs.empty()) throw InvalidArgument("floor_estimate: no runs");
  const AggregateTrace agg = aggregate(runs);
  const std::uint64_t K = agg.k.back();
  const std::uint64_t start = K - K / 4;
  FloorEstimate est;
  for (const auto& r : runs) {
    double sum = 0.0;
    std::size_t cnt = 0;
    for (const auto& rec : r.records) {
      if (rec.k >= start) {
        sum += rec.residual;
        ++cnt;
      }
    }
    est.per_seed.push_back(cnt ? sum / static_cast<double>(cnt) : 0.0);
  }
  est.floor = std::accumulate(est.per_seed.begin(), est.per_seed.end(), 0.0) /
              static_cast<double>(est.per_seed.size());

  // Fit on block means: neighbouring iterates are correlated, which would
  // make a per-k fit report too small a standard error.
  std::vector<double> tail_k, tail_v;
  for (std::size_t j = 0; j < agg.k.size(); ++j) {
    if (agg.k[j] < start || agg.k[j] == 0) continue;
    tail_k.push_back(static_cast<double>(agg.k[j]));
    tail_v.push_back(agg.mean[j]);
  }
  constexpr std::size_t kBlocks = 20;
  std::vector<double> ks, vals;
  bool positive = true;
  if (tail_k.size() >= kBlocks) {
    for (std::size_t blk = 0; blk < kBlocks; ++blk) {
      const std::size_t lo = blk * tail_k.size() / kBlocks, hi = (blk + 1) * tail_k.size() / kBlocks;
      double sk = 0.0, sv = 0.0;
      for (std::size_t j = lo; j < hi; ++j) {
        sk += tail_k[j];
        sv += tail_v[j];
      }
      const double cnt = static_cast<double>(hi - lo);
      ks.push_back(sk / cnt);
      vals.push_back(sv / cnt);
      positive = positive && sv > 0.0;
    }
  } else {
    ks = tail_k;
    vals = tail_v;
    for (double v : vals) positive = positive && v > 0.0;
  }
  if (positive && ks.size() >= 4) {
    const RateFit fit = fit_rate(ks, vals);
    est.last_quarter_slope = fit.slope;
    // Seed noise alone can push a flat trace past 0.02, so a slope within
    // three standard errors of zero also counts as flat.
    est.plateau = std::abs(fit.slope) < 0.02 || std::abs(fit.slope) < 3.0 * fit.stderr_slope;
  }
  return est;
}

FloorEstimate floor_estimate(const OperatorFamily& fam, const SolverConfig& cfg,
                             std::span<const RngStream> seeds, unsigned threads) {
  if (cfg.step.kind() != StepSchedule::Kind::constant ||
      cfg.batch.kind() != BatchSchedule::Kind::constant || cfg.batch.cap()) {
    throw InvalidArgument("floor_estimate needs a constant step and a constant batch");
  }
  const auto runs = run_many(fam, cfg, seeds, threads);
  return floor_from_runs(runs);
}

double rank_sum_p_less(std::span<const double> lower, std::span<const double> higher) {
  const std::size_t n1 = lower.size();
  const std::size_t n2 = higher.size();
  if (n1 == 0 || n2 == 0) throw InvalidArgument("rank_sum_p_less: empty sample");
  struct Item {
    double v;
    int group;
  };
  std::vector<Item> all;
  for (double v : lower) all.push_back({v, 0});
  for (double v : higher) all.push_back({v, 1});
  std::sort(all.begin(), all.end(), [](const Item& a, const Item& b) { return a.v < b.v; });
  const std::size_t N = all.size();
  std::vector<double> ranks(N);
  double tie_term = 0.0;
  for (std::size_t i = 0; i < N;) {
    std::size_t j = i;
    while (j + 1 < N && all[j + 1].v == all[i].v) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[t] = avg;
    const double tsize = static_cast<double>(j - i + 1);
    tie_term += tsize * tsize * tsize - tsize;
    i = j + 1;
  }
  double r1 = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    if (all[i].group == 0) r1 += ranks[i];
  }
  const double d1 = static_cast<double>(n1), d2 = static_cast<double>(n2);
  const double Nd = static_cast<double>(N);
  const double u1 = r1 - d1 * (d1 + 1.0) / 2.0;
  const double mu = d1 * d2 / 2.0;
  const double var = d1 * d2 / 12.0 * ((Nd + 1.0) - tie_term / (Nd * (Nd - 1.0)));
  if (!(var > 0.0)) return 1.0;
  // Small U supports "lower < higher".
  const double z = (u1 - mu + 0.5) / std::sqrt(var);
  return 0.5 * std::erfc(-z / std::sqrt(2.0));
}

namespace {

class CheckBook {
 public:
  explicit CheckBook(AuditReport& rep) : rep_(rep) {}

  void record(const std::string& name, std::uint64_t step, double slack, double tol) {
    auto it = std::find_if(rep_.checks.begin(), rep_.checks.end(),
                           [&](const AuditCheck& c) { return c.name == name; });
    if (it == rep_.checks.end()) {
      rep_.checks.push_back({name, 0, 0, std::numeric_limits<double>::infinity()});
      it = std::prev(rep_.checks.end());
    }
    ++it->evaluations;
    it->worst_slack = std::min(it->worst_slack, slack);
    if (slack < -tol) {
      ++it->violations;
      rep_.violations.push_back({name, step, slack});
    }
  }

 private:
  AuditReport& rep_;
};

}  // namespace

AuditReport inequality_audit(const AuditSetup& setup, RngStream& rng) {
  if (!setup.family) throw InvalidArgument("inequality_audit: no family");
  const OperatorFamily& fam = *setup.family;
  const std::size_t n = fam.size();
  const std::size_t b = setup.batch;
  const std::uint64_t outcomes = batch_outcome_count(n, b, kAuditEnumerationBudget);
  require_same_dim(setup.x0.size(), fam.dim(), "audit x0");
  require_same_dim(setup.x_star.size(), fam.dim(), "audit x_star");

  constexpr double kExactTol = 1e-12;
  constexpr double kIneqTol = 1e-10;
  AuditReport rep;
  CheckBook book(rep);
  const double inv_outcomes = 1.0 / static_cast<double>(outcomes);
  const double bd = static_cast<double>(b);

  Vector x = setup.x0;
  for (std::uint64_t k = 0; k < setup.steps; ++k) {
    const double alpha = setup.step.step_at(k);
    const Vector tx = apply_mean(fam, x);
    const double res = (x - tx).norm();
    const double v1 = empirical_variance_exact(fam, x, 1);
    const double vb_bound = v1 / bd;
    const Vector y = x + rng.normal_vector(fam.dim());
    const Vector ty = apply_mean(fam, y);

    Vector mean_map = Vector::Zero(fam.dim());
    double var_b = 0.0, e_to_ystar = 0.0, e_to_y = 0.0, e_self = 0.0, e_desc = 0.0, e_drift = 0.0;
    for_each_batch(
        n, b,
        [&](std::span<const std::size_t> idx) {
          const Vector txi = apply_minibatch(fam, x, idx);
          mean_map += txi;
          var_b += (txi - tx).squaredNorm();
          e_to_ystar += (txi - setup.x_star).squaredNorm();
          e_to_y += (txi - ty).squaredNorm();
          e_self += (x - txi).squaredNorm();
          const Vector next = (1.0 - alpha) * x + alpha * txi;
          e_desc += (next - setup.x_star).squaredNorm();
          e_drift += residual(fam, next);
        },
        kAuditEnumerationBudget);
    mean_map *= inv_outcomes;
    var_b *= inv_outcomes;
    e_to_ystar *= inv_outcomes;
    e_to_y *= inv_outcomes;
    e_self *= inv_outcomes;
    e_desc *= inv_outcomes;
    e_drift *= inv_outcomes;

    const double scale_map = std::max(1.0, tx.norm());
    book.record("unbiasedness", k, kExactTol * scale_map - (mean_map - tx).norm(), 0.0);
    book.record("variance-scaling", k, kExactTol * std::max(1.0, v1) - std::abs(var_b - vb_bound),
                0.0);
    const double d_star = (x - setup.x_star).squaredNorm();
    book.record("minibatch-nonexpansive(y=x*)", k, d_star + vb_bound - e_to_ystar, kIneqTol);
    book.record("minibatch-nonexpansive(y random)", k, (x - y).squaredNorm() + vb_bound - e_to_y,
                kIneqTol);
    book.record("sandwich-lower", k, e_self - res * res, kIneqTol);
    book.record("sandwich-upper", k, res * res + vb_bound - e_self, kIneqTol);
    book.record("descent", k, d_star + vb_bound * alpha - alpha * (1.0 - alpha) * res * res - e_desc,
                kIneqTol);
    book.record("residual-drift", k, res + 2.0 * std::sqrt(vb_bound) - e_drift, kIneqTol);

    const auto idx = draw_indices(rng, n, b);
    x = km_step(fam, x, alpha, idx);
  }
  return rep;
}

}  // namespace kmsolve
