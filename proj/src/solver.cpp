// Copyright 2026 The kmsolve Authors
// SPDX-License-Identifier: Apache-2.0

#include "kmsolve/solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <exception>
#include <limits>
#include <mutex>
#include <numeric>
#include <string>
#include <thread>

namespace kmsolve {

namespace {

void check_alpha(double alpha, StepCheck check) {
  const bool ok = check == StepCheck::strict ? (alpha > 0.0 && alpha <= 1.0)
                                             : (alpha >= 0.0 && alpha <= 1.0);
  if (!ok) {
    throw InvalidArgument("step size alpha=" + std::to_string(alpha) + " outside (0, 1]");
  }
}

class Fnv1a {
 public:
  void bytes(const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
      h_ ^= p[i];
      h_ *= 0x100000001b3ULL;
    }
  }
  void u64(std::uint64_t v) { bytes(&v, sizeof v); }
  void f64(double v) {
    std::uint64_t bits = 0;
    std::memcpy(&bits, &v, sizeof v);
    u64(bits);
  }
  void str(const char* s) { bytes(s, std::strlen(s)); }
  void vec(const Vector& v) {
    u64(static_cast<std::uint64_t>(v.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) f64(v[i]);
  }
  void mat(const Matrix& m) {
    u64(static_cast<std::uint64_t>(m.rows()));
    u64(static_cast<std::uint64_t>(m.cols()));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) f64(m(r, c));
  }
  std::uint64_t value() const { return h_; }

 private:
  std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

void hash_component(Fnv1a& h, const ComponentOperator& op) {
  h.str(op.kind_name());
  std::visit(
      [&](const auto& k) {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, HalfspaceProjection>) {
          h.vec(k.normal);
          h.f64(k.offset);
        } else if constexpr (std::is_same_v<K, BallProjection>) {
          h.vec(k.center);
          h.f64(k.radius);
        } else if constexpr (std::is_same_v<K, BoxProjection>) {
          h.vec(k.lower);
          h.vec(k.upper);
        } else if constexpr (std::is_same_v<K, CocoerciveStep>) {
          h.f64(k.beta);
          h.mat(k.M);
          h.vec(k.zero);
        } else if constexpr (std::is_same_v<K, GradientStep>) {
          h.f64(k.eta);
          h.mat(k.A);
          h.vec(k.y);
        } else if constexpr (std::is_same_v<K, LinearScaling>) {
          h.u64(static_cast<std::uint64_t>(k.dim));
          h.f64(k.factor);
        } else {
          h.f64(k.factor);
          hash_component(h, *k.inner);
        }
      },
      op.kind());
}

void validate(const OperatorFamily& fam, const SolverConfig& cfg) {
  if (cfg.K == 0) throw InvalidArgument("solver: K must be positive");
  if (cfg.residual_cadence == 0) throw InvalidArgument("solver: residual cadence must be positive");
  require_same_dim(cfg.x0.size(), fam.dim(), "solver x0");
  require_finite(cfg.x0, "solver x0");
  if (cfg.region) {
    require_same_dim(cfg.region->center.size(), fam.dim(), "certified region");
    if (!(cfg.region->radius > 0.0)) throw InvalidArgument("certified region radius must be > 0");
  }
}

double percentile(std::vector<double> values, double q) {
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

}  // namespace

Vector km_step_counts(const OperatorFamily& fam, const Vector& x, double alpha,
                      std::span<const std::uint64_t> counts, StepCheck check) {
  check_alpha(alpha, check);
  if (alpha == 1.0) return apply_minibatch_counts(fam, x, counts);
  // x + alpha * sum_i (c_i / b) (T_i(x) - x): every term vanishes at a common
  // fixed point, so such points are reproduced bit for bit.
  require_same_dim(x.size(), fam.dim(), "km_step");
  if (counts.size() != fam.size()) throw InvalidArgument("km_step: counts must have one entry per component");
  const double b = static_cast<double>(std::accumulate(counts.begin(), counts.end(), std::uint64_t{0}));
  if (b == 0.0) throw InvalidArgument("km_step: empty batch");
  Vector dir = Vector::Zero(x.size());
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] == 0) continue;
    dir += (static_cast<double>(counts[i]) / b) * (apply_component(fam.component(i), x) - x);
  }
  return x + alpha * dir;
}

Vector km_step(const OperatorFamily& fam, const Vector& x, double alpha,
               std::span<const std::size_t> indices, StepCheck check) {
  check_alpha(alpha, check);
  if (alpha == 1.0) return apply_minibatch(fam, x, indices);
  const auto counts = tally_indices(indices, fam.size());
  return km_step_counts(fam, x, alpha, counts, check);
}

std::uint64_t config_digest(const OperatorFamily& fam, const SolverConfig& cfg) {
  Fnv1a h;
  h.u64(cfg.K);
  h.u64(static_cast<std::uint64_t>(cfg.step.kind()));
  h.f64(cfg.step.parameter());
  const auto& b = cfg.batch;
  h.u64(static_cast<std::uint64_t>(b.kind()));
  h.f64(b.a());
  h.f64(b.b0());
  h.f64(b.c());
  h.f64(b.delta());
  h.u64(b.cap().value_or(0));
  h.vec(cfg.x0);
  h.u64(cfg.seed);
  h.u64(cfg.stream_id);
  h.u64(cfg.residual_cadence);
  h.u64(fam.size());
  for (const auto& c : fam.components()) hash_component(h, c);
  return h.value();
}

RunTrace run(const OperatorFamily& fam, const SolverConfig& cfg) {
  validate(fam, cfg);
  RunTrace trace;
  trace.config_digest = config_digest(fam, cfg);
  trace.records.reserve(static_cast<std::size_t>((cfg.K + cfg.residual_cadence - 1) /
                                                 cfg.residual_cadence + 1));
  RngStream rng(cfg.seed, cfg.stream_id);
  const auto& hint = fam.fixed_point_hint();

  auto record = [&](std::uint64_t k, const Vector& x, double alpha, std::uint64_t b) {
    TraceRecord r;
    r.k = static_cast<std::size_t>(k);
    r.alpha = alpha;
    r.batch = b;
    r.residual = residual(fam, x);
    if (hint) r.dist_to_fixed = (x - *hint).norm();
    trace.records.push_back(r);
  };
  auto check_region = [&](std::uint64_t k, const Vector& x) {
    if (cfg.region && (x - cfg.region->center).norm() > cfg.region->radius) {
      trace.region_violations.push_back(k);
    }
  };

  Vector x = cfg.x0;
  for (std::uint64_t k = 0; k < cfg.K; ++k) {
    const double alpha = cfg.step.step_at(k);
    const std::uint64_t b = cfg.batch.batch_at(k);
    if (k % cfg.residual_cadence == 0) record(k, x, alpha, b);
    check_region(k, x);
    if (b > cfg.draw_budget - trace.total_draws) {
      throw ResourceLimit("draw budget of " + std::to_string(cfg.draw_budget) +
                          " component draws exhausted at k=" + std::to_string(k) +
                          " (b_k=" + std::to_string(b) + ")");
    }
    trace.total_draws += b;
    if (cfg.sampler) {
      const auto idx = cfg.sampler(rng, fam.size(), b, k);
      if (idx.size() != b) throw InvalidArgument("index sampler returned a batch of wrong size");
      x = km_step(fam, x, alpha, idx);
    } else {
      const auto counts = draw_counts(rng, fam.size(), b);
      x = km_step_counts(fam, x, alpha, counts);
    }
    if (!is_finite(x)) {
      throw NumericFailure("non-finite iterate at k=" + std::to_string(k + 1), k + 1);
    }
  }
  check_region(cfg.K, x);
  record(cfg.K, x, cfg.step.step_at(cfg.K),
         static_cast<std::uint64_t>(std::min(cfg.batch.batch_value(cfg.K), 0x1p63)));
  trace.final_iterate = std::move(x);
  return trace;
}

std::vector<RunTrace> run_many(const OperatorFamily& fam, const SolverConfig& cfg,
                               std::span<const RngStream> seeds, unsigned threads) {
  std::vector<RunTrace> out(seeds.size());
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(seeds.size()));

  auto run_one = [&](std::size_t i) {
    SolverConfig local = cfg;
    local.seed = seeds[i].seed();
    local.stream_id = seeds[i].stream_id();
    out[i] = run(fam, local);
  };

  if (threads <= 1) {
    for (std::size_t i = 0; i < seeds.size(); ++i) run_one(i);
    return out;
  }

  std::mutex mu;
  std::size_t next = 0;
  std::size_t first_failed = std::numeric_limits<std::size_t>::max();
  std::exception_ptr failure;
  {
    std::vector<std::jthread> workers;
    workers.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) {
      workers.emplace_back([&] {
        for (;;) {
          std::size_t i = 0;
          {
            std::lock_guard lock(mu);
            if (next >= seeds.size()) return;
            i = next++;
          }
          try {
            run_one(i);
          } catch (...) {
            std::lock_guard lock(mu);
            if (i < first_failed) {
              first_failed = i;
              failure = std::current_exception();
            }
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

AggregateTrace aggregate(std::span<const RunTrace> runs) {
  if (runs.empty()) throw InvalidArgument("aggregate: no runs");
  const auto& first = runs.front().records;
  for (const auto& r : runs) {
    if (r.records.size() != first.size()) {
      throw InvalidArgument("aggregate: runs recorded different iteration sets");
    }
  }
  AggregateTrace agg;
  agg.runs = runs.size();
  const double m = static_cast<double>(runs.size());
  double best = std::numeric_limits<double>::infinity();
  std::vector<double> column(runs.size());
  for (std::size_t j = 0; j < first.size(); ++j) {
    // Deviations from the first run, so identical runs give that value exactly.
    double dev = 0.0;
    for (std::size_t s = 0; s < runs.size(); ++s) {
      if (runs[s].records[j].k != first[j].k) {
        throw InvalidArgument("aggregate: runs recorded different iteration sets");
      }
      column[s] = runs[s].records[j].residual;
      dev += column[s] - column[0];
    }
    const double mean = column[0] + dev / m;
    double ss = 0.0;
    for (double v : column) ss += (v - mean) * (v - mean);
    const double sd = runs.size() > 1 ? std::sqrt(ss / (m - 1.0)) : 0.0;
    best = std::min(best, mean);
    agg.k.push_back(first[j].k);
    agg.mean.push_back(mean);
    agg.running_min_mean.push_back(best);
    agg.p10.push_back(percentile(column, 0.10));
    agg.p90.push_back(percentile(column, 0.90));
    agg.stderr_mean.push_back(sd / std::sqrt(m));
  }
  return agg;
}

AggregateTrace expected_trace(const OperatorFamily& fam, const SolverConfig& cfg,
                              std::span<const RngStream> seeds, unsigned threads) {
  if (seeds.size() < 2) throw InvalidArgument("expected_trace needs at least two seeds");
  const auto runs = run_many(fam, cfg, seeds, threads);
  return aggregate(runs);
}

std::vector<RngStream> make_seeds(std::uint64_t base_seed, std::size_t count) {
  std::vector<RngStream> seeds;
  seeds.reserve(count);
  for (std::size_t i = 0; i < count; ++i) seeds.emplace_back(base_seed, i);
  return seeds;
}

}  // namespace kmsolve
