// Copyright 2026 The kmsolve Authors
// SPDX-License-Identifier: Apache-2.0

#include "kmsolve/cli/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace kmsolve::cli {
namespace {

struct Entry {
  std::string value;
  std::size_t line = 0;
};

std::string_view trim(std::string_view s) {
  const auto ws = " \t\r";
  const auto first = s.find_first_not_of(ws);
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(ws);
  return s.substr(first, last - first + 1);
}

const std::set<std::string, std::less<>>& known_keys() {
  static const std::set<std::string, std::less<>> keys = {
      "problem.kind",   "problem.d",         "problem.n",          "problem.seed",
      "problem.spread", "problem.beta_fraction", "problem.eta_fraction",
      "problem.start_distance", "step.kind",  "step.alpha",        "step.a",
      "batch.kind",     "batch.b",           "batch.a",            "batch.b0",
      "batch.c",        "batch.delta",       "batch.cap",          "K",
      "K_grid",         "seeds.count",       "seeds.base",         "residual_cadence",
      "draw_budget",    "output"};
  return keys;
}

class Reader {
 public:
  explicit Reader(std::map<std::string, Entry, std::less<>> entries)
      : entries_(std::move(entries)) {}

  bool has(std::string_view key) const { return entries_.count(key) != 0; }

  std::size_t line_of(std::string_view key) const {
    auto it = entries_.find(key);
    return it == entries_.end() ? 0 : it->second.line;
  }

  const std::string& raw(std::string_view key) {
    auto it = entries_.find(key);
    if (it == entries_.end()) throw ConfigError(0, "config: missing required key '" + std::string(key) + "'");
    used_.insert(std::string(key));
    return it->second.value;
  }

  double real(std::string_view key) {
    const auto& v = raw(key);
    double out = 0.0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size() || !std::isfinite(out))
      fail(key, "expected a finite number, got '" + v + "'");
    return out;
  }

  std::uint64_t integer(std::string_view key) { return parse_uint(key, raw(key)); }

  std::uint64_t parse_uint(std::string_view key, std::string_view v) {
    std::uint64_t out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size())
      fail(key, "expected a non-negative integer, got '" + std::string(v) + "'");
    return out;
  }

  double real_or(std::string_view key, double fallback) { return has(key) ? real(key) : fallback; }

  [[noreturn]] void fail(std::string_view key, const std::string& msg) const {
    throw ConfigError(line_of(key),
                      "config:" + std::to_string(line_of(key)) + ": " + std::string(key) + ": " + msg);
  }

  /// Any key present but never read does not apply to the chosen kinds.
  void reject_unused() const {
    for (const auto& [key, entry] : entries_) {
      if (!used_.count(key)) {
        throw ConfigError(entry.line, "config:" + std::to_string(entry.line) + ": key '" + key +
                                          "' does not apply to the selected kinds");
      }
    }
  }

 private:
  std::map<std::string, Entry, std::less<>> entries_;
  std::set<std::string> used_;
};

template <class F>
auto guarded(Reader& r, std::string_view key, F&& f) {
  try {
    return f();
  } catch (const InvalidArgument& e) {
    r.fail(key, e.what());
  }
}

}  // namespace

ExperimentConfig parse_config(std::string_view text) {
  std::map<std::string, Entry, std::less<>> entries;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string prefix = "config:" + std::to_string(line_no) + ": ";
    if (eq == std::string_view::npos) throw ConfigError(line_no, prefix + "expected 'key = value'");
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    if (!known_keys().count(key)) throw ConfigError(line_no, prefix + "unknown key '" + key + "'");
    if (value.empty()) throw ConfigError(line_no, prefix + "empty value for '" + key + "'");
    if (entries.count(key)) throw ConfigError(line_no, prefix + "duplicate key '" + key + "'");
    entries.emplace(key, Entry{value, line_no});
  }

  Reader r(std::move(entries));
  ExperimentConfig cfg;

  auto& p = cfg.problem;
  p.kind = guarded(r, "problem.kind", [&] { return parse_problem_kind(r.raw("problem.kind")); });
  const auto d = r.integer("problem.d");
  if (d < 1 || d > (1u << 20)) r.fail("problem.d", "must be in [1, 2^20]");
  p.d = static_cast<Eigen::Index>(d);
  p.n = r.integer("problem.n");
  if (p.n < 1) r.fail("problem.n", "must be at least 1");
  p.seed = r.has("problem.seed") ? r.integer("problem.seed") : 0;
  switch (p.kind) {
    case ProblemKind::feasibility:
      p.spread = r.real_or("problem.spread", 1.0);
      if (!(p.spread > 0)) r.fail("problem.spread", "must be positive");
      break;
    case ProblemKind::zero_point:
      p.beta_fraction = r.real_or("problem.beta_fraction", 0.5);
      if (!(p.beta_fraction > 0 && p.beta_fraction <= 1))
        r.fail("problem.beta_fraction", "must be in (0, 1]");
      p.start_distance = r.real_or("problem.start_distance", 2.0);
      break;
    case ProblemKind::minimization:
      p.eta_fraction = r.real_or("problem.eta_fraction", 0.5);
      if (!(p.eta_fraction > 0 && p.eta_fraction <= 1))
        r.fail("problem.eta_fraction", "must be in (0, 1]");
      p.start_distance = r.real_or("problem.start_distance", 2.0);
      break;
  }
  if (p.kind != ProblemKind::feasibility && !(p.start_distance > 0))
    r.fail("problem.start_distance", "must be positive");

  const auto& step_kind = r.raw("step.kind");
  if (step_kind == "constant") {
    cfg.step = guarded(r, "step.alpha", [&] { return StepSchedule::constant(r.real("step.alpha")); });
  } else if (step_kind == "diminishing") {
    cfg.step = guarded(r, "step.a", [&] { return StepSchedule::diminishing(r.real("step.a")); });
  } else {
    r.fail("step.kind", "expected constant or diminishing, got '" + step_kind + "'");
  }

  const auto& batch_kind = r.raw("batch.kind");
  if (batch_kind == "constant") {
    cfg.batch = guarded(r, "batch.b", [&] { return BatchSchedule::constant(r.integer("batch.b")); });
  } else if (batch_kind == "polynomial") {
    cfg.batch = guarded(r, "batch.kind", [&] {
      return BatchSchedule::polynomial(r.real("batch.a"), r.real("batch.b0"), r.real("batch.c"));
    });
  } else if (batch_kind == "exponential") {
    cfg.batch = guarded(r, "batch.kind", [&] {
      return BatchSchedule::exponential(r.real("batch.b0"), r.real("batch.delta"));
    });
  } else {
    r.fail("batch.kind", "expected constant, polynomial or exponential, got '" + batch_kind + "'");
  }
  if (r.has("batch.cap")) {
    cfg.batch = guarded(r, "batch.cap", [&] { return cfg.batch.with_cap(r.integer("batch.cap")); });
  }

  if (r.has("K_grid")) {
    const auto& v = r.raw("K_grid");
    std::string_view rest = v;
    while (true) {
      const auto comma = rest.find(',');
      const auto item = trim(rest.substr(0, comma));
      const auto k = r.parse_uint("K_grid", item);
      if (k < 1) r.fail("K_grid", "entries must be positive");
      if (!cfg.K_grid.empty() && k <= cfg.K_grid.back()) r.fail("K_grid", "entries must be strictly increasing");
      cfg.K_grid.push_back(k);
      if (comma == std::string_view::npos) break;
      rest = rest.substr(comma + 1);
    }
  }
  if (r.has("K")) {
    cfg.K = r.integer("K");
    if (cfg.K < 1) r.fail("K", "must be at least 1");
    if (!cfg.K_grid.empty() && cfg.K_grid.back() > cfg.K) r.fail("K_grid", "entries must not exceed K");
  } else if (!cfg.K_grid.empty()) {
    cfg.K = cfg.K_grid.back();
  } else {
    r.raw("K");  // reports the missing key
  }

  if (r.has("seeds.count")) {
    cfg.seed_count = r.integer("seeds.count");
    if (cfg.seed_count < 1) r.fail("seeds.count", "must be at least 1");
  }
  if (r.has("seeds.base")) cfg.base_seed = r.integer("seeds.base");
  if (r.has("residual_cadence")) {
    cfg.residual_cadence = r.integer("residual_cadence");
    if (cfg.residual_cadence < 1) r.fail("residual_cadence", "must be at least 1");
  }
  if (r.has("draw_budget")) {
    cfg.draw_budget = r.integer("draw_budget");
    if (cfg.draw_budget < 1) r.fail("draw_budget", "must be at least 1");
  }
  if (r.has("output")) cfg.output = r.raw("output");

  r.reject_unused();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(0, "config: cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

ProblemInstance make_instance(const ProblemSpec& spec) {
  RngStream rng(spec.seed, 0);
  switch (spec.kind) {
    case ProblemKind::feasibility:
      return gen_feasibility(spec.d, spec.n, rng, spec.spread);
    case ProblemKind::zero_point:
      return gen_zero_point(spec.d, spec.n, rng, spec.beta_fraction, spec.start_distance);
    case ProblemKind::minimization:
      return gen_minimization(spec.d, spec.n, rng, spec.eta_fraction, spec.start_distance);
  }
  throw InvalidArgument("unknown problem kind");
}

}  // namespace kmsolve::cli
