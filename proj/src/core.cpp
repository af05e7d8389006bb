// Copyright 2026 The kmsolve Authors
// SPDX-License-Identifier: Apache-2.0

#include "kmsolve/core.hpp"

#include <cmath>
#include <numbers>

namespace kmsolve {

bool is_finite(const Vector& x) noexcept {
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i])) return false;
  }
  return true;
}

void require_finite(const Vector& x, const char* what) {
  if (!is_finite(x)) {
    throw InvalidArgument(std::string(what) + ": non-finite entry");
  }
}

void require_same_dim(Eigen::Index a, Eigen::Index b, const char* what) {
  if (a != b) {
    throw InvalidArgument(std::string(what) + ": dimension mismatch (" + std::to_string(a) +
                          " vs " + std::to_string(b) + ")");
  }
}

double vec_norm(const Vector& x) {
  require_finite(x, "vec_norm");
  return x.norm();
}

namespace {

std::seed_seq make_seed_seq(std::uint64_t seed, std::uint64_t stream_id) {
  return std::seed_seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                       static_cast<std::uint32_t>(stream_id),
                       static_cast<std::uint32_t>(stream_id >> 32)};
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id) {
  auto seq = make_seed_seq(seed, stream_id);
  engine_.seed(seq);
}

namespace {
__extension__ using u128 = unsigned __int128;
}  // namespace

std::uint64_t RngStream::uniform_below(std::uint64_t bound) {
  if (bound == 0) throw InvalidArgument("uniform_below: bound must be positive");
  // Lemire, "Fast Random Integer Generation in an Interval" (2019).
  u128 m = static_cast<u128>(engine_()) * bound;
  auto low = static_cast<std::uint64_t>(m);
  if (low < bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    while (low < threshold) {
      m = static_cast<u128>(engine_()) * bound;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

double RngStream::uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double RngStream::normal() {
  if (cached_normal_) {
    const double z = *cached_normal_;
    cached_normal_.reset();
    return z;
  }
  // 1 - U lies in (0, 1], so the log is finite.
  const double u1 = 1.0 - uniform01();
  const double u2 = uniform01();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  cached_normal_ = radius * std::sin(angle);
  return radius * std::cos(angle);
}

Vector RngStream::normal_vector(Eigen::Index d) {
  Vector v(d);
  for (Eigen::Index i = 0; i < d; ++i) v[i] = normal();
  return v;
}

Vector RngStream::unit_vector(Eigen::Index d) {
  for (;;) {
    Vector v = normal_vector(d);
    const double nrm = v.norm();
    if (nrm > 1e-12) return v / nrm;
  }
}

std::vector<std::size_t> draw_indices(RngStream& rng, std::size_t n, std::size_t b) {
  if (n == 0) throw InvalidArgument("draw_indices: n must be positive");
  if (b == 0) throw InvalidArgument("draw_indices: b must be positive");
  std::vector<std::size_t> out(b);
  for (auto& idx : out) idx = static_cast<std::size_t>(rng.uniform_below(n));
  return out;
}

std::vector<std::uint64_t> draw_counts(RngStream& rng, std::size_t n, std::uint64_t b) {
  if (n == 0) throw InvalidArgument("draw_counts: n must be positive");
  if (b == 0) throw InvalidArgument("draw_counts: b must be positive");
  std::vector<std::uint64_t> counts(n, 0);
  for (std::uint64_t j = 0; j < b; ++j) ++counts[rng.uniform_below(n)];
  return counts;
}

std::vector<std::uint64_t> tally_indices(std::span<const std::size_t> indices, std::size_t n) {
  if (indices.empty()) throw InvalidArgument("batch index sequence is empty");
  std::vector<std::uint64_t> counts(n, 0);
  for (std::size_t idx : indices) {
    if (idx >= n) {
      throw InvalidArgument("batch index " + std::to_string(idx) + " out of range [0, " +
                            std::to_string(n) + ")");
    }
    ++counts[idx];
  }
  return counts;
}

}  // namespace kmsolve
