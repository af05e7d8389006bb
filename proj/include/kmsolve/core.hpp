// Copyright 2026 The kmsolve Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace kmsolve {

/// Dense point of R^d. All library entry points reject non-finite entries.
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Raised when an argument violates a documented precondition.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a request exceeds an enumeration, integer-range or draw budget.
class ResourceLimit : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when an iterate stops being finite. Carries the iteration index.
class NumericFailure : public std::runtime_error {
 public:
  NumericFailure(const std::string& what, std::size_t iteration)
      : std::runtime_error(what), iteration_(iteration) {}
  std::size_t iteration() const noexcept { return iteration_; }

 private:
  std::size_t iteration_;
};

bool is_finite(const Vector& x) noexcept;

/// Throws InvalidArgument naming `what` if any entry of x is NaN or infinite.
void require_finite(const Vector& x, const char* what);

/// Throws InvalidArgument if the two dimensions differ.
void require_same_dim(Eigen::Index a, Eigen::Index b, const char* what);

/// Euclidean norm. Throws InvalidArgument on non-finite input.
double vec_norm(const Vector& x);

/// Seeded random stream.
///
/// The generator is std::mt19937_64 initialised through std::seed_seq from
/// the four 32-bit halves of (seed, stream_id); both algorithms are fixed by
/// the C++ standard, so index sequences are reproducible bit-for-bit on every
/// conforming platform. Bounded integers use Lemire's multiply-shift method
/// with rejection, and uniform reals take the top 53 bits of one word, so no
/// implementation-defined std:: distribution is involved.
///
/// A stream is single-owner mutable state. Parallel runs use distinct
/// stream_ids.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform on {0, ..., bound - 1}; bound must be positive.
  std::uint64_t uniform_below(std::uint64_t bound);
  /// Uniform on [0, 1).
  double uniform01();
  /// Standard normal via Box-Muller (one variate per call, the pair's
  /// second half is cached).
  double normal();
  /// Vector of i.i.d. standard normals.
  Vector normal_vector(Eigen::Index d);
  /// Uniform point on the unit sphere in R^d.
  Vector unit_vector(Eigen::Index d);

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
  std::optional<double> cached_normal_;
};

/// b i.i.d. uniform component indices in [0, n), sampled with replacement.
/// Throws InvalidArgument if n or b is zero.
std::vector<std::size_t> draw_indices(RngStream& rng, std::size_t n, std::size_t b);

/// Multiplicity of each component in a batch drawn exactly as draw_indices
/// would draw it (same stream consumption), without materialising the batch.
std::vector<std::uint64_t> draw_counts(RngStream& rng, std::size_t n, std::uint64_t b);

/// Tally of an explicit index sequence. Throws InvalidArgument on an empty
/// sequence or an index outside [0, n).
std::vector<std::uint64_t> tally_indices(std::span<const std::size_t> indices, std::size_t n);

/// One recorded iteration of a solver run.
struct TraceRecord {
  std::size_t k = 0;
  double alpha = 0.0;
  std::uint64_t batch = 0;
  double residual = 0.0;
  std::optional<double> dist_to_fixed;

  friend bool operator==(const TraceRecord&, const TraceRecord&) = default;
};

}  // namespace kmsolve
