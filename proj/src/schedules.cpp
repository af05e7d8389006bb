// Copyright 2026 The kmsolve Authors
// SPDX-License-Identifier: Apache-2.0

#include "kmsolve/schedules.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "kmsolve/core.hpp"

namespace kmsolve {

namespace {

constexpr double kMaxBatch = 9223372036854775808.0;  // 2^63

}  // namespace

StepSchedule StepSchedule::constant(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw InvalidArgument("constant step size alpha=" + std::to_string(alpha) +
                          " outside (0, 1)");
  }
  return {Kind::constant, alpha};
}

StepSchedule StepSchedule::diminishing(double a) {
  if (!(a > 0.0 && a <= 1.0)) {
    throw InvalidArgument("diminishing step exponent a=" + std::to_string(a) + " outside (0, 1]");
  }
  return {Kind::diminishing, a};
}

double StepSchedule::step_at(std::uint64_t k) const {
  if (kind_ == Kind::constant) return param_;
  return 1.0 / std::pow(static_cast<double>(k) + 1.0, param_);
}

BatchSchedule BatchSchedule::constant(std::uint64_t b) {
  if (b == 0) throw InvalidArgument("constant batch size must be positive");
  return {Kind::constant, static_cast<double>(b), 0.0, 0.0, 0.0};
}

BatchSchedule BatchSchedule::polynomial(double a, double b0, double c) {
  if (!(a > 0.0) || !std::isfinite(a)) throw InvalidArgument("polynomial batch: a must be > 0");
  if (!(b0 > 0.0) || !std::isfinite(b0)) throw InvalidArgument("polynomial batch: b0 must be > 0");
  if (!(c > 1.0) || !std::isfinite(c)) throw InvalidArgument("polynomial batch: c must be > 1");
  return {Kind::polynomial, a, b0, c, 0.0};
}

BatchSchedule BatchSchedule::exponential(double b0, double delta) {
  if (!(b0 >= 1.0) || !std::isfinite(b0)) {
    throw InvalidArgument("exponential batch: b0 must be >= 1");
  }
  if (!(delta > 1.0) || !std::isfinite(delta)) {
    throw InvalidArgument("exponential batch: delta must be > 1");
  }
  return {Kind::exponential, 0.0, b0, 0.0, delta};
}

BatchSchedule BatchSchedule::with_cap(std::uint64_t cap) const {
  if (cap == 0) throw InvalidArgument("batch cap must be positive");
  BatchSchedule out = *this;
  out.cap_ = cap;
  return out;
}

double BatchSchedule::batch_value(std::uint64_t k) const {
  const double kd = static_cast<double>(k);
  double raw = 0.0;
  switch (kind_) {
    case Kind::constant:
      raw = a_;
      break;
    case Kind::polynomial:
      raw = std::pow(a_ * kd + b0_, c_);
      break;
    case Kind::exponential:
      raw = b0_ * std::pow(delta_, kd);
      break;
  }
  double b = std::max(1.0, std::ceil(raw));
  if (cap_) b = std::min(b, static_cast<double>(*cap_));
  return b;
}

std::uint64_t BatchSchedule::batch_at(std::uint64_t k) const {
  const double b = batch_value(k);
  if (!(b < kMaxBatch)) {
    throw ResourceLimit("batch size at k=" + std::to_string(k) + " exceeds the 64-bit range");
  }
  return static_cast<std::uint64_t>(b);
}

double sum_alpha_one_minus_alpha(const StepSchedule& s, std::uint64_t K) {
  double acc = 0.0;
  for (std::uint64_t k = 0; k < K; ++k) {
    const double a = s.step_at(k);
    acc += a * (1.0 - a);
  }
  return acc;
}

double sum_inv_sqrt_batch(const BatchSchedule& s, std::uint64_t K) {
  double acc = 0.0;
  for (std::uint64_t k = 0; k < K; ++k) acc += 1.0 / std::sqrt(s.batch_value(k));
  return acc;
}

double sum_alpha_over_batch(const StepSchedule& step, const BatchSchedule& batch,
                            std::uint64_t K) {
  double acc = 0.0;
  for (std::uint64_t k = 0; k < K; ++k) acc += step.step_at(k) / batch.batch_value(k);
  return acc;
}

double step_sum_lower_bound(const StepSchedule& s, std::uint64_t K) {
  const double Kd = static_cast<double>(K);
  if (s.kind() == StepSchedule::Kind::constant) {
    const double alpha = s.parameter();
    return alpha * (1.0 - alpha) * Kd;
  }
  const double a = s.parameter();
  if (a == 1.0) return std::log(Kd + 1.0) - 2.0;
  if (a == 0.5) return 2.0 * std::sqrt(Kd + 1.0) - std::log(Kd) - 3.0;
  const double head = (std::pow(Kd + 1.0, 1.0 - a) - 1.0) / (1.0 - a);
  if (a < 0.5) return head - std::pow(Kd, 1.0 - 2.0 * a) / (1.0 - 2.0 * a);
  return head - 2.0 * a / (2.0 * a - 1.0);
}

ScheduleCertificate certify_conditions(const StepSchedule& step, const BatchSchedule& batch) {
  ScheduleCertificate cert;
  std::ostringstream notes;
  // Both step laws admitted by the constructors have a divergent sum.
  cert.divergent_step_sum = true;
  if (step.kind() == StepSchedule::Kind::constant) {
    notes << "step: alpha(1-alpha)K grows linearly; ";
  } else {
    notes << "step: 1/(k+1)^a with a <= 1 has a divergent sum of alpha_k(1-alpha_k); ";
  }

  switch (batch.kind()) {
    case BatchSchedule::Kind::constant:
      cert.summable_inv_sqrt_batch = false;
      notes << "batch: constant b gives sum 1/sqrt(b) = K/sqrt(b), divergent";
      break;
    case BatchSchedule::Kind::exponential:
      cert.summable_inv_sqrt_batch = true;
      notes << "batch: geometric decay of 1/sqrt(b_k), summable";
      break;
    case BatchSchedule::Kind::polynomial:
      if (batch.c() > 2.0) {
        cert.summable_inv_sqrt_batch = true;
        notes << "batch: 1/sqrt(b_k) ~ (ak)^(-c/2) with c/2 > 1, summable";
      } else {
        cert.summable_inv_sqrt_batch = false;
        notes << "batch: 1/sqrt(b_k) ~ (ak)^(-c/2) with c <= 2 is not summable; "
                 "the weaker requirement c > 1 only makes sum 1/b_k finite";
      }
      break;
  }
  if (batch.cap()) {
    cert.summable_inv_sqrt_batch = false;
    notes << "; cap " << *batch.cap() << " bounds b_k, so sum 1/sqrt(b_k) diverges";
  }
  cert.notes = notes.str();
  return cert;
}

bool alpha_over_batch_summable(const StepSchedule&, const BatchSchedule& batch) {
  return !batch.cap() && batch.kind() != BatchSchedule::Kind::constant;
}

double closed_form_B(const BatchSchedule& batch) {
  if (batch.cap()) throw InvalidArgument("closed_form_B: capped schedule has no finite B");
  switch (batch.kind()) {
    case BatchSchedule::Kind::polynomial:
      return (2.0 * batch.c() - 1.0) / ((batch.c() - 1.0) * std::min(batch.a(), batch.b0()));
    case BatchSchedule::Kind::exponential:
      return batch.delta() / ((batch.delta() - 1.0) * batch.b0());
    case BatchSchedule::Kind::constant:
      break;
  }
  throw InvalidArgument("closed_form_B: constant batch schedule has no finite B");
}

double exact_inv_sqrt_series(const BatchSchedule& batch) {
  if (batch.kind() != BatchSchedule::Kind::exponential || batch.cap()) {
    throw InvalidArgument("exact_inv_sqrt_series: uncapped exponential schedule required");
  }
  const double sd = std::sqrt(batch.delta());
  return sd / (std::sqrt(batch.b0()) * (sd - 1.0));
}

std::string to_string(const StepSchedule& s) {
  std::ostringstream os;
  os.precision(17);
  if (s.kind() == StepSchedule::Kind::constant) os << "constant(alpha=" << s.parameter() << ")";
  else os << "diminishing(a=" << s.parameter() << ")";
  return os.str();
}

std::string to_string(const BatchSchedule& s) {
  std::ostringstream os;
  os.precision(17);
  switch (s.kind()) {
    case BatchSchedule::Kind::constant:
      os << "constant(b=" << s.a() << ")";
      break;
    case BatchSchedule::Kind::polynomial:
      os << "polynomial(a=" << s.a() << ", b0=" << s.b0() << ", c=" << s.c() << ")";
      break;
    case BatchSchedule::Kind::exponential:
      os << "exponential(b0=" << s.b0() << ", delta=" << s.delta() << ")";
      break;
  }
  if (s.cap()) os << " cap=" << *s.cap();
  return os.str();
}

}  // namespace kmsolve
