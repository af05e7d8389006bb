// Copyright 2026 The kmsolve Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "kmsolve/analysis.hpp"
#include "kmsolve/core.hpp"

namespace kmsolve::cli {

/// Shortest-safe decimal form with 17 significant digits; parses back to the
/// identical double.
std::string format_double(double v);

/// Header `k,alpha,batch,residual,dist_to_fixed`, one row per record, '\n'
/// line endings. An absent dist_to_fixed is an empty field.
void write_trace_csv(std::ostream& out, const std::vector<TraceRecord>& records);

/// Inverse of write_trace_csv. Throws InvalidArgument on malformed input.
std::vector<TraceRecord> parse_trace_csv(std::istream& in);

/// Header `K,min_mean_residual,theoretical_bound,slope,stderr`. The bound is
/// empty when unavailable; slope and stderr repeat the fit on every row and
/// are empty when no fit exists.
void write_rate_report_csv(std::ostream& out, const RateReport& report);

}  // namespace kmsolve::cli
