// Copyright 2026 The kmsolve Authors
// SPDX-License-Identifier: Apache-2.0

#include "kmsolve/cli/csv.hpp"

#include <array>
#include <charconv>
#include <istream>
#include <ostream>

namespace kmsolve::cli {
namespace {

constexpr const char* kTraceHeader = "k,alpha,batch,residual,dist_to_fixed";

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const auto comma = line.find(',', pos);
    out.push_back(line.substr(pos, comma - pos));
    if (comma == std::string_view::npos) return out;
    pos = comma + 1;
  }
}

template <class T>
T parse_field(std::string_view s, std::size_t line) {
  T out{};
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (s.empty() || ec != std::errc() || p != s.data() + s.size()) {
    throw InvalidArgument("csv line " + std::to_string(line) + ": bad field '" + std::string(s) + "'");
  }
  return out;
}

}  // namespace

std::string format_double(double v) {
  std::array<char, 64> buf{};
  auto [p, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::general, 17);
  if (ec != std::errc()) throw InvalidArgument("format_double: conversion failed");
  return std::string(buf.data(), p);
}

void write_trace_csv(std::ostream& out, const std::vector<TraceRecord>& records) {
  std::string text = kTraceHeader;
  text += '\n';
  for (const auto& r : records) {
    text += std::to_string(r.k);
    text += ',';
    text += format_double(r.alpha);
    text += ',';
    text += std::to_string(r.batch);
    text += ',';
    text += format_double(r.residual);
    text += ',';
    if (r.dist_to_fixed) text += format_double(*r.dist_to_fixed);
    text += '\n';
  }
  out << text;
}

std::vector<TraceRecord> parse_trace_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kTraceHeader) throw InvalidArgument("csv: missing or wrong header");
  std::vector<TraceRecord> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split(line);
    if (f.size() != 5) throw InvalidArgument("csv line " + std::to_string(line_no) + ": expected 5 fields");
    TraceRecord r;
    r.k = parse_field<std::size_t>(f[0], line_no);
    r.alpha = parse_field<double>(f[1], line_no);
    r.batch = parse_field<std::uint64_t>(f[2], line_no);
    r.residual = parse_field<double>(f[3], line_no);
    if (!f[4].empty()) r.dist_to_fixed = parse_field<double>(f[4], line_no);
    out.push_back(r);
  }
  return out;
}

void write_rate_report_csv(std::ostream& out, const RateReport& report) {
  std::string text = "K,min_mean_residual,theoretical_bound,slope,stderr\n";
  for (std::size_t i = 0; i < report.K_grid.size(); ++i) {
    text += std::to_string(report.K_grid[i]);
    text += ',';
    text += format_double(report.min_mean_residual[i]);
    text += ',';
    if (!report.theoretical_bound.empty()) text += format_double(report.theoretical_bound[i]);
    text += ',';
    if (report.fit) text += format_double(report.fit->slope);
    text += ',';
    if (report.fit) text += format_double(report.fit->stderr_slope);
    text += '\n';
  }
  out << text;
}

}  // namespace kmsolve::cli
