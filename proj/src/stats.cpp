// Copyright 2026 The gpx Authors
// SPDX-License-Identifier: Apache-2.0

#include "gpx/stats.hpp"

#include <algorithm>
#include <cmath>

#include "gpx/error.hpp"

namespace gpx {

namespace {

void check_sample(std::span<const double> s, const char* who) {
  if (s.size() < 10) throw DataError(std::string(who) + ": sample size must be >= 10");
  for (double x : s)
    if (!std::isfinite(x)) throw DataError(std::string(who) + ": non-finite sample value");
}

std::vector<double> sorted_copy(std::span<const double> s) {
  std::vector<double> v(s.begin(), s.end());
  std::sort(v.begin(), v.end());
  return v;
}

}  // namespace

Ecdf::Ecdf(std::vector<double> sample) : sorted_(std::move(sample)) {
  for (double x : sorted_)
    if (std::isnan(x)) throw DataError("Ecdf: NaN sample value");
  std::sort(sorted_.begin(), sorted_.end());
}

double Ecdf::operator()(double x) const {
  if (sorted_.empty()) return 0.0;
  const auto it = std::upper_bound(sorted_.begin(), sorted_.end(), x);
  return static_cast<double>(it - sorted_.begin()) / static_cast<double>(sorted_.size());
}

double ks_coefficient(double level) {
  if (level == 0.1) return 1.224;
  if (level == 0.05) return 1.358;
  if (level == 0.01) return 1.628;
  throw ParameterError("ks_coefficient: level must be 0.1, 0.05 or 0.01");
}

double KsResult::critical(double level) const {
  const double c = ks_coefficient(level);
  if (n_b == 0) return c / std::sqrt(static_cast<double>(n_a));
  const double m = static_cast<double>(n_a);
  const double n = static_cast<double>(n_b);
  return c * std::sqrt((m + n) / (m * n));
}

KsResult ks_one_sample(std::span<const double> sample, const std::function<double(double)>& cdf) {
  check_sample(sample, "ks_one_sample");
  const auto v = sorted_copy(sample);
  const double n = static_cast<double>(v.size());
  double d = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double f = cdf(v[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return {d, v.size(), 0};
}

KsResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
  check_sample(a, "ks_two_sample");
  check_sample(b, "ks_two_sample");
  const auto x = sorted_copy(a);
  const auto y = sorted_copy(b);
  const double m = static_cast<double>(x.size());
  const double n = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double t = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == t) ++i;
    while (j < y.size() && y[j] == t) ++j;
    d = std::max(d, std::fabs(static_cast<double>(i) / m - static_cast<double>(j) / n));
  }
  return {d, x.size(), y.size()};
}

MeanStderr mc_stderr(std::span<const double> values) {
  if (values.size() < 2) throw DataError("mc_stderr: need at least 2 values");
  RunningMoments acc;
  for (double x : values) acc.push(x);
  return {acc.mean, acc.std_error()};
}

double sorted_quantile(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw DataError("sorted_quantile: empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw ParameterError("sorted_quantile: p outside [0, 1]");
  const double h = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

void RunningMoments::push(double x) {
  ++count;
  const double delta = x - mean;
  mean += delta / static_cast<double>(count);
  m2 += delta * (x - mean);
}

void RunningMoments::merge(const RunningMoments& other) {
  if (other.count == 0) return;
  if (count == 0) {
    *this = other;
    return;
  }
  const double na = static_cast<double>(count);
  const double nb = static_cast<double>(other.count);
  const double delta = other.mean - mean;
  const double total = na + nb;
  mean += delta * nb / total;
  m2 += other.m2 + delta * delta * na * nb / total;
  count += other.count;
}

double RunningMoments::std_error() const {
  return count > 1 ? std::sqrt(variance() / static_cast<double>(count)) : 0.0;
}

}  // namespace gpx
