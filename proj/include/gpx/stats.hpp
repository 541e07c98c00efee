// Copyright 2026 The gpx Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef GPX_STATS_HPP
#define GPX_STATS_HPP

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "gpx/rng.hpp"

namespace gpx {

// Right-continuous empirical distribution function.
class Ecdf {
 public:
  explicit Ecdf(std::vector<double> sample);

  double operator()(double x) const;
  std::size_t size() const noexcept { return sorted_.size(); }
  const std::vector<double>& sorted() const noexcept { return sorted_; }

 private:
  std::vector<double> sorted_;
};

// Asymptotic Kolmogorov coefficient c(level) for level in {0.1, 0.05, 0.01}.
double ks_coefficient(double level);

struct KsResult {
  double statistic = 0.0;
  std::size_t n_a = 0;
  std::size_t n_b = 0;  // 0 for one-sample tests
  double critical(double level) const;
  bool pass(double level = 0.01) const { return statistic <= critical(level); }
};

// D = sup |ECDF - cdf|. Throws DataError on non-finite values or n < 10.
KsResult ks_one_sample(std::span<const double> sample, const std::function<double(double)>& cdf);
// D = sup |ECDF_a - ECDF_b|.
KsResult ks_two_sample(std::span<const double> a, std::span<const double> b);

struct MeanStderr {
  double mean = 0.0;
  double std_error = 0.0;
};

// Mean and s / sqrt(n) with the unbiased variance.
MeanStderr mc_stderr(std::span<const double> values);

// Linear-interpolation quantile (type 7) of an ascending sample.
double sorted_quantile(std::span<const double> sorted, double p);

// Mean, M2 and count, mergeable in a fixed order (Chan et al.).
struct RunningMoments {
  std::size_t count = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void push(double x);
  void merge(const RunningMoments& other);
  double variance() const { return count > 1 ? m2 / static_cast<double>(count - 1) : 0.0; }
  double std_error() const;
};

// Re-run policy for statistical checks: a failing check is repeated once on
// stream.child("rerun"); the outcome fails only if both attempts fail.
struct RetryOutcome {
  bool pass = false;
  int attempts = 0;
};

template <class Check>
RetryOutcome with_rerun(const Stream& stream, Check&& check) {
  if (check(stream)) return {true, 1};
  return {static_cast<bool>(check(stream.child("rerun"))), 2};
}

}  // namespace gpx

#endif  // GPX_STATS_HPP
