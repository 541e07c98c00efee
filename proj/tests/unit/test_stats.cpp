// Copyright 2026 The gpx Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "gpx/error.hpp"
#include "gpx/stats.hpp"

using namespace gpx;

namespace {

double gumbel(double y) { return std::exp(-std::exp(-y)); }

std::vector<double> gumbel_draws(std::size_t n, const Stream& s) {
  Sampler rng(s);
  std::vector<double> x(n);
  for (double& v : x) v = -std::log(rng.exponential());
  return x;
}

}  // namespace

TEST(Ecdf, BoundsAndMonotone) {
  const Ecdf f({3.0, 1.0, 2.0, 2.0});
  EXPECT_EQ(f(0.5), 0.0);
  EXPECT_EQ(f(1.0), 0.25);
  EXPECT_EQ(f(2.0), 0.75);
  EXPECT_EQ(f(10.0), 1.0);
  double prev = 0.0;
  for (double x = 0.0; x < 4.0; x += 0.1) {
    EXPECT_GE(f(x), prev);
    prev = f(x);
  }
}

TEST(KsCoefficient, Levels) {
  EXPECT_NEAR(ks_coefficient(0.05), 1.358, 1e-3);
  EXPECT_NEAR(ks_coefficient(0.01), 1.628, 1e-3);
  EXPECT_NEAR(ks_coefficient(0.1), 1.224, 1e-3);
  EXPECT_THROW(ks_coefficient(0.2), ParameterError);
}

TEST(KsOneSample, NullCalibration) {
  int pass = 0;
  for (int seed = 0; seed < 100; ++seed) pass += ks_one_sample(gumbel_draws(100000, Stream(seed)), gumbel).pass(0.01);
  EXPECT_GE(pass, 96);  // 99% nominal; binomial slack
}

TEST(KsOneSample, GumbelLargeSample) {
  EXPECT_TRUE(ks_one_sample(gumbel_draws(100000, Stream(1000)), gumbel).pass(0.01));
}

TEST(KsOneSample, ConstantSampleFails) {
  const std::vector<double> x(1000, 0.0);
  EXPECT_GE(ks_one_sample(x, [](double v) { return 0.5 * std::erfc(-v / std::sqrt(2.0)); }).statistic, 0.5);
}

TEST(KsOneSample, InvariantUnderMonotoneTransform) {
  const auto x = gumbel_draws(5000, Stream(7));
  std::vector<double> y(x.size());
  std::transform(x.begin(), x.end(), y.begin(), [](double v) { return std::exp(v); });
  const double a = ks_one_sample(x, gumbel).statistic;
  const double b = ks_one_sample(y, [](double v) { return gumbel(std::log(v)); }).statistic;
  EXPECT_NEAR(a, b, 1e-12);
}

TEST(KsOneSample, Errors) {
  EXPECT_THROW(ks_one_sample(std::vector<double>(5, 0.0), gumbel), DataError);
  std::vector<double> x(20, 0.0);
  x[3] = std::nan("");
  EXPECT_THROW(ks_one_sample(x, gumbel), DataError);
}

TEST(KsTwoSample, Examples) {
  const auto x = gumbel_draws(1000, Stream(1));
  EXPECT_EQ(ks_two_sample(x, x).statistic, 0.0);
  std::vector<double> y(x.size());
  std::transform(x.begin(), x.end(), y.begin(), [](double v) { return v + 100.0; });
  EXPECT_EQ(ks_two_sample(x, y).statistic, 1.0);
}

TEST(KsTwoSample, SymmetricAndCalibrated) {
  int pass = 0;
  for (int seed = 0; seed < 100; ++seed) {
    const auto a = gumbel_draws(10000, Stream(seed).child(0));
    const auto b = gumbel_draws(10000, Stream(seed).child(1));
    const auto ab = ks_two_sample(a, b), ba = ks_two_sample(b, a);
    EXPECT_EQ(ab.statistic, ba.statistic);
    pass += ab.pass(0.01);
  }
  EXPECT_GE(pass, 96);
}

TEST(KsTwoSample, TiesHandled) {
  const std::vector<double> a{0, 0, 0, 0, 0, 1, 1, 1, 1, 1};
  const std::vector<double> b{0, 0, 0, 0, 0, 0, 0, 0, 1, 1};
  EXPECT_NEAR(ks_two_sample(a, b).statistic, 0.3, 1e-15);
}

TEST(McStderr, Examples) {
  EXPECT_EQ(mc_stderr(std::vector<double>(50, 3.0)).std_error, 0.0);
  std::vector<double> alt(100);
  for (int i = 0; i < 100; ++i) alt[i] = i % 2;
  const auto r = mc_stderr(alt);
  EXPECT_DOUBLE_EQ(r.mean, 0.5);
  EXPECT_NEAR(r.std_error, std::sqrt(0.25 * 100 / 99) / 10, 1e-15);
  EXPECT_NEAR(r.std_error, 0.0502, 1e-4);
}

TEST(McStderr, QuarterScaling) {
  Sampler rng(Stream(3));
  std::vector<double> x(160000);
  rng.fill_normal(x);
  const double a = mc_stderr(std::span<const double>(x.data(), 40000)).std_error;
  const double b = mc_stderr(x).std_error;
  EXPECT_NEAR(b / a, 0.5, 0.02);
}

TEST(RunningMoments, MergeMatchesDirect) {
  Sampler rng(Stream(4));
  std::vector<double> x(1001);
  rng.fill_normal(x);
  RunningMoments all, left, right;
  for (std::size_t i = 0; i < x.size(); ++i) {
    all.push(x[i]);
    (i < 400 ? left : right).push(x[i]);
  }
  left.merge(right);
  EXPECT_EQ(left.count, all.count);
  EXPECT_NEAR(left.mean, all.mean, 1e-14);
  EXPECT_NEAR(left.variance(), all.variance(), 1e-12);
  EXPECT_NEAR(all.std_error(), mc_stderr(x).std_error, 1e-12);
}

TEST(SortedQuantile, TypeSeven) {
  const std::vector<double> v{1, 2, 3, 4};
  EXPECT_DOUBLE_EQ(sorted_quantile(v, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(sorted_quantile(v, 0.5), 2.5);
  EXPECT_DOUBLE_EQ(sorted_quantile(v, 1.0), 4.0);
  EXPECT_DOUBLE_EQ(sorted_quantile(v, 1.0 / 3.0), 2.0);
}

TEST(WithRerun, Policy) {
  int calls = 0;
  auto fail_first = [&](const Stream& s) {
    ++calls;
    return !s.path().empty();
  };
  const auto r = with_rerun(Stream(1), fail_first);
  EXPECT_TRUE(r.pass);
  EXPECT_EQ(r.attempts, 2);
  const auto f = with_rerun(Stream(1), [](const Stream&) { return false; });
  EXPECT_FALSE(f.pass);
  EXPECT_EQ(f.attempts, 2);
  EXPECT_EQ(with_rerun(Stream(1), [](const Stream&) { return true; }).attempts, 1);
}
