// Copyright 2026 The gpx Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "gpx/error.hpp"
#include "gpx/gauss.hpp"
#include "gpx/io.hpp"
#include "gpx/reference.hpp"
#include "gpx/stats.hpp"

using namespace gpx;

namespace {

CovMatrix cov(const Eigen::MatrixXd& m) {
  std::vector<double> grid(m.rows());
  for (std::size_t i = 0; i < grid.size(); ++i) grid[i] = static_cast<double>(i);
  return CovMatrix(make_sites(grid), m);
}

double reconstruction_error(const CovMatrix& c) {
  return (c.factor() * c.factor().transpose() - c.values()).cwiseAbs().maxCoeff();
}

Eigen::MatrixXd random_spd(std::mt19937_64& gen, int k) {
  std::normal_distribution<double> nd;
  Eigen::MatrixXd a(k, k);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) a(i, j) = nd(gen);
  return a * a.transpose() / k + 0.1 * Eigen::MatrixXd::Identity(k, k);
}

}  // namespace

TEST(FbmCov, Examples) {
  EXPECT_EQ(fbm_cov({1.0}, 1.0).values()(0, 0), 1.0);
  Eigen::MatrixXd expect(2, 2);
  expect << 1, 1, 1, 2;
  EXPECT_TRUE(fbm_cov({1.0, 2.0}, 1.0).values().isApprox(expect, 1e-15));
  EXPECT_THROW(fbm_cov({1.0}, 0.0), ParameterError);
  EXPECT_THROW(fbm_cov({1.0}, 2.5), ParameterError);
}

TEST(Cholesky, IdentityFactor) {
  const auto c = cholesky_factor(cov(Eigen::MatrixXd::Identity(3, 3)));
  EXPECT_EQ(c.factor(), Eigen::MatrixXd::Identity(3, 3));
  EXPECT_EQ(c.jitter_used(), 0.0);
}

TEST(Cholesky, RankDeficientReconstructs) {
  const auto c = cholesky_factor(cov(Eigen::MatrixXd::Ones(2, 2)));
  EXPECT_LE(c.jitter_used(), 1e-6);
  EXPECT_LE(reconstruction_error(c), c.jitter_used() + 1e-8);
}

TEST(Cholesky, IndefiniteFails) {
  Eigen::MatrixXd m(2, 2);
  m << 0, 1, 1, 0;  // eigenvalues +1 and -1
  try {
    cholesky_factor(cov(m), JitterPolicy{1e-12, 10.0, 2});
    FAIL() << "expected FactorizationError";
  } catch (const FactorizationError& e) {
    EXPECT_LT(e.final_pivot(), 0.0);
  }
}

TEST(Cholesky, FactorRequired) {
  EXPECT_THROW(cov(Eigen::MatrixXd::Identity(2, 2)).factor(), ParameterError);
}

TEST(Cholesky, PropertyReconstruction) {
  std::mt19937_64 gen(17);
  for (int rep = 0; rep < 20; ++rep) {
    const auto c = cholesky_factor(cov(random_spd(gen, 2 + rep % 9)));
    EXPECT_LE(reconstruction_error(c), c.jitter_used() + 1e-8 * c.max_norm());
  }
  // Near-singular fBm matrices on fine grids.
  for (double alpha : {0.5, 1.0, 1.9, 2.0}) {
    std::vector<double> grid;
    for (int i = 1; i <= 30; ++i) grid.push_back(1.0 + 1e-3 * i);
    const auto c = cholesky_factor(fbm_cov(grid, alpha));
    EXPECT_LE(reconstruction_error(c), c.jitter_used() + 1e-8 * c.max_norm()) << alpha;
  }
}

TEST(SamplePaths, IdentityMeansNearZero) {
  const std::size_t m = 100000;
  const auto b = sample_paths(cholesky_factor(cov(Eigen::MatrixXd::Identity(3, 3))), m, Stream(1));
  ASSERT_EQ(b.count(), m);
  for (std::size_t j = 0; j < 3; ++j) EXPECT_LT(std::fabs(b.paths.col(j).mean()), 4.0 / std::sqrt(double(m)));
}

TEST(SamplePaths, PerfectCorrelationGivesEqualColumns) {
  const auto b = sample_paths(cholesky_factor(cov(Eigen::MatrixXd::Ones(2, 2))), 5000, Stream(2));
  EXPECT_LE((b.paths.col(0) - b.paths.col(1)).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(SamplePaths, FbmCovariance) {
  const std::size_t m = 100000;
  const auto b = sample_paths(cholesky_factor(fbm_cov({1.0, 2.0}, 1.0)), m, Stream(3));
  std::vector<double> prod(m);
  for (std::size_t r = 0; r < m; ++r) prod[r] = b.paths(r, 0) * b.paths(r, 1);
  const auto ms = mc_stderr(prod);
  EXPECT_NEAR(ms.mean, 1.0, 4 * ms.std_error);
}

TEST(SamplePaths, EmptyBatch) {
  const auto b = sample_paths(cholesky_factor(cov(Eigen::MatrixXd::Identity(2, 2))), 0, Stream(4));
  EXPECT_EQ(b.count(), 0u);
  EXPECT_EQ(b.sites.size(), 2u);
}

TEST(SamplePaths, RequiresFactor) {
  EXPECT_THROW(sample_paths(cov(Eigen::MatrixXd::Identity(2, 2)), 10, Stream(4)), ParameterError);
}

TEST(SamplePaths, PropertyEmpiricalCovariance) {
  std::mt19937_64 gen(23);
  const std::size_t m = 100000;
  for (int rep = 0; rep < 4; ++rep) {
    const int k = 2 + 2 * rep + (rep == 3 ? 2 : 0);
    const auto c = cholesky_factor(cov(random_spd(gen, k)));
    const auto b = sample_paths(c, m, Stream(100 + rep));
    for (int i = 0; i < k; ++i)
      for (int j = 0; j <= i; ++j) {
        std::vector<double> prod(m);
        for (std::size_t r = 0; r < m; ++r) prod[r] = b.paths(r, i) * b.paths(r, j);
        const auto ms = mc_stderr(prod);
        EXPECT_NEAR(ms.mean, c.values()(i, j), 5 * ms.std_error) << k << " " << i << " " << j;
      }
  }
}

TEST(SamplePaths, DeterministicAcrossThreadsAndReference) {
  const auto c = cholesky_factor(fbm_cov({0.5, 1.0, 1.5}, 0.8));
  const auto a = sample_paths(c, 3000, Stream(9), 1);
  const auto b = sample_paths(c, 3000, Stream(9), 3);
  const auto r = reference::sample_paths(c, 3000, Stream(9));
  EXPECT_EQ(a.paths, b.paths);
  EXPECT_LE((a.paths - r.paths).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(a.provenance, b.provenance);
}

TEST(SamplePaths, CsvHasHeaderAndFullPrecision) {
  const auto b = sample_paths(cholesky_factor(cov(Eigen::MatrixXd::Identity(2, 2))), 3, Stream(5));
  std::ostringstream os;
  write_paths_csv(b, os);
  std::istringstream is(os.str());
  std::string header, line;
  std::getline(is, header);
  EXPECT_EQ(header, "row,\"0\",\"1\"");
  std::getline(is, line);
  const auto first = line.find(',') + 1;
  const double x = std::stod(line.substr(first, line.find(',', first) - first));
  EXPECT_EQ(x, b.paths(0, 0));
}
