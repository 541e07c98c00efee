// Copyright 2026 The gpx Authors
// SPDX-License-Identifier: Apache-2.0

// Sanity checks on the test oracles themselves against textbook values.

#include <gtest/gtest.h>

#include "oracles/oracles.hpp"

TEST(Oracles, CosineIntegral) {
  EXPECT_NEAR(oracle::Ci(1.0), 0.33740392290096813, 1e-14);
  EXPECT_NEAR(oracle::Ci(0.5), -0.17778407880661290, 1e-14);
}

TEST(Oracles, BivariateNormalOrthant) {
  for (double rho : {-0.7, 0.0, 0.3, 0.9}) {
    EXPECT_NEAR(oracle::bvn_cdf(0.0, 0.0, rho), 0.25 + std::asin(rho) / (2 * M_PI), 1e-12) << rho;
  }
  EXPECT_NEAR(oracle::bvn_cdf(1.0, -0.5, 0.0), oracle::Phi(1.0) * oracle::Phi(-0.5), 1e-14);
}

TEST(Oracles, SimpsonAndRoots) {
  EXPECT_NEAR(oracle::simpson([](double x) { return std::exp(x); }, 0.0, 1.0, 1e-13), std::exp(1.0) - 1, 1e-12);
  const double u = oracle::bisect_un(1e4);
  EXPECT_NEAR(std::sqrt(2 * M_PI) * u * std::exp(u * u / 2), 1e4, 1e-6);
}

TEST(Oracles, SchoenbergCriterion) {
  Eigen::MatrixXd g(3, 3);
  g << 0, 1, 2, 1, 0, 1, 2, 1, 0;
  EXPECT_TRUE(oracle::negdef_by_schoenberg(g));
  g << 0, 1, 4.5, 1, 0, 1, 4.5, 1, 0;  // breaks the triangle-type inequality for |dt|^e, e > 2
  EXPECT_FALSE(oracle::negdef_by_schoenberg(g));
}
