// Copyright 2026 The gpx Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "gpx/error.hpp"
#include "gpx/kernel.hpp"
#include "oracles/oracles.hpp"

using namespace gpx;

namespace {

Eigen::MatrixXd mat(std::initializer_list<std::initializer_list<double>> rows) {
  Eigen::MatrixXd m(rows.size(), rows.begin()->size());
  int i = 0;
  for (auto r : rows) {
    int j = 0;
    for (double v : r) m(i, j++) = v;
    ++i;
  }
  return m;
}

Vec3 unit(double theta, double phi) {
  return {std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta)};
}

std::vector<Site> random_sphere(std::mt19937_64& gen, int k) {
  std::normal_distribution<double> nd;
  std::vector<Site> out;
  for (int i = 0; i < k; ++i) {
    Vec3 v{nd(gen), nd(gen), nd(gen)};
    const double r = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
    for (double& c : v) c /= r;
    out.emplace_back(v);
  }
  return out;
}

std::vector<double> random_grid(std::mt19937_64& gen, int k) {
  std::uniform_real_distribution<double> ud(0.0, 10.0);
  std::vector<double> g(k);
  for (double& x : g) x = ud(gen);
  return g;
}

}  // namespace

TEST(EvalGamma, FbmLinear) { EXPECT_DOUBLE_EQ(eval_gamma(KernelSpec::fbm(1.0), 0.0, 3.0), 3.0); }

TEST(EvalGamma, ZeroOnDiagonal) {
  EXPECT_EQ(eval_gamma(KernelSpec::fbm(1.3), 2.5, 2.5), 0.0);
  EXPECT_EQ(eval_gamma(KernelSpec::sphere(0.4), unit(0.3, 1.0), unit(0.3, 1.0)), 0.0);
}

TEST(EvalGamma, SphereAntipodal) {
  const double v = eval_gamma(KernelSpec::sphere(0.5), Vec3{0, 0, 1}, Vec3{0, 0, -1});
  EXPECT_NEAR(v, std::sqrt(M_PI), 1e-12);
  EXPECT_NEAR(v, 1.77245, 1e-5);
}

TEST(EvalGamma, DomainErrors) {
  EXPECT_THROW(eval_gamma(KernelSpec::fbm(1.0), Vec3{0, 0, 1}, 1.0), DomainError);
  EXPECT_THROW(eval_gamma(KernelSpec::sphere(0.5), 0.0, 1.0), DomainError);
  EXPECT_THROW(eval_gamma(KernelSpec::sphere(0.5), Vec3{0, 0, 2}, Vec3{0, 0, 1}), DomainError);
  EXPECT_THROW(eval_gamma(KernelSpec::custom({0, 1}, mat({{0, 1}, {1, 0}})), 0.0, 5.0), DomainError);
}

TEST(KernelSpec, ParameterRanges) {
  EXPECT_THROW(KernelSpec::fbm(0.0), ParameterError);
  EXPECT_THROW(KernelSpec::fbm(2.1), ParameterError);
  EXPECT_NO_THROW(KernelSpec::fbm(2.0));
  EXPECT_THROW(KernelSpec::sphere(1.0), ParameterError);
  EXPECT_THROW(KernelSpec::scaled(KernelSpec::fbm(1.0), -1.0), ParameterError);
}

TEST(KernelSpec, ScaledKeepsInfinity) {
  const Eigen::MatrixXd m = mat({{0, kInf}, {kInf, 0}});
  const auto s = KernelSpec::scaled(KernelSpec::custom({0, 1}, m), 0.0);
  EXPECT_TRUE(is_inf(eval_gamma(s, 0.0, 1.0)));
  const auto t = KernelSpec::scaled(KernelSpec::fbm(1.0), 2.5);
  EXPECT_DOUBLE_EQ(eval_gamma(t, 0.0, 2.0), 5.0);
}

TEST(GammaMatrix, FbmGrid) {
  const auto g = gamma_matrix(KernelSpec::fbm(1.0), make_sites({0, 1, 2}));
  EXPECT_EQ(g.values(), mat({{0, 1, 2}, {1, 0, 1}, {2, 1, 0}}));
}

TEST(GammaMatrix, BlockCustomPasses) {
  const auto g = gamma_matrix(KernelSpec::custom({0, 1, 2}, mat({{0, 1, kInf}, {1, 0, kInf}, {kInf, kInf, 0}})),
                              make_sites({0, 1, 2}));
  const auto p = decompose_extended(g);
  ASSERT_EQ(p.blocks.size(), 2u);
  EXPECT_EQ(p.blocks[0], (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(p.blocks[1], (std::vector<std::size_t>{2}));
  EXPECT_EQ(p.block_of, (std::vector<std::size_t>{0, 0, 1}));
}

TEST(GammaMatrix, NonTransitiveFinitenessRejected) {
  const Eigen::MatrixXd m = mat({{0, 1, kInf}, {1, 0, 1}, {kInf, 1, 0}});
  EXPECT_THROW(gamma_matrix(KernelSpec::custom({0, 1, 2}, m), make_sites({0, 1, 2})), StructureError);
  EXPECT_THROW(GammaMatrix(make_sites({0, 1, 2}), m), StructureError);
}

TEST(GammaMatrix, ShapeAndSymmetryChecks) {
  EXPECT_THROW(GammaMatrix(make_sites({0, 1}), mat({{0, 1}, {2, 0}})), StructureError);
  EXPECT_THROW(GammaMatrix(make_sites({0, 1}), mat({{1, 1}, {1, 0}})), StructureError);
  EXPECT_THROW(GammaMatrix(make_sites({0, 1}), mat({{0, -1}, {-1, 0}})), StructureError);
  EXPECT_THROW(GammaMatrix(make_sites({0}), mat({{0, 1}, {1, 0}})), StructureError);
}

TEST(Decompose, AllFiniteIsOneBlock) {
  const auto p = decompose_extended(gamma_matrix(KernelSpec::fbm(0.7), make_sites({0, 1, 2, 3})));
  ASSERT_EQ(p.blocks.size(), 1u);
  EXPECT_EQ(p.blocks[0].size(), 4u);
}

TEST(NegDef, Examples) {
  EXPECT_TRUE(validate_negative_definite(gamma_matrix(KernelSpec::fbm(1.5), make_sites({0, 1, 2}))).pass);
  Eigen::MatrixXd bad(5, 5);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) bad(i, j) = std::pow(std::abs(i - j), 2.2);
  const GammaMatrix gb(make_sites({0, 1, 2, 3, 4}), bad);
  const auto r = validate_negative_definite(gb);
  EXPECT_FALSE(r.pass);
  EXPECT_GT(r.worst, 0.0);
  EXPECT_FALSE(oracle::negdef_by_schoenberg(bad));
  EXPECT_TRUE(validate_negative_definite(GammaMatrix(make_sites({0, 1, 2}), Eigen::MatrixXd::Zero(3, 3))).pass);
}

TEST(NegDef, PerBlockReport) {
  const Eigen::MatrixXd m = mat({{0, 1, kInf}, {1, 0, kInf}, {kInf, kInf, 0}});
  const auto r = validate_negative_definite(GammaMatrix(make_sites({0, 1, 2}), m));
  EXPECT_TRUE(r.pass);
  EXPECT_EQ(r.blocks.size(), 2u);
}

// Property: the projected-spectrum verdict agrees with Schoenberg's
// characterization on random grids.
TEST(NegDef, PropertyAgreesWithSchoenbergOracle) {
  std::mt19937_64 gen(2024);
  std::uniform_int_distribution<int> size(2, 25);
  for (double alpha : {0.3, 1.0, 1.7, 2.0}) {
    for (int rep = 0; rep < 5; ++rep) {
      const auto g = gamma_matrix(KernelSpec::fbm(alpha), make_sites(random_grid(gen, size(gen))));
      EXPECT_TRUE(validate_negative_definite(g).pass) << alpha;
      if (alpha < 2.0) {
        EXPECT_TRUE(oracle::negdef_by_schoenberg(g.values() / g.max_norm())) << alpha;
      }
    }
  }
  for (double beta : {0.2, 0.5, 0.9}) {
    for (int rep = 0; rep < 5; ++rep) {
      const auto g = gamma_matrix(KernelSpec::sphere(beta), random_sphere(gen, size(gen)));
      EXPECT_TRUE(validate_negative_definite(g).pass) << beta;
      EXPECT_TRUE(oracle::negdef_by_schoenberg(g.values())) << beta;
    }
  }
  for (double e : {2.2, 3.0}) {
    Eigen::MatrixXd m(6, 6);
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 6; ++j) m(i, j) = std::pow(std::abs(i - j), e);
    EXPECT_FALSE(validate_negative_definite(GammaMatrix(make_sites({0, 1, 2, 3, 4, 5}), m)).pass);
    EXPECT_FALSE(oracle::negdef_by_schoenberg(m / m.maxCoeff()));
  }
}

TEST(GammaMatrix, PropertySymmetricZeroDiagonalNonnegative) {
  std::mt19937_64 gen(7);
  for (int rep = 0; rep < 10; ++rep) {
    for (const auto& g : {gamma_matrix(KernelSpec::fbm(0.2 + 0.18 * rep), make_sites(random_grid(gen, 12))),
                          gamma_matrix(KernelSpec::sphere(0.05 + 0.09 * rep), random_sphere(gen, 12))}) {
      EXPECT_TRUE(g.values() == g.values().transpose());
      EXPECT_EQ(g.values().diagonal().cwiseAbs().maxCoeff(), 0.0);
      EXPECT_GE(g.values().minCoeff(), 0.0);
    }
  }
}

TEST(WsCovariance, BrownianStructure) {
  const auto g = gamma_matrix(KernelSpec::fbm(1.0), make_sites({0, 1, 2}));
  const auto c = ws_covariance(g, 0);
  EXPECT_EQ(c.values(), mat({{0, 0, 0}, {0, 1, 1}, {0, 1, 2}}));
  for (std::size_t s = 0; s < 3; ++s) EXPECT_EQ(ws_covariance(g, s).values()(s, s), 0.0);
}

TEST(WsCovariance, BlockErrors) {
  const Eigen::MatrixXd m = mat({{0, 1, kInf}, {1, 0, kInf}, {kInf, kInf, 0}});
  const GammaMatrix g(make_sites({0, 1, 2}), m);
  EXPECT_THROW(ws_covariance(g, 0, {0, 2}), BlockError);
  EXPECT_NO_THROW(ws_covariance(g, 0, {0, 1}));
  EXPECT_THROW(ws_covariance(g, 5), ParameterError);
}

// Property: Var(W_i - W_j) recovers Gamma_ij.
TEST(WsCovariance, PropertyReconstruction) {
  std::mt19937_64 gen(99);
  for (int rep = 0; rep < 20; ++rep) {
    const auto g = gamma_matrix(KernelSpec::fbm(0.1 + 0.095 * rep), make_sites(random_grid(gen, 8)));
    const std::size_t s = rep % 8;
    const Eigen::MatrixXd c = ws_covariance(g, s).values();
    for (int i = 0; i < 8; ++i)
      for (int j = 0; j < 8; ++j) {
        const double rec = c(i, i) + c(j, j) - 2 * c(i, j);
        EXPECT_NEAR(rec, g(i, j), 1e-10 * std::max(1.0, g(i, j)));
      }
  }
}

TEST(Schoenberg, Examples) {
  Eigen::MatrixXd m = mat({{0, 0, 4, kInf}, {0, 0, 4, kInf}, {4, 4, 0, kInf}, {kInf, kInf, kInf, 0}});
  const GammaMatrix g(make_sites({0, 1, 2, 3}), m);
  const auto c = schoenberg_cov(g, std::exp(1.0));
  EXPECT_EQ(c.values()(0, 1), 1.0);
  EXPECT_EQ(c.values()(0, 3), 0.0);
  EXPECT_NEAR(c.values()(0, 2), std::exp(-1.0), 1e-15);
  EXPECT_NEAR(c.values()(0, 2), 0.36788, 1e-5);
  EXPECT_EQ(c.values().diagonal(), Eigen::VectorXd::Ones(4));
  EXPECT_THROW(schoenberg_cov(g, 1.0), ParameterError);
}

TEST(Schoenberg, MinCounterpartScaling) {
  const auto g = gamma_matrix(KernelSpec::fbm(1.0), make_sites({0, 1}));
  const double n = 1e3;
  const double r = schoenberg_cov_min(g, n).values()(0, 1);
  EXPECT_NEAR(n * n * (1 - r) / M_PI, 1.0, 1e-5);
}

TEST(Schoenberg, PropertyPsd) {
  std::mt19937_64 gen(3);
  for (double n : {2.0, 10.0, 1e4, 1e9}) {
    for (int rep = 0; rep < 5; ++rep) {
      const auto g = gamma_matrix(KernelSpec::fbm(0.4 + 0.3 * rep), make_sites(random_grid(gen, 15)));
      for (const auto& c : {schoenberg_cov(g, n), schoenberg_cov_min(g, n)}) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c.values());
        EXPECT_GE(es.eigenvalues().minCoeff(), -1e-8 * c.values().trace());
      }
    }
  }
}

TEST(Decompose, PropertyPermutationInvariant) {
  std::mt19937_64 gen(12);
  for (int rep = 0; rep < 10; ++rep) {
    const int k = 9;
    Eigen::MatrixXd m = Eigen::MatrixXd::Constant(k, k, kInf);
    std::vector<int> label(k);
    for (int i = 0; i < k; ++i) label[i] = static_cast<int>(gen() % 3);
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j)
        if (label[i] == label[j]) m(i, j) = std::abs(i - j);
    std::vector<double> grid(k);
    std::iota(grid.begin(), grid.end(), 0.0);
    const auto p = decompose_extended(GammaMatrix(make_sites(grid), m));

    std::vector<int> perm(k);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), gen);
    Eigen::MatrixXd pm(k, k);
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j) pm(i, j) = m(perm[i], perm[j]);
    const auto q = decompose_extended(GammaMatrix(make_sites(grid), pm));

    ASSERT_EQ(p.blocks.size(), q.blocks.size());
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j)
        EXPECT_EQ(p.block_of[perm[i]] == p.block_of[perm[j]], q.block_of[i] == q.block_of[j]);
  }
}
