// Copyright 2026 The gpx Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef GPX_KERNEL_HPP
#define GPX_KERNEL_HPP

#include <Eigen/Dense>
#include <cstddef>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "gpx/gauss.hpp"
#include "gpx/types.hpp"

namespace gpx {

// A negative-definite kernel Gamma, possibly taking the value +inf.
class KernelSpec {
 public:
  struct FbmIncrement {
    double alpha;
  };
  struct SphereGeodesic {
    double beta;
  };
  struct CustomMatrix {
    std::vector<double> sites;
    Eigen::MatrixXd gamma;
  };
  struct Scaled {
    std::shared_ptr<const KernelSpec> base;
    double factor;
  };
  using Variant = std::variant<FbmIncrement, SphereGeodesic, CustomMatrix, Scaled>;

  // |t1 - t2|^alpha, alpha in (0, 2].
  static KernelSpec fbm(double alpha);
  // rho^beta with rho the great-circle distance on S^2, beta in (0, 1).
  static KernelSpec sphere(double beta);
  // Square, symmetric, zero-diagonal, entries in [0, +inf].
  static KernelSpec custom(std::vector<double> sites, Eigen::MatrixXd gamma);
  static KernelSpec scaled(KernelSpec base, double factor);

  const Variant& variant() const noexcept { return v_; }
  std::string describe() const;

 private:
  explicit KernelSpec(Variant v) : v_(std::move(v)) {}
  Variant v_;
};

double eval_gamma(const KernelSpec& spec, const Site& t1, const Site& t2);

// Discretized kernel over a site list.
class GammaMatrix {
 public:
  // Validates symmetry, zero diagonal, nonnegativity and transitivity of
  // finiteness; throws StructureError otherwise.
  GammaMatrix(std::vector<Site> sites, Eigen::MatrixXd values);

  const std::vector<Site>& sites() const noexcept { return sites_; }
  const Eigen::MatrixXd& values() const noexcept { return values_; }
  std::size_t size() const noexcept { return sites_.size(); }
  double operator()(std::size_t i, std::size_t j) const { return values_(i, j); }
  bool all_finite() const;
  double max_norm() const;  // over finite entries

  GammaMatrix restrict(const std::vector<std::size_t>& indices) const;

 private:
  std::vector<Site> sites_;
  Eigen::MatrixXd values_;
};

GammaMatrix gamma_matrix(const KernelSpec& spec, const std::vector<Site>& grid);

// Equivalence classes of the finiteness relation. Blocks are ordered by
// their smallest index; indices within a block ascend.
struct BlockPartition {
  std::vector<std::vector<std::size_t>> blocks;
  std::vector<std::size_t> block_of;
};

BlockPartition decompose_extended(const GammaMatrix& g);

struct BlockCheck {
  std::vector<std::size_t> indices;
  double max_eigenvalue = 0.0;
  double tol = 0.0;
  bool pass = true;
};

struct NegDefReport {
  bool pass = true;
  double worst = 0.0;  // largest eigenvalue found on any zero-sum subspace
  std::vector<BlockCheck> blocks;
};

// Checks sum_ij a_i a_j Gamma_ij <= tol for unit zero-sum a, per finite
// block, via the spectrum of the projected block matrix.
NegDefReport validate_negative_definite(const GammaMatrix& g, double tol);
// Default tolerance: 1e-8 times the block max-norm.
NegDefReport validate_negative_definite(const GammaMatrix& g);

// Covariance of W^(s): (Gamma(i,s) + Gamma(j,s) - Gamma(i,j)) / 2 over
// `indices` (all sites when empty). Throws BlockError if any index is not
// in the block of s.
CovMatrix ws_covariance(const GammaMatrix& g, std::size_t s,
                        const std::vector<std::size_t>& indices = {});

// exp(-Gamma / (4 log n)); entries with Gamma = inf become 0.
CovMatrix schoenberg_cov(const GammaMatrix& g, double n);
// exp(-pi Gamma / n^2), the minima counterpart: n^2 (1 - r) / pi -> Gamma.
CovMatrix schoenberg_cov_min(const GammaMatrix& g, double n);

}  // namespace gpx

#endif  // GPX_KERNEL_HPP
