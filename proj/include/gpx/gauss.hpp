// Copyright 2026 The gpx Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef GPX_GAUSS_HPP
#define GPX_GAUSS_HPP

#include <Eigen/Dense>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "gpx/rng.hpp"
#include "gpx/types.hpp"

namespace gpx {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Diagonal jitter escalation: start * max_norm * growth^j, j < max_tries.
struct JitterPolicy {
  double start = 1e-12;
  double growth = 10.0;
  int max_tries = 6;
};

// Symmetric covariance over an ordered site list, optionally carrying a
// lower-triangular factor. Immutable once built; factoring returns a copy.
class CovMatrix {
 public:
  CovMatrix(std::vector<Site> sites, Eigen::MatrixXd values);

  const std::vector<Site>& sites() const noexcept { return sites_; }
  const Eigen::MatrixXd& values() const noexcept { return values_; }
  std::size_t size() const noexcept { return sites_.size(); }
  double variance(std::size_t i) const { return values_(i, i); }
  double max_norm() const;

  bool factored() const noexcept { return factor_.has_value(); }
  // Throws ParameterError when no factor is present.
  const Eigen::MatrixXd& factor() const;
  double jitter_used() const noexcept { return jitter_used_; }

 private:
  friend CovMatrix cholesky_factor(const CovMatrix&, const JitterPolicy&);

  std::vector<Site> sites_;
  Eigen::MatrixXd values_;
  std::optional<Eigen::MatrixXd> factor_;
  double jitter_used_ = 0.0;
};

// One sampled path per row; columns align with sites.
struct PathBatch {
  std::vector<Site> sites;
  RowMatrix paths;
  std::string provenance;

  std::size_t count() const noexcept { return static_cast<std::size_t>(paths.rows()); }
  std::vector<double> column(std::size_t j) const;
};

// Fractional Brownian motion covariance 0.5(|s|^a + |t|^a - |s-t|^a) on a
// grid of nonnegative times.
CovMatrix fbm_cov(const std::vector<double>& grid, double alpha);

// Cholesky with escalating jitter. Rows that are identically zero are
// treated as degenerate (deterministic zero coordinates) and need no
// jitter.
CovMatrix cholesky_factor(const CovMatrix& c, const JitterPolicy& policy = {});

// m i.i.d. N(0, c) paths. Paths are produced in fixed batches of
// kPathBatch, batch b drawing from stream.child(b).
inline constexpr std::size_t kPathBatch = 1024;
PathBatch sample_paths(const CovMatrix& c, std::size_t m, const Stream& stream,
                       int threads = 0);

// Multiplies a block of standard normals by the factor: out = L * z where
// z holds one path per column.
void correlate_block(const Eigen::MatrixXd& factor, const Eigen::MatrixXd& z,
                     Eigen::MatrixXd& out);

}  // namespace gpx

#endif  // GPX_GAUSS_HPP
