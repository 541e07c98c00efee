// Copyright 2026 The gpx Authors
// SPDX-License-Identifier: Apache-2.0

#include "gpx/gauss.hpp"

#include <cmath>

#include "gpx/error.hpp"
#include "gpx/parallel.hpp"

namespace gpx {

CovMatrix::CovMatrix(std::vector<Site> sites, Eigen::MatrixXd values)
    : sites_(std::move(sites)), values_(std::move(values)) {
  const auto k = static_cast<Eigen::Index>(sites_.size());
  if (values_.rows() != k || values_.cols() != k)
    throw ParameterError("covariance: shape does not match site list");
  if (!values_.allFinite()) throw ParameterError("covariance: non-finite entry");
  const double scale = std::max(1.0, max_norm());
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = i + 1; j < k; ++j)
      if (std::fabs(values_(i, j) - values_(j, i)) > 1e-12 * scale)
        throw ParameterError("covariance: matrix is not symmetric");
}

double CovMatrix::max_norm() const { return values_.size() == 0 ? 0.0 : values_.cwiseAbs().maxCoeff(); }

const Eigen::MatrixXd& CovMatrix::factor() const {
  if (!factor_) throw ParameterError("covariance: not factored");
  return *factor_;
}

std::vector<double> PathBatch::column(std::size_t j) const {
  std::vector<double> out(count());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = paths(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  return out;
}

CovMatrix fbm_cov(const std::vector<double>& grid, double alpha) {
  if (!(alpha > 0.0 && alpha <= 2.0)) throw ParameterError("fbm_cov: alpha must lie in (0, 2]");
  const auto k = static_cast<Eigen::Index>(grid.size());
  for (double t : grid)
    if (!(t >= 0.0) || !std::isfinite(t)) throw ParameterError("fbm_cov: times must be finite and >= 0");
  Eigen::MatrixXd c(k, k);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j < k; ++j) {
      const double a = grid[i], b = grid[j];
      c(i, j) = 0.5 * (std::pow(a, alpha) + std::pow(b, alpha) - std::pow(std::fabs(a - b), alpha));
    }
  return CovMatrix(make_sites(grid), std::move(c));
}

namespace {

// Returns the failing pivot, or NaN on success.
constexpr double kZeroPivot = 1e-13;
constexpr double kResidualTol = 1e-10;

// Pivots within zero_tol of 0 are rank deficiency: the column stays zero.
double try_cholesky(const Eigen::MatrixXd& a, const std::vector<bool>& degenerate, double jitter, double zero_tol,
                    Eigen::MatrixXd& l) {
  const Eigen::Index k = a.rows();
  l.setZero(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    if (degenerate[i]) continue;
    double d = a(i, i) + jitter;
    for (Eigen::Index p = 0; p < i; ++p) d -= l(i, p) * l(i, p);
    if (std::fabs(d) <= zero_tol) {
      // A dependent column leaves a zero residual column too; otherwise the
      // tiny pivot is a genuine near-singularity and needs jitter.
      bool dependent = true;
      for (Eigen::Index r = i + 1; r < k && dependent; ++r) {
        double s = a(r, i);
        for (Eigen::Index p = 0; p < i; ++p) s -= l(r, p) * l(i, p);
        dependent = std::fabs(s) <= kResidualTol * zero_tol / kZeroPivot;
      }
      if (dependent) continue;
      return d;
    }
    if (!(d > 0.0)) return d;
    const double lii = std::sqrt(d);
    l(i, i) = lii;
    for (Eigen::Index r = i + 1; r < k; ++r) {
      double s = a(r, i);
      for (Eigen::Index p = 0; p < i; ++p) s -= l(r, p) * l(i, p);
      l(r, i) = s / lii;
    }
  }
  return std::nan("");
}

}  // namespace

CovMatrix cholesky_factor(const CovMatrix& c, const JitterPolicy& policy) {
  CovMatrix out = c;
  const Eigen::MatrixXd& a = c.values();
  const Eigen::Index k = a.rows();
  std::vector<bool> degenerate(k);
  for (Eigen::Index i = 0; i < k; ++i) degenerate[i] = (a.row(i).array() == 0.0).all();

  const double norm = c.max_norm();
  Eigen::MatrixXd l;
  double pivot = try_cholesky(a, degenerate, 0.0, kZeroPivot * norm, l);
  if (std::isnan(pivot)) {
    out.factor_ = std::move(l);
    out.jitter_used_ = 0.0;
    return out;
  }
  double jitter = policy.start * norm;
  for (int attempt = 0; attempt < policy.max_tries; ++attempt, jitter *= policy.growth) {
    pivot = try_cholesky(a, degenerate, jitter, kZeroPivot * norm, l);
    if (std::isnan(pivot)) {
      out.factor_ = std::move(l);
      out.jitter_used_ = jitter;
      return out;
    }
  }
  throw FactorizationError("cholesky_factor: matrix still indefinite after " + std::to_string(policy.max_tries) +
                               " jitter steps (final pivot " + std::to_string(pivot) + ")",
                           pivot);
}

void correlate_block(const Eigen::MatrixXd& factor, const Eigen::MatrixXd& z, Eigen::MatrixXd& out) {
  out.noalias() = factor.triangularView<Eigen::Lower>() * z;
}

PathBatch sample_paths(const CovMatrix& c, std::size_t m, const Stream& stream, int threads) {
  const Eigen::MatrixXd& l = c.factor();
  const auto k = static_cast<Eigen::Index>(c.size());
  PathBatch out{c.sites(), RowMatrix(static_cast<Eigen::Index>(m), k), stream.describe()};
  const std::size_t batches = (m + kPathBatch - 1) / kPathBatch;
  parallel_for(batches, threads, [&](std::size_t b) {
    const std::size_t first = b * kPathBatch;
    const auto width = static_cast<Eigen::Index>(std::min(kPathBatch, m - first));
    Sampler rng(stream.child(b));
    Eigen::MatrixXd z(k, width), x(k, width);
    for (Eigen::Index col = 0; col < width; ++col)
      for (Eigen::Index r = 0; r < k; ++r) z(r, col) = rng.normal();
    correlate_block(l, z, x);
    out.paths.middleRows(static_cast<Eigen::Index>(first), width) = x.transpose();
  });
  return out;
}

}  // namespace gpx
