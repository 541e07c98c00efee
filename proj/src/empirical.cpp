// Copyright 2026 The gpx Authors
// SPDX-License-Identifier: Apache-2.0

#include "gpx/empirical.hpp"

#include <algorithm>
#include <cmath>

#include "gpx/error.hpp"
#include "gpx/parallel.hpp"

namespace gpx {

double solve_un(double n) {
  if (!(n >= 2.0)) throw ParameterError("solve_un: n must be >= 2");
  const double log_n = std::log(n);
  // f is increasing on (0, inf); the root lies in [lo, hi].
  auto f = [&](double u) { return 0.5 * std::log(2.0 * M_PI) + std::log(u) + 0.5 * u * u - log_n; };
  double lo = 1e-8;
  double hi = std::sqrt(2.0 * log_n) + 2.0;
  double u = std::sqrt(2.0 * log_n);
  for (int it = 0; it < 200; ++it) {
    const double fu = f(u);
    if (fu > 0.0) hi = u; else lo = u;
    if (std::fabs(fu) < 1e-15 * std::max(1.0, log_n)) break;
    double next = u - fu / (1.0 / u + u);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::fabs(next - u) < 1e-16 * u) {
      u = next;
      break;
    }
    u = next;
  }
  return u;
}

NormalizerMax normalizer_max(double sigma_t0, double n) {
  if (!(sigma_t0 > 0.0)) throw ParameterError("normalizer_max: zero variance at anchor site");
  const double u = solve_un(n);
  return {n, u, u / sigma_t0, sigma_t0 * u, 0};
}

NormalizerMax normalizer_max(const CovMatrix& cov, double n, std::size_t t0) {
  if (t0 >= cov.size()) throw ParameterError("normalizer_max: anchor out of range");
  auto out = normalizer_max(std::sqrt(std::max(0.0, cov.variance(t0))), n);
  out.t0_index = t0;
  return out;
}

NormalizerMin normalizer_min(double sigma_t0, double n) {
  if (!(sigma_t0 > 0.0)) throw ParameterError("normalizer_min: zero variance at anchor site");
  if (!(n >= 1.0)) throw ParameterError("normalizer_min: n must be >= 1");
  const double w = n / std::sqrt(2.0 * M_PI);
  return {n, w, w / sigma_t0, 0};
}

NormalizerMin normalizer_min(const CovMatrix& cov, double n, std::size_t t0) {
  if (t0 >= cov.size()) throw ParameterError("normalizer_min: anchor out of range");
  auto out = normalizer_min(std::sqrt(std::max(0.0, cov.variance(t0))), n);
  out.t0_index = t0;
  return out;
}

FbmSchedule::FbmSchedule(double alpha, double t0, ExtremeMode mode, MinSchedule min_schedule)
    : alpha_(alpha), t0_(t0), mode_(mode), min_schedule_(min_schedule) {
  if (!(alpha > 0.0 && alpha <= 2.0)) throw ParameterError("FbmSchedule: alpha must lie in (0, 2]");
  if (!(t0 > 0.0) || !std::isfinite(t0)) throw ParameterError("FbmSchedule: t0 must be positive");
}

double FbmSchedule::s_n(double n) const {
  if (mode_ == ExtremeMode::max) {
    if (!(n > 1.0)) throw ParameterError("FbmSchedule: n must exceed 1");
    const double two_log_n = 2.0 * std::log(n);
    return alpha_ > 1.0 ? t0_ / two_log_n : t0_ / std::pow(two_log_n, 1.0 / alpha_);
  }
  if (!(n >= 1.0)) throw ParameterError("FbmSchedule: n must be >= 1");
  const double base = min_schedule_ == MinSchedule::consistent ? 2.0 * M_PI / (n * n) : 2.0 * M_PI / n;
  return t0_ * std::pow(base, 1.0 / alpha_);
}

double FbmSchedule::kappa(double t1, double t2) const {
  if (mode_ == ExtremeMode::min) return 1.0;
  if (alpha_ < 1.0) return 0.0;
  return alpha_ * (t2 - t1) / 2.0;
}

double FbmSchedule::limit_gamma(double t1, double t2) const {
  if (degenerate() || t1 == t2) return 0.0;
  return std::pow(std::fabs(t1 - t2), alpha_);
}

double FbmSchedule::sigma(double n, double t) const {
  return std::pow(t0_ + s_n(n) * t, alpha_ / 2.0);
}

CovMatrix fbm_prelimit_cov(const FbmSchedule& schedule, double n, const std::vector<double>& grid) {
  const double s = schedule.s_n(n);
  std::vector<double> times;
  times.reserve(grid.size());
  for (double t : grid) {
    const double time = schedule.t0() + s * t;
    if (!(time > 0.0))
      throw ParameterError("fbm_prelimit_cov: grid offset " + std::to_string(t) + " maps to nonpositive time " +
                           std::to_string(time) + " (window too wide for n)");
    times.push_back(time);
  }
  const CovMatrix c = fbm_cov(times, schedule.alpha());
  return CovMatrix(make_sites(grid), c.values());
}

namespace {

template <ExtremeMode Mode>
PathBatch fold_extremes(const CovMatrix& cov, std::size_t n, std::size_t reps, const Stream& stream,
                        const ExtremeOptions& options) {
  if (n < 1) throw ParameterError("sample extremes: n must be >= 1");
  if (reps < 1) throw ParameterError("sample extremes: reps must be >= 1");
  if (options.block < 1) throw ParameterError("sample extremes: block must be >= 1");
  const Eigen::MatrixXd& l = cov.factor();
  const auto k = static_cast<Eigen::Index>(cov.size());
  PathBatch out{cov.sites(), RowMatrix(static_cast<Eigen::Index>(reps), k), stream.describe()};

  parallel_for(reps, options.threads, [&](std::size_t r) {
    Sampler rng(stream.child(r));
    Eigen::VectorXd acc(k);
    acc.setConstant(Mode == ExtremeMode::max ? -kInf : kInf);
    const std::size_t block = std::min(options.block, n);
    Eigen::MatrixXd z(k, static_cast<Eigen::Index>(block));
    Eigen::MatrixXd x(k, static_cast<Eigen::Index>(block));
    for (std::size_t done = 0; done < n; done += block) {
      const auto width = static_cast<Eigen::Index>(std::min(block, n - done));
      if (width != z.cols()) {
        z.resize(k, width);
        x.resize(k, width);
      }
      double* zp = z.data();
      for (Eigen::Index i = 0; i < k * width; ++i) zp[i] = rng.normal();
      correlate_block(l, z, x);
      if constexpr (Mode == ExtremeMode::max) {
        acc = acc.cwiseMax(x.rowwise().maxCoeff());
      } else {
        acc = acc.cwiseMin(x.cwiseAbs().rowwise().minCoeff());
      }
    }
    out.paths.row(static_cast<Eigen::Index>(r)) = acc.transpose();
  });
  return out;
}

}  // namespace

PathBatch sample_Mn(const CovMatrix& cov, std::size_t n, std::size_t reps, const Stream& stream,
                    const ExtremeOptions& options) {
  return fold_extremes<ExtremeMode::max>(cov, n, reps, stream, options);
}

PathBatch sample_Ln(const CovMatrix& cov, std::size_t n, std::size_t reps, const Stream& stream,
                    const ExtremeOptions& options) {
  return fold_extremes<ExtremeMode::min>(cov, n, reps, stream, options);
}

PathBatch rescale(const PathBatch& batch, double a, double b) {
  PathBatch out = batch;
  out.paths = (a * (batch.paths.array() - b)).matrix();
  return out;
}

}  // namespace gpx
