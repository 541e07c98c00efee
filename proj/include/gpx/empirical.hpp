// Copyright 2026 The gpx Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef GPX_EMPIRICAL_HPP
#define GPX_EMPIRICAL_HPP

#include <cstddef>
#include <vector>

#include "gpx/gauss.hpp"
#include "gpx/rng.hpp"

namespace gpx {

// Positive root u of sqrt(2 pi) u exp(u^2 / 2) = n, n >= 2.
double solve_un(double n);

// a_n (M_n - b_n) with a_n = u_n / sigma(t0) and b_n = sigma(t0) u_n.
struct NormalizerMax {
  double n = 0.0;
  double u_n = 0.0;
  double a_n = 0.0;
  double b_n = 0.0;
  std::size_t t0_index = 0;
};

NormalizerMax normalizer_max(const CovMatrix& cov, double n, std::size_t t0);
NormalizerMax normalizer_max(double sigma_t0, double n);

// a_n L_n with w_n = n / sqrt(2 pi) and a_n = w_n / sigma(t0).
struct NormalizerMin {
  double n = 0.0;
  double w_n = 0.0;
  double a_n = 0.0;
  std::size_t t0_index = 0;
};

NormalizerMin normalizer_min(const CovMatrix& cov, double n, std::size_t t0);
NormalizerMin normalizer_min(double sigma_t0, double n);

enum class ExtremeMode { max, min };

// Which time-scale sequence the minima schedule uses. `consistent`
// (t0 (2 pi / n^2)^(1/alpha)) is the one under which n^2 (1 - r_n) / pi
// tends to |t1 - t2|^alpha; `as_printed` uses n instead of n^2 and makes
// distinct sites asymptotically independent.
enum class MinSchedule { consistent, as_printed };

// Local rescaling t -> t0 + s_n t for maxima/minima of fractional Brownian
// motions.
//
// Max mode: alpha <= 1 uses s_n = t0 / (2 log n)^(1/alpha) with limit kernel
// |dt|^alpha and drift kappa(t1, t2) = 0 (alpha < 1) or (t2 - t1) / 2
// (alpha = 1). For alpha > 1 no nontrivial limit exists; the schedule
// s_n = t0 / (2 log n) keeps kappa finite (alpha (t2 - t1) / 2) while the
// normalized kernel collapses to zero, so maxima at distinct sites become
// perfectly dependent.
//
// Min mode: kappa(t1, t2) = lim sigma(t1) / sigma(t2) = 1 for every alpha.
class FbmSchedule {
 public:
  FbmSchedule(double alpha, double t0, ExtremeMode mode, MinSchedule min_schedule = MinSchedule::consistent);

  double alpha() const noexcept { return alpha_; }
  double t0() const noexcept { return t0_; }
  ExtremeMode mode() const noexcept { return mode_; }

  double s_n(double n) const;
  double kappa(double t1, double t2) const;
  // Limit kernel at grid offsets t1, t2 (0 for degenerate max schedules).
  double limit_gamma(double t1, double t2) const;
  bool degenerate() const noexcept { return mode_ == ExtremeMode::max && alpha_ > 1.0; }
  // sigma_n at grid offset t.
  double sigma(double n, double t) const;

 private:
  double alpha_;
  double t0_;
  ExtremeMode mode_;
  MinSchedule min_schedule_;
};

// Covariance of X_n(t) = B(t0 + s_n t) over grid offsets t. The returned
// sites are the offsets. Throws ParameterError if t0 + s_n t <= 0.
CovMatrix fbm_prelimit_cov(const FbmSchedule& schedule, double n, const std::vector<double>& grid);

struct ExtremeOptions {
  std::size_t block = 1024;  // paths generated per fold step
  int threads = 0;
};

// reps rows, each the sitewise max over n fresh paths of N(0, cov).
// Replication r draws from stream.child(r).
PathBatch sample_Mn(const CovMatrix& cov, std::size_t n, std::size_t reps, const Stream& stream,
                    const ExtremeOptions& options = {});

// reps rows, each the sitewise min of |X| over n fresh paths.
PathBatch sample_Ln(const CovMatrix& cov, std::size_t n, std::size_t reps, const Stream& stream,
                    const ExtremeOptions& options = {});

// a (x - b) elementwise.
PathBatch rescale(const PathBatch& batch, double a, double b);

}  // namespace gpx

#endif  // GPX_EMPIRICAL_HPP
