// Copyright 2026 The gpx Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef GPX_STABLE_HPP
#define GPX_STABLE_HPP

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "gpx/gauss.hpp"
#include "gpx/kernel.hpp"
#include "gpx/limitproc.hpp"
#include "gpx/rng.hpp"

namespace gpx {

// Exponent p applied to U_i + W_i(t) - sigma^2(t)/2. `as_printed` uses
// p = alpha, `reciprocal` uses p = 1/alpha. Under e^{-u} du the atoms
// e^{pU_i} have tail index 1/p, so only `reciprocal` yields index alpha.
enum class ExponentConvention { as_printed, reciprocal };

std::string to_string(ExponentConvention c);
double series_exponent(double alpha, ExponentConvention c);

struct StableTruncation {
  std::size_t max_terms = 65536;
  double tail_budget = 1e-3;  // bound on the remainder (absolute)
};

struct StableSeriesParams {
  double alpha = 1.0;
  GammaMatrix gamma;
  ExponentConvention convention = ExponentConvention::as_printed;
  StableTruncation truncation;
  bool centering_enabled = true;
  // Adds the conditional mean of the dropped terms in summable regimes.
  // Centered regimes always compensate.
  bool compensate = true;
  bool random_signs = false;
  AnchorChoice anchors;
};

// Centering constant in the three-regime form: 0 for alpha < 1, the integral
// of sin(x)/x^2 over [1/i, 1/(i-1)] for alpha = 1 (upper limit +inf at i = 1),
// (alpha/(alpha-1)) (i^e - (i-1)^e) with e = alpha/(alpha-1) for alpha > 1.
double centering_b(std::size_t i, double alpha);

// Per-convention centering before the mark-mean factor e^{p(p-1) sigma^2/2}.
// For `reciprocal` and alpha > 1 the exponent is (alpha-1)/alpha, which makes
// b_i the expected integral of x^{-p} over [i-1, i].
double centering_b(std::size_t i, double alpha, ExponentConvention c);

struct StableDiagnostics {
  std::size_t terms = 0;
  double tail_bound = 0.0;
  double exponent = 0.0;
  bool centered = false;
  bool compensated = false;
  ExponentConvention convention = ExponentConvention::as_printed;
};

// S(t) = sum_i (e^{p(U_i + W_i(t) - sigma^2(t)/2)} - b_i(t)), truncated at a
// deterministic N chosen from an analytic remainder bound. Throws
// TruncationError when the series diverges in the requested regime or the
// budget needs more than max_terms.
class StableFieldSampler {
 public:
  explicit StableFieldSampler(StableSeriesParams params);

  const StableDiagnostics& diagnostics() const noexcept { return diag_; }
  std::size_t size() const noexcept { return params_.gamma.size(); }
  // Remainder bound after `terms` points: standard deviation of the
  // compensated remainder, plus its mean when left uncompensated.
  double tail_bound(std::size_t terms) const;

  void sample(Sampler& rng, std::span<double> out) const;
  PathBatch sample_batch(std::size_t reps, const Stream& stream, int threads = 0) const;

 private:
  StableSeriesParams params_;
  std::vector<MarkBlock> blocks_;
  std::vector<double> mark_mean_;    // E e^{p(W - sigma^2/2)} per site
  std::vector<double> centering_;    // sum_{i<=N} b_i(t) per site
  double max_second_moment_ = 1.0;
  double max_mark_mean_ = 1.0;
  StableDiagnostics diag_;
};

struct StableSample {
  std::vector<double> values;
  StableDiagnostics diagnostics;
};

StableSample sample_stable_field(const StableSeriesParams& params, Sampler& rng);

struct StabilityReport {
  double theta = 0.0;
  std::vector<double> probs;
  std::vector<double> discrepancy;  // Q_{S+S'}(q) - 2^{1/theta} Q_S(q) - shift
  std::vector<double> std_error;    // bootstrap
  double shift = 0.0;               // fitted location (theta = 1 only)
  double max_abs_discrepancy = 0.0;
  bool pass = false;                // every |discrepancy| <= 4 std_error
};

// Strict-stability scaling test on scalar samples: pairs (s[2j], s[2j+1])
// give S + S'. Bootstrap resamples pairs, rep b on stream.child(b).
StabilityReport stability_check(std::span<const double> samples, double theta, std::size_t reps,
                                const Stream& stream, int threads = 0);

}  // namespace gpx

#endif  // GPX_STABLE_HPP
