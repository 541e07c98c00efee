// Copyright 2026 The gpx Authors
// SPDX-License-Identifier: Apache-2.0

#include "gpx/stable.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <numeric>

#include "gpx/error.hpp"
#include "gpx/parallel.hpp"
#include "gpx/stats.hpp"

namespace gpx {

std::string to_string(ExponentConvention c) {
  return c == ExponentConvention::as_printed ? "as_printed" : "reciprocal";
}

double series_exponent(double alpha, ExponentConvention c) {
  if (!(alpha > 0.0 && alpha < 2.0)) throw ParameterError("stable: alpha must lie in (0, 2)");
  return c == ExponentConvention::as_printed ? alpha : 1.0 / alpha;
}

namespace {

double sin_over_x2(double x) { return std::sin(x) / (x * x); }

// Integral of sin(x)/x^2 over [a, b], 0 < a < b < inf.
double sinc2_integral(double a, double b) {
  using boost::math::quadrature::gauss_kronrod;
  return gauss_kronrod<double, 31>::integrate(sin_over_x2, a, b, 20, 1e-13);
}

// Integral of sin(x)/x^2 over [a, inf). Below 1 the range is split into
// doubling panels; above, pi-length panels up to X plus the asymptotic tail
// cos X / X^2 + 2 sin X / X^3 (error O(X^-4)).
double sinc2_tail(double a) {
  constexpr int kPanels = 2000;
  double sum = 0.0;
  double lo = a;
  while (lo < 1.0) {
    const double hi = std::min(2.0 * lo, 1.0);
    sum += sinc2_integral(lo, hi);
    lo = hi;
  }
  for (int k = 1; k <= kPanels; ++k) {
    const double hi = 1.0 + k * M_PI;
    sum += sinc2_integral(lo, hi);
    lo = hi;
  }
  return sum + std::cos(lo) / (lo * lo) + 2.0 * std::sin(lo) / (lo * lo * lo);
}

double b_alpha_one(std::size_t i) {
  if (i == 1) return sinc2_tail(1.0);
  const double di = static_cast<double>(i);
  return sinc2_integral(1.0 / di, 1.0 / (di - 1.0));
}

// Sum of the per-convention centering over i = 1..n (telescoped).
double centering_sum(std::size_t n, double alpha, ExponentConvention c) {
  if (n == 0 || alpha < 1.0) return 0.0;
  if (alpha == 1.0) return sinc2_tail(1.0 / static_cast<double>(n));
  const double dn = static_cast<double>(n);
  const double e = c == ExponentConvention::as_printed ? alpha / (alpha - 1.0) : (alpha - 1.0) / alpha;
  return alpha / (alpha - 1.0) * std::pow(dn, e);
}

// E[Gamma_n^q] for Gamma_n ~ Gamma(n, 1).
double gamma_moment(std::size_t n, double q) {
  const double dn = static_cast<double>(n);
  if (!(dn + q > 0.0)) return kInf;
  return std::exp(std::lgamma(dn + q) - std::lgamma(dn));
}

}  // namespace

double centering_b(std::size_t i, double alpha) {
  if (i < 1) throw ParameterError("centering_b: i must be >= 1");
  if (!(alpha > 0.0 && alpha < 2.0)) throw ParameterError("centering_b: alpha must lie in (0, 2)");
  if (alpha < 1.0) return 0.0;
  if (alpha == 1.0) return b_alpha_one(i);
  const double e = alpha / (alpha - 1.0);
  const double di = static_cast<double>(i);
  return alpha / (alpha - 1.0) * (std::pow(di, e) - std::pow(di - 1.0, e));
}

double centering_b(std::size_t i, double alpha, ExponentConvention c) {
  if (c == ExponentConvention::as_printed || alpha <= 1.0) return centering_b(i, alpha);
  if (i < 1) throw ParameterError("centering_b: i must be >= 1");
  if (!(alpha < 2.0)) throw ParameterError("centering_b: alpha must lie in (0, 2)");
  const double e = (alpha - 1.0) / alpha;
  const double di = static_cast<double>(i);
  return alpha / (alpha - 1.0) * (std::pow(di, e) - std::pow(di - 1.0, e));
}

StableFieldSampler::StableFieldSampler(StableSeriesParams params)
    : params_(std::move(params)), blocks_(mark_blocks(params_.gamma, params_.anchors)) {
  const double p = series_exponent(params_.alpha, params_.convention);
  if (params_.truncation.max_terms < 1) throw ParameterError("stable: max_terms must be >= 1");
  if (!(params_.truncation.tail_budget > 0.0)) throw ParameterError("stable: tail_budget must be positive");

  diag_.exponent = p;
  diag_.convention = params_.convention;
  diag_.centered = params_.centering_enabled && !params_.random_signs && params_.alpha >= 1.0;
  diag_.compensated = !params_.random_signs && (diag_.centered || params_.compensate);

  const std::string regime = "alpha=" + std::to_string(params_.alpha) + ", convention=" + to_string(params_.convention);
  bool converges;
  if (params_.random_signs) {
    converges = 2.0 * p > 1.0;
  } else if (diag_.centered) {
    // Printed centering for alpha > 1 grows like i^{alpha/(alpha-1)}.
    converges = params_.alpha == 1.0 || params_.convention == ExponentConvention::reciprocal;
  } else {
    converges = p > 1.0;
  }
  if (!converges) throw TruncationError("stable: series diverges for " + regime, 0, kInf);

  mark_mean_.assign(size(), 1.0);
  max_second_moment_ = 0.0;
  max_mark_mean_ = 0.0;
  for (const MarkBlock& m : blocks_) {
    for (std::size_t j = 0; j < m.indices.size(); ++j) {
      const double s2 = 2.0 * m.half_variance[j];
      mark_mean_[m.indices[j]] = std::exp(p * (p - 1.0) * s2 / 2.0);
      max_second_moment_ = std::max(max_second_moment_, std::exp(p * (2.0 * p - 1.0) * s2));
      max_mark_mean_ = std::max(max_mark_mean_, mark_mean_[m.indices[j]]);
    }
  }

  const StableTruncation& tr = params_.truncation;
  const double worst = tail_bound(tr.max_terms);
  if (!(worst <= tr.tail_budget))
    throw TruncationError("stable: tail bound " + std::to_string(worst) + " exceeds budget at max_terms for " + regime,
                          tr.max_terms, worst);
  std::size_t lo = 1, hi = tr.max_terms;
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if (tail_bound(mid) <= tr.tail_budget) hi = mid; else lo = mid + 1;
  }
  diag_.terms = lo;
  diag_.tail_bound = tail_bound(lo);

  centering_.assign(size(), 0.0);
  if (diag_.centered) {
    const double total = centering_sum(diag_.terms, params_.alpha, params_.convention);
    for (std::size_t j = 0; j < size(); ++j) centering_[j] = total * mark_mean_[j];
  }
}

double StableFieldSampler::tail_bound(std::size_t terms) const {
  if (terms < 1) return kInf;
  const double p = diag_.exponent;
  double bound = std::sqrt(gamma_moment(terms, 1.0 - 2.0 * p) * max_second_moment_ / (2.0 * p - 1.0));
  if (!diag_.compensated && !params_.random_signs) bound += max_mark_mean_ * gamma_moment(terms, 1.0 - p) / (p - 1.0);
  return bound;
}

void StableFieldSampler::sample(Sampler& rng, std::span<double> out) const {
  if (out.size() != size()) throw ParameterError("StableFieldSampler: output size mismatch");
  const double p = diag_.exponent;
  const std::size_t n = diag_.terms;
  const double dn = static_cast<double>(n);
  for (const MarkBlock& m : blocks_) {
    const std::size_t k = m.indices.size();
    const bool marked = !m.factor.isZero(0.0);
    std::vector<double> acc(k, 0.0), z(k), w(k, 0.0);
    double t = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      t += rng.exponential();
      const double log_t = std::log(t);
      const double sign = params_.random_signs ? (rng.uniform() < 0.5 ? -1.0 : 1.0) : 1.0;
      if (marked) draw_marks(m.factor, rng, z, w);
      for (std::size_t j = 0; j < k; ++j) acc[j] += sign * std::exp(p * (w[j] - m.half_variance[j] - log_t));
    }
    for (std::size_t j = 0; j < k; ++j) {
      const std::size_t site = m.indices[j];
      double remainder = 0.0;
      if (diag_.compensated) {
        // Conditional mean of the dropped terms (minus dropped centering)
        // given Gamma_N = t.
        if (p > 1.0) {
          remainder = mark_mean_[site] * std::pow(t, 1.0 - p) / (p - 1.0);
        } else if (p < 1.0) {
          remainder = mark_mean_[site] * (std::pow(dn, 1.0 - p) - std::pow(t, 1.0 - p)) / (1.0 - p);
        } else {
          remainder = std::log(dn / t) + 1.0 / (12.0 * dn * dn);
        }
      }
      out[site] = acc[j] - centering_[site] + remainder;
    }
  }
}

PathBatch StableFieldSampler::sample_batch(std::size_t reps, const Stream& stream, int threads) const {
  if (reps < 1) throw ParameterError("StableFieldSampler: reps must be >= 1");
  const auto k = static_cast<Eigen::Index>(size());
  PathBatch out{params_.gamma.sites(), RowMatrix(static_cast<Eigen::Index>(reps), k), stream.describe()};
  parallel_for(reps, threads, [&](std::size_t r) {
    Sampler rng(stream.child(r));
    sample(rng, std::span<double>(out.paths.row(static_cast<Eigen::Index>(r)).data(), size()));
  });
  return out;
}

StableSample sample_stable_field(const StableSeriesParams& params, Sampler& rng) {
  const StableFieldSampler sampler(params);
  StableSample s{std::vector<double>(sampler.size()), sampler.diagnostics()};
  sampler.sample(rng, s.values);
  return s;
}

namespace {

// Type-7 quantiles at ascending probs; reorders v.
std::vector<double> select_quantiles(std::vector<double>& v, const std::vector<double>& probs) {
  std::vector<double> q;
  q.reserve(probs.size());
  const std::size_t n = v.size();
  auto first = v.begin();
  for (double p : probs) {
    const double h = p * static_cast<double>(n - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    auto nth = v.begin() + static_cast<std::ptrdiff_t>(lo);
    std::nth_element(first, nth, v.end());
    const double a = *nth;
    const double b = lo + 1 < n ? *std::min_element(nth + 1, v.end()) : a;
    q.push_back(a + (h - static_cast<double>(lo)) * (b - a));
    first = nth;
  }
  return q;
}

struct Discrepancy {
  std::vector<double> values;
  double shift = 0.0;
};

template <class PairIndex>
Discrepancy pair_discrepancy(std::span<const double> s, std::size_t pairs, double theta,
                             const std::vector<double>& probs, PairIndex&& pick) {
  std::vector<double> sums(pairs), singles(2 * pairs);
  for (std::size_t j = 0; j < pairs; ++j) {
    const std::size_t idx = pick(j);
    singles[2 * j] = s[2 * idx];
    singles[2 * j + 1] = s[2 * idx + 1];
    sums[j] = s[2 * idx] + s[2 * idx + 1];
  }
  const auto qs = select_quantiles(sums, probs);
  const auto q1 = select_quantiles(singles, probs);
  const double scale = std::pow(2.0, 1.0 / theta);
  Discrepancy d;
  d.values.resize(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) d.values[i] = qs[i] - scale * q1[i];
  if (theta == 1.0) {
    d.shift = std::accumulate(d.values.begin(), d.values.end(), 0.0) / static_cast<double>(probs.size());
    for (double& v : d.values) v -= d.shift;
  }
  return d;
}

}  // namespace

StabilityReport stability_check(std::span<const double> samples, double theta, std::size_t reps,
                                const Stream& stream, int threads) {
  if (samples.size() < 10000) throw ParameterError("stability_check: need at least 1e4 samples");
  if (!(theta > 0.0) || !std::isfinite(theta)) throw ParameterError("stability_check: theta must be positive");
  if (reps < 2) throw ParameterError("stability_check: need at least 2 bootstrap reps");
  for (double x : samples)
    if (!std::isfinite(x)) throw DataError("stability_check: non-finite sample");

  StabilityReport r;
  r.theta = theta;
  r.probs = {0.25, 0.5, 0.75, 0.9};
  const std::size_t pairs = samples.size() / 2;
  const Discrepancy base = pair_discrepancy(samples, pairs, theta, r.probs, [](std::size_t j) { return j; });
  r.discrepancy = base.values;
  r.shift = base.shift;

  std::vector<std::vector<double>> boot(reps);
  parallel_for(reps, threads, [&](std::size_t b) {
    Sampler rng(stream.child(b));
    boot[b] = pair_discrepancy(samples, pairs, theta, r.probs, [&](std::size_t) { return rng.below(pairs); }).values;
  });
  r.std_error.assign(r.probs.size(), 0.0);
  r.pass = true;
  for (std::size_t i = 0; i < r.probs.size(); ++i) {
    RunningMoments m;
    for (const auto& v : boot) m.push(v[i]);
    r.std_error[i] = std::sqrt(m.variance());
    r.max_abs_discrepancy = std::max(r.max_abs_discrepancy, std::fabs(r.discrepancy[i]));
    if (!(std::fabs(r.discrepancy[i]) <= 4.0 * r.std_error[i])) r.pass = false;
  }
  return r;
}

}  // namespace gpx
