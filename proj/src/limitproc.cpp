// Copyright 2026 The gpx Authors
// SPDX-License-Identifier: Apache-2.0

#include "gpx/limitproc.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "gpx/error.hpp"
#include "gpx/parallel.hpp"

namespace gpx {

PoissonSkeleton sample_skeleton_gumbel(std::size_t count, Sampler& rng) {
  if (count < 1) throw ParameterError("sample_skeleton_gumbel: count must be >= 1");
  PoissonSkeleton s;
  s.u_values.reserve(count);
  double t = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    t += rng.exponential();
    s.u_values.push_back(-std::log(t));
  }
  return s;
}

PoissonSkeleton sample_skeleton_lebesgue(double window, Sampler& rng) {
  if (!(window > 0.0) || !std::isfinite(window))
    throw ParameterError("sample_skeleton_lebesgue: window must be positive and finite");
  PoissonSkeleton s;
  s.intensity = Intensity::lebesgue;
  s.window = window;
  // Arrivals of a rate-1 process on [0, 2R], shifted to [-R, R].
  for (double t = rng.exponential(); t <= 2.0 * window; t += rng.exponential()) s.u_values.push_back(t - window);
  // Unordered by contract: randomize the order (Fisher-Yates).
  for (std::size_t i = s.u_values.size(); i > 1; --i) std::swap(s.u_values[i - 1], s.u_values[rng.below(i)]);
  return s;
}

std::vector<MarkBlock> mark_blocks(const GammaMatrix& g, const AnchorChoice& anchors) {
  const BlockPartition part = decompose_extended(g);
  if (!anchors.empty() && anchors.size() != part.blocks.size())
    throw ParameterError("anchor list must name one site per block (" + std::to_string(part.blocks.size()) +
                         " blocks)");
  std::vector<MarkBlock> out;
  for (std::size_t b = 0; b < part.blocks.size(); ++b) {
    MarkBlock m;
    m.indices = part.blocks[b];
    m.anchor = anchors.empty() ? m.indices.front() : anchors[b];
    if (m.anchor >= g.size() || part.block_of[m.anchor] != b)
      throw BlockError("anchor " + std::to_string(m.anchor) + " is not in block " + std::to_string(b));
    m.factor = cholesky_factor(ws_covariance(g, m.anchor, m.indices)).factor();
    for (std::size_t i : m.indices) m.half_variance.push_back(0.5 * g(i, m.anchor));
    out.push_back(std::move(m));
  }
  return out;
}

void draw_marks(const Eigen::MatrixXd& l, Sampler& rng, std::vector<double>& z, std::vector<double>& w) {
  const std::size_t k = z.size();
  for (double& v : z) v = rng.normal();
  for (std::size_t r = 0; r < k; ++r) {
    double acc = 0.0;
    for (std::size_t c = 0; c <= r; ++c) acc += l(r, c) * z[c];
    w[r] = acc;
  }
}

namespace {

double upper_quantile(std::vector<double> v, double level) {
  std::sort(v.begin(), v.end());
  return sorted_quantile(v, level);
}

template <class Sample>
PathBatch batch_of(const std::vector<Site>& sites, std::size_t reps, const Stream& stream, int threads,
                   const Sample& sample) {
  if (reps < 1) throw ParameterError("sample_batch: reps must be >= 1");
  const auto k = static_cast<Eigen::Index>(sites.size());
  PathBatch out{sites, RowMatrix(static_cast<Eigen::Index>(reps), k), stream.describe()};
  parallel_for(reps, threads, [&](std::size_t r) {
    Sampler rng(stream.child(r));
    sample(rng, std::span<double>(out.paths.row(static_cast<Eigen::Index>(r)).data(), sites.size()));
  });
  return out;
}

}  // namespace

MGammaSampler::MGammaSampler(const GammaMatrix& g, const Stream& pilot_stream, MaxStopping stop,
                             std::vector<double> drift, AnchorChoice anchors)
    : sites_(g.sites()), drift_(std::move(drift)), stop_(stop), blocks_(mark_blocks(g, anchors)) {
  if (!drift_.empty() && drift_.size() != g.size()) throw ParameterError("MGammaSampler: drift size mismatch");
  if (drift_.empty()) drift_.assign(g.size(), 0.0);
  if (!(stop_.delta > 0.0 && stop_.delta < 1.0)) throw ParameterError("MGammaSampler: delta must lie in (0, 1)");
  if (stop_.pilot < 1 || stop_.max_points < 1) throw ParameterError("MGammaSampler: pilot and max_points must be >= 1");
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    MarkBlock& m = blocks_[b];
    Sampler rng(pilot_stream.child(b));
    std::vector<double> z(m.indices.size()), w(m.indices.size()), tops(stop_.pilot);
    for (double& top : tops) {
      draw_marks(m.factor, rng, z, w);
      top = -kInf;
      for (std::size_t j = 0; j < w.size(); ++j) top = std::max(top, w[j] - m.half_variance[j]);
    }
    m.pilot_bound = upper_quantile(std::move(tops), 1.0 - stop_.delta);
  }
}

void MGammaSampler::sample(Sampler& rng, std::span<double> out, SampleDiagnostics* diag) const {
  if (out.size() != sites_.size()) throw ParameterError("MGammaSampler: output size mismatch");
  std::size_t used = 0;
  for (const MarkBlock& m : blocks_) {
    const std::size_t k = m.indices.size();
    std::vector<double> acc(k, -kInf), z(k), w(k);
    double t = 0.0;
    double floor = -kInf;  // min over sites of the running maximum
    for (std::size_t count = 0;; ++count) {
      t += rng.exponential();
      const double u = -std::log(t);
      if (count > 0 && u + m.pilot_bound < floor) {
        used += count;
        break;
      }
      if (count == stop_.max_points)
        throw TruncationError("MGammaSampler: stopping rule not met within max_points", count,
                              u + m.pilot_bound - floor);
      draw_marks(m.factor, rng, z, w);
      floor = kInf;
      for (std::size_t j = 0; j < k; ++j) {
        acc[j] = std::max(acc[j], u + w[j] - m.half_variance[j]);
        floor = std::min(floor, acc[j]);
      }
    }
    for (std::size_t j = 0; j < k; ++j) out[m.indices[j]] = acc[j] + drift_[m.indices[j]];
  }
  if (diag) *diag = {used, stop_.delta, 0.0};
}

PathBatch MGammaSampler::sample_batch(std::size_t reps, const Stream& stream, int threads) const {
  return batch_of(sites_, reps, stream, threads, [this](Sampler& rng, std::span<double> row) { sample(rng, row); });
}

LGammaSampler::LGammaSampler(const GammaMatrix& g, const Stream& pilot_stream, MinWindow window,
                             AnchorChoice anchors)
    : sites_(g.sites()), window_(window), blocks_(mark_blocks(g, anchors)) {
  if (!(window_.y_max > 0.0) || !std::isfinite(window_.y_max))
    throw ParameterError("LGammaSampler: y_max must be positive and finite");
  if (!(window_.delta > 0.0 && window_.delta < 1.0)) throw ParameterError("LGammaSampler: delta must lie in (0, 1)");
  if (window_.pilot < 1 || window_.max_points < 1) throw ParameterError("LGammaSampler: pilot and max_points must be >= 1");
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    MarkBlock& m = blocks_[b];
    Sampler rng(pilot_stream.child(b));
    std::vector<double> z(m.indices.size()), w(m.indices.size()), tops(window_.pilot);
    for (double& top : tops) {
      draw_marks(m.factor, rng, z, w);
      top = 0.0;
      for (double x : w) top = std::max(top, std::fabs(x));
    }
    m.pilot_bound = upper_quantile(std::move(tops), 1.0 - window_.delta / 2.0);
    if (!std::isfinite(window_.y_max + m.pilot_bound)) throw ParameterError("LGammaSampler: window overflow");
  }
}

void LGammaSampler::sample(Sampler& rng, std::span<double> out, SampleDiagnostics* diag) const {
  if (out.size() != sites_.size()) throw ParameterError("LGammaSampler: output size mismatch");
  std::size_t used = 0;
  double covered = kInf;
  for (const MarkBlock& m : blocks_) {
    const std::size_t k = m.indices.size();
    const double radius = window_.y_max + m.pilot_bound;
    covered = std::min(covered, radius);
    std::vector<double> acc(k, kInf), z(k), w(k);
    double d = 0.0;
    double ceiling = kInf;  // max over sites of the running minimum
    for (std::size_t count = 0;; ++count) {
      // Distances |u| of a rate-1 process on the line arrive at rate 2.
      d += 0.5 * rng.exponential();
      if (d > radius && d - m.pilot_bound > ceiling) {
        used += count;
        break;
      }
      if (count == window_.max_points)
        throw TruncationError("LGammaSampler: enumeration not closed within max_points", count,
                              ceiling - (d - m.pilot_bound));
      const double u = rng.uniform() < 0.5 ? -d : d;
      draw_marks(m.factor, rng, z, w);
      ceiling = 0.0;
      for (std::size_t j = 0; j < k; ++j) {
        acc[j] = std::min(acc[j], std::fabs(u + w[j]));
        ceiling = std::max(ceiling, acc[j]);
      }
    }
    for (std::size_t j = 0; j < k; ++j) out[m.indices[j]] = acc[j];
  }
  if (diag) *diag = {used, window_.delta, covered};
}

PathBatch LGammaSampler::sample_batch(std::size_t reps, const Stream& stream, int threads) const {
  return batch_of(sites_, reps, stream, threads, [this](Sampler& rng, std::span<double> row) { sample(rng, row); });
}

double union_length(std::span<std::pair<double, double>> intervals) {
  std::sort(intervals.begin(), intervals.end());
  double total = 0.0;
  double lo = -kInf, hi = -kInf;
  for (const auto& [a, b] : intervals) {
    if (a > hi) {
      if (hi > lo) total += hi - lo;
      lo = a;
      hi = b;
    } else {
      hi = std::max(hi, b);
    }
  }
  if (hi > lo) total += hi - lo;
  return total;
}

namespace {

enum class FidiKind { max, min };

template <FidiKind Kind>
FidiResult fidi_estimate(const FidiQuery& q, std::size_t inner_samples, const Stream& stream, int threads) {
  const std::size_t k = q.sites.size();
  if (k < 1) throw ParameterError("fidi: at least one site required");
  if (q.thresholds.size() != k) throw ParameterError("fidi: thresholds size mismatch");
  if (!q.drift.empty() && q.drift.size() != k) throw ParameterError("fidi: drift size mismatch");
  if (inner_samples < 2) throw ParameterError("fidi: inner_samples must be >= 2");
  for (std::size_t j = 0; j < k; ++j) {
    if (!std::isfinite(q.thresholds[j])) throw ParameterError("fidi: thresholds must be finite");
    if (Kind == FidiKind::min && q.thresholds[j] < 0.0) throw ParameterError("fidi: min thresholds must be >= 0");
    if (q.sites[j] >= q.gamma.size()) throw ParameterError("fidi: site index out of range");
  }
  if (Kind == FidiKind::min && !q.drift.empty()) throw ParameterError("fidi_surv_min: drift is not supported");

  const GammaMatrix sub = q.gamma.restrict(q.sites);
  std::vector<double> level(k);
  for (std::size_t j = 0; j < k; ++j) level[j] = q.thresholds[j] - (q.drift.empty() ? 0.0 : q.drift[j]);

  const std::vector<MarkBlock> blocks = mark_blocks(sub, q.anchors);
  double exponent = 0.0;
  double variance = 0.0;
  bool exact = true;
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const MarkBlock& m = blocks[b];
    const std::size_t kb = m.indices.size();
    auto integrand = [&](const std::vector<double>& w, std::vector<std::pair<double, double>>& scratch) {
      if constexpr (Kind == FidiKind::max) {
        double top = -kInf;
        for (std::size_t j = 0; j < kb; ++j) top = std::max(top, w[j] - m.half_variance[j] - level[m.indices[j]]);
        return std::exp(top);
      } else {
        for (std::size_t j = 0; j < kb; ++j) {
          const double y = level[m.indices[j]];
          scratch[j] = {-w[j] - y, -w[j] + y};
        }
        return union_length(scratch);
      }
    };
    std::vector<std::pair<double, double>> scratch(kb);
    if (m.factor.isZero(0.0)) {
      exponent += integrand(std::vector<double>(kb, 0.0), scratch);
      continue;
    }
    exact = false;
    const std::size_t chunks = (inner_samples + kPathBatch - 1) / kPathBatch;
    std::vector<RunningMoments> parts(chunks);
    const Stream block_stream = stream.child(b);
    parallel_for(chunks, threads, [&](std::size_t c) {
      Sampler rng(block_stream.child(c));
      std::vector<double> z(kb), w(kb);
      std::vector<std::pair<double, double>> local(kb);
      const std::size_t count = std::min(kPathBatch, inner_samples - c * kPathBatch);
      for (std::size_t i = 0; i < count; ++i) {
        draw_marks(m.factor, rng, z, w);
        parts[c].push(integrand(w, local));
      }
    });
    RunningMoments total;
    for (const RunningMoments& p : parts) total.merge(p);
    exponent += total.mean;
    variance += total.variance() / static_cast<double>(total.count);
  }
  FidiResult r;
  r.probability = std::exp(-exponent);
  r.std_error = r.probability * std::sqrt(variance);
  r.inner_samples = exact ? 0 : inner_samples;
  r.method = exact ? "exact" : (Kind == FidiKind::max ? "reduced-mc-max" : "reduced-mc-min");
  return r;
}

}  // namespace

FidiResult fidi_cdf_max(const FidiQuery& q, std::size_t inner_samples, const Stream& stream, int threads) {
  return fidi_estimate<FidiKind::max>(q, inner_samples, stream, threads);
}

FidiResult fidi_surv_min(const FidiQuery& q, std::size_t inner_samples, const Stream& stream, int threads) {
  return fidi_estimate<FidiKind::min>(q, inner_samples, stream, threads);
}

double hr_bivariate_cdf(double gamma12, double y1, double y2, bool allow_limit) {
  if (std::isnan(gamma12) || std::isnan(y1) || std::isnan(y2)) throw ParameterError("hr_bivariate_cdf: NaN argument");
  if (gamma12 <= 0.0) {
    if (!allow_limit) throw ParameterError("hr_bivariate_cdf: gamma12 must be > 0");
    return std::exp(-std::exp(-std::min(y1, y2)));
  }
  if (is_inf(gamma12)) return std::exp(-std::exp(-y1) - std::exp(-y2));
  const double lambda = 0.5 * std::sqrt(gamma12);
  const double v = normal_cdf(lambda + (y2 - y1) / (2.0 * lambda)) * std::exp(-y1) +
                   normal_cdf(lambda + (y1 - y2) / (2.0 * lambda)) * std::exp(-y2);
  return std::exp(-v);
}

bool InvarianceReport::pass(double level) const {
  return std::all_of(entries.begin(), entries.end(), [&](const InvarianceEntry& e) { return e.ks.pass(level); });
}

InvarianceReport verify_sigma_invariance(const GammaMatrix& g, const std::vector<std::size_t>& anchors,
                                         std::size_t reps, const Stream& stream, int threads) {
  if (!g.all_finite()) throw ParameterError("verify_sigma_invariance: kernel must be finite");
  if (anchors.size() < 2) throw ParameterError("verify_sigma_invariance: need at least two anchors");
  const std::size_t k = g.size();
  std::vector<std::vector<std::vector<double>>> functionals;  // [anchor][functional][rep]
  for (std::size_t p = 0; p < anchors.size(); ++p) {
    if (anchors[p] >= k) throw ParameterError("verify_sigma_invariance: anchor out of range");
    const Stream s = stream.child(p);
    const MGammaSampler sampler(g, s.child("pilot"), {}, {}, {anchors[p]});
    const PathBatch batch = sampler.sample_batch(reps, s.child("draws"), threads);
    std::vector<std::vector<double>> f(k + 2, std::vector<double>(reps));
    for (std::size_t r = 0; r < reps; ++r) {
      const auto row = batch.paths.row(static_cast<Eigen::Index>(r));
      for (std::size_t j = 0; j < k; ++j) f[j][r] = row(static_cast<Eigen::Index>(j));
      f[k][r] = row.maxCoeff();
      f[k + 1][r] = row.maxCoeff() - row.minCoeff();
    }
    functionals.push_back(std::move(f));
  }
  InvarianceReport report;
  for (std::size_t a = 0; a < anchors.size(); ++a) {
    for (std::size_t b = a + 1; b < anchors.size(); ++b) {
      for (std::size_t f = 0; f < k + 2; ++f) {
        const std::string name = f < k ? "site:" + std::to_string(f) : (f == k ? "max" : "spread");
        report.entries.push_back({name, anchors[a], anchors[b], ks_two_sample(functionals[a][f], functionals[b][f])});
      }
    }
  }
  return report;
}

}  // namespace gpx
