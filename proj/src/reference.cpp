// Copyright 2026 The gpx Authors
// SPDX-License-Identifier: Apache-2.0

#include "gpx/reference.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "gpx/error.hpp"

namespace gpx::reference {

namespace {

std::vector<double> correlate(const Eigen::MatrixXd& l, const std::vector<double>& z) {
  std::vector<double> x(z.size(), 0.0);
  for (std::size_t r = 0; r < z.size(); ++r)
    for (std::size_t c = 0; c <= r; ++c) x[r] += l(r, c) * z[c];
  return x;
}

std::vector<double> normals(Sampler& rng, std::size_t k) {
  std::vector<double> z(k);
  for (double& v : z) v = rng.normal();
  return z;
}

template <class Fold>
PathBatch fold(const CovMatrix& cov, std::size_t n, std::size_t reps, const Stream& stream, double init,
               Fold&& step) {
  if (n < 1 || reps < 1) throw ParameterError("reference: n and reps must be >= 1");
  const std::size_t k = cov.size();
  PathBatch out{cov.sites(), RowMatrix(static_cast<Eigen::Index>(reps), static_cast<Eigen::Index>(k)),
                stream.describe()};
  for (std::size_t r = 0; r < reps; ++r) {
    Sampler rng(stream.child(r));
    std::vector<double> acc(k, init);
    for (std::size_t i = 0; i < n; ++i) {
      const auto x = correlate(cov.factor(), normals(rng, k));
      for (std::size_t j = 0; j < k; ++j) acc[j] = step(acc[j], x[j]);
    }
    for (std::size_t j = 0; j < k; ++j) out.paths(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = acc[j];
  }
  return out;
}

// Repeated pairwise merging until no two intervals overlap.
double merged_length(std::vector<std::pair<double, double>> iv) {
  bool merged = true;
  while (merged) {
    merged = false;
    for (std::size_t a = 0; a < iv.size() && !merged; ++a) {
      for (std::size_t b = a + 1; b < iv.size(); ++b) {
        if (iv[a].first <= iv[b].second && iv[b].first <= iv[a].second) {
          iv[a] = {std::min(iv[a].first, iv[b].first), std::max(iv[a].second, iv[b].second)};
          iv.erase(iv.begin() + static_cast<std::ptrdiff_t>(b));
          merged = true;
          break;
        }
      }
    }
  }
  double total = 0.0;
  for (const auto& [lo, hi] : iv) total += hi - lo;
  return total;
}

template <bool Max>
FidiResult fidi(const FidiQuery& q, std::size_t inner_samples, const Stream& stream) {
  const std::size_t k = q.sites.size();
  if (k < 1 || q.thresholds.size() != k) throw ParameterError("reference fidi: malformed query");
  const GammaMatrix sub = q.gamma.restrict(q.sites);
  const auto blocks = mark_blocks(sub, q.anchors);
  double exponent = 0.0, variance = 0.0;
  bool exact = true;
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const MarkBlock& m = blocks[b];
    const std::size_t kb = m.indices.size();
    auto value = [&](const std::vector<double>& w) {
      if constexpr (Max) {
        double best = 0.0;
        for (std::size_t j = 0; j < kb; ++j) {
          const std::size_t s = m.indices[j];
          const double y = q.thresholds[s] - (q.drift.empty() ? 0.0 : q.drift[s]);
          best = std::max(best, std::exp(w[j] - m.half_variance[j] - y));
        }
        return best;
      } else {
        std::vector<std::pair<double, double>> iv;
        for (std::size_t j = 0; j < kb; ++j) {
          const double y = q.thresholds[m.indices[j]];
          iv.emplace_back(-w[j] - y, -w[j] + y);
        }
        return merged_length(iv);
      }
    };
    if (m.factor.isZero(0.0)) {
      exponent += value(std::vector<double>(kb, 0.0));
      continue;
    }
    exact = false;
    std::vector<double> values;
    values.reserve(inner_samples);
    const Stream bs = stream.child(b);
    for (std::size_t c = 0; c * kPathBatch < inner_samples; ++c) {
      Sampler rng(bs.child(c));
      const std::size_t count = std::min(kPathBatch, inner_samples - c * kPathBatch);
      for (std::size_t i = 0; i < count; ++i) values.push_back(value(correlate(m.factor, normals(rng, kb))));
    }
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    exponent += mean;
    variance += ss / static_cast<double>(values.size() - 1) / static_cast<double>(values.size());
  }
  FidiResult r;
  r.probability = std::exp(-exponent);
  r.std_error = r.probability * std::sqrt(variance);
  r.inner_samples = exact ? 0 : inner_samples;
  r.method = exact ? "exact" : "reference";
  return r;
}

}  // namespace

PathBatch sample_paths(const CovMatrix& c, std::size_t m, const Stream& stream) {
  const std::size_t k = c.size();
  PathBatch out{c.sites(), RowMatrix(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(k)), stream.describe()};
  for (std::size_t first = 0; first < m; first += kPathBatch) {
    Sampler rng(stream.child(first / kPathBatch));
    for (std::size_t i = first; i < std::min(m, first + kPathBatch); ++i) {
      const auto x = correlate(c.factor(), normals(rng, k));
      for (std::size_t j = 0; j < k; ++j) out.paths(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = x[j];
    }
  }
  return out;
}

PathBatch sample_Mn(const CovMatrix& cov, std::size_t n, std::size_t reps, const Stream& stream) {
  return fold(cov, n, reps, stream, -kInf, [](double a, double x) { return std::max(a, x); });
}

PathBatch sample_Ln(const CovMatrix& cov, std::size_t n, std::size_t reps, const Stream& stream) {
  return fold(cov, n, reps, stream, kInf, [](double a, double x) { return std::min(a, std::fabs(x)); });
}

FidiResult fidi_cdf_max(const FidiQuery& q, std::size_t inner_samples, const Stream& stream) {
  return fidi<true>(q, inner_samples, stream);
}

FidiResult fidi_surv_min(const FidiQuery& q, std::size_t inner_samples, const Stream& stream) {
  return fidi<false>(q, inner_samples, stream);
}

}  // namespace gpx::reference
