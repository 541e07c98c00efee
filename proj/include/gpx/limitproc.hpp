// Copyright 2026 The gpx Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef GPX_LIMITPROC_HPP
#define GPX_LIMITPROC_HPP

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "gpx/gauss.hpp"
#include "gpx/kernel.hpp"
#include "gpx/rng.hpp"
#include "gpx/stats.hpp"

namespace gpx {

enum class Intensity { gumbel, lebesgue };

// Atoms of a Poisson process on the line. Gumbel skeletons (intensity
// e^{-u} du) are strictly decreasing; Lebesgue skeletons are unordered
// points of [-window, window].
struct PoissonSkeleton {
  std::vector<double> u_values;
  Intensity intensity = Intensity::gumbel;
  double window = 0.0;
};

// The `count` largest atoms: U_i = -log(E_1 + ... + E_i).
PoissonSkeleton sample_skeleton_gumbel(std::size_t count, Sampler& rng);
// Poisson(2R) many uniform atoms on [-R, R].
PoissonSkeleton sample_skeleton_lebesgue(double window, Sampler& rng);

struct SampleDiagnostics {
  std::size_t points_used = 0;
  double error_bound = 0.0;  // pilot-calibrated per-sample miss probability
  double window = 0.0;       // minima only: guaranteed covered radius
};

// Per-block mark model: W^(s) restricted to one finite block.
struct MarkBlock {
  std::vector<std::size_t> indices;  // into the sampler's site list
  std::size_t anchor = 0;            // site index of s
  Eigen::MatrixXd factor;
  std::vector<double> half_variance;  // sigma^2 / 2 per index
  double pilot_bound = 0.0;
};

// Anchor per block: empty means the first site of every block; otherwise one
// site index per block (block order of decompose_extended).
using AnchorChoice = std::vector<std::size_t>;

// One MarkBlock per finite block of g, factor of W^(s) included. Throws
// BlockError if an anchor lies outside its block.
std::vector<MarkBlock> mark_blocks(const GammaMatrix& g, const AnchorChoice& anchors);

// w = L z with z fresh standard normals; z and w have the factor's size.
void draw_marks(const Eigen::MatrixXd& l, Sampler& rng, std::vector<double>& z, std::vector<double>& w);

struct MaxStopping {
  double delta = 1e-4;
  std::size_t pilot = 1000;
  std::size_t max_points = 100000;
};

// Sampler for M_Gamma(t) + drift(t) = max_i (U_i + W_i(t) - sigma^2(t)/2) +
// drift(t). Blocks of a kernel with infinite entries are sampled
// independently. The pilot bound is computed once at construction.
class MGammaSampler {
 public:
  MGammaSampler(const GammaMatrix& g, const Stream& pilot_stream, MaxStopping stop = {},
                std::vector<double> drift = {}, AnchorChoice anchors = {});

  std::size_t size() const noexcept { return sites_.size(); }
  const std::vector<MarkBlock>& blocks() const noexcept { return blocks_; }

  // Throws TruncationError when max_points is reached first.
  void sample(Sampler& rng, std::span<double> out, SampleDiagnostics* diag = nullptr) const;
  // Row r draws from stream.child(r).
  PathBatch sample_batch(std::size_t reps, const Stream& stream, int threads = 0) const;

 private:
  std::vector<Site> sites_;
  std::vector<double> drift_;
  MaxStopping stop_;
  std::vector<MarkBlock> blocks_;
};

struct MinWindow {
  double y_max = 5.0;
  double delta = 1e-4;
  std::size_t pilot = 1000;
  std::size_t max_points = 1000000;
};

// Sampler for L_Gamma(t) = min_i |U_i + W_i(t)| under Lebesgue intensity.
// Atoms are enumerated outward from 0. Every atom in [-R, R], R = y_max + Q,
// is used (Q the pilot (1 - delta/2)-quantile of max |W|), and enumeration
// continues until |u| - Q exceeds every running minimum.
class LGammaSampler {
 public:
  LGammaSampler(const GammaMatrix& g, const Stream& pilot_stream, MinWindow window = {},
                AnchorChoice anchors = {});

  std::size_t size() const noexcept { return sites_.size(); }
  const std::vector<MarkBlock>& blocks() const noexcept { return blocks_; }

  void sample(Sampler& rng, std::span<double> out, SampleDiagnostics* diag = nullptr) const;
  PathBatch sample_batch(std::size_t reps, const Stream& stream, int threads = 0) const;

 private:
  std::vector<Site> sites_;
  MinWindow window_;
  std::vector<MarkBlock> blocks_;
};

struct FidiQuery {
  GammaMatrix gamma;
  std::vector<std::size_t> sites;  // indices into gamma
  std::vector<double> thresholds;
  std::vector<double> drift;       // max queries only; empty means zero
  AnchorChoice anchors;            // positions into `sites`, one per block
};

struct FidiResult {
  double probability = 0.0;
  double std_error = 0.0;
  std::size_t inner_samples = 0;
  std::string method;
};

// P[M_Gamma(t_j) + drift_j <= y_j for all j] = exp(-E max_j exp(W_j -
// sigma_j^2/2 - y_j + drift_j)), estimated by Monte Carlo over W.
FidiResult fidi_cdf_max(const FidiQuery& q, std::size_t inner_samples, const Stream& stream,
                        int threads = 0);
// P[L_Gamma(t_j) > y_j for all j] = exp(-E |union_j [-W_j - y_j, -W_j + y_j]|).
FidiResult fidi_surv_min(const FidiQuery& q, std::size_t inner_samples, const Stream& stream,
                         int threads = 0);

// Lebesgue measure of a union of closed intervals [lo_j, hi_j].
double union_length(std::span<std::pair<double, double>> intervals);

// Bivariate Husler-Reiss distribution function with lambda = sqrt(gamma12)/2.
// gamma12 = inf gives the independent product. gamma12 <= 0 requires
// allow_limit and returns exp(-e^{-min(y1, y2)}).
double hr_bivariate_cdf(double gamma12, double y1, double y2, bool allow_limit = false);

struct InvarianceEntry {
  std::string functional;  // "site:<i>", "max" or "spread"
  std::size_t anchor_a = 0;
  std::size_t anchor_b = 0;
  KsResult ks;
};

struct InvarianceReport {
  std::vector<InvarianceEntry> entries;
  bool pass(double level = 0.01) const;
};

// Samples M_Gamma once per anchor (W = W^(s), stream.child(position)) and
// compares matched functionals pairwise by two-sample KS.
InvarianceReport verify_sigma_invariance(const GammaMatrix& g, const std::vector<std::size_t>& anchors,
                                         std::size_t reps, const Stream& stream, int threads = 0);

}  // namespace gpx

#endif  // GPX_LIMITPROC_HPP
