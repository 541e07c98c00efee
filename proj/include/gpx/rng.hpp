// Copyright 2026 The gpx Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef GPX_RNG_HPP
#define GPX_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gpx {

// A seeded random stream identified by a root seed and a path of child
// indices. Children are derived deterministically, so work split into
// batches keyed by index is reproducible regardless of thread count.
class Stream {
 public:
  explicit Stream(std::uint64_t seed) : seed_(seed) {}

  Stream child(std::uint64_t index) const;
  // Label children hash the label (FNV-1a) into an index.
  Stream child(std::string_view label) const;

  std::uint64_t seed() const noexcept { return seed_; }
  std::span<const std::uint64_t> path() const noexcept { return path_; }

  // "seed/i/j/..." form, recorded in every randomized output.
  std::string describe() const;

  std::mt19937_64 engine() const;

 private:
  std::uint64_t seed_;
  std::vector<std::uint64_t> path_;
};

// Standard normal quantile (Wichura AS241, relative accuracy ~1e-16).
double normal_quantile(double p);

double normal_cdf(double x);
double normal_pdf(double x);

// Draws from one stream. Normals use the inverse-CDF transform of 53-bit
// uniforms so the sequence only depends on the engine output.
class Sampler {
 public:
  explicit Sampler(const Stream& stream) : engine_(stream.engine()) {}

  // Uniform on the open interval (0, 1).
  double uniform() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }
  double normal() { return normal_quantile(uniform()); }
  double exponential() { return -std::log(uniform()); }
  void fill_normal(std::span<double> out) {
    for (double& x : out) x = normal();
  }
  std::uint64_t bits() { return engine_(); }
  // Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound);

 private:
  std::mt19937_64 engine_;
};

}  // namespace gpx

#endif  // GPX_RNG_HPP
