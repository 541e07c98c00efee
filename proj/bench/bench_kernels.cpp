// Copyright 2026 The gpx Authors
// SPDX-License-Identifier: Apache-2.0
//
// Wall-clock comparison of the serial reference kernels and the blocked
// OpenMP kernels on identical streams. Also reports the largest absolute
// difference between the two outputs.

#include <chrono>
#include <cstdio>
#include <functional>

#include "gpx/empirical.hpp"
#include "gpx/kernel.hpp"
#include "gpx/limitproc.hpp"
#include "gpx/parallel.hpp"
#include "gpx/reference.hpp"

namespace {

double time_it(const std::function<void()>& f) {
  const auto start = std::chrono::steady_clock::now();
  f();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

void report(const char* name, double serial, double parallel, double diff) {
  std::printf("%-28s serial %8.3f s   openmp %8.3f s   speedup %5.2fx   max|diff| %.3g\n", name, serial, parallel,
              serial / parallel, diff);
}

}  // namespace

int main() {
  using namespace gpx;
  std::printf("OpenMP threads: %d\n", resolve_threads(0));
  const GammaMatrix g = gamma_matrix(KernelSpec::fbm(1.0), make_sites({0.0, 0.5, 1.0}));
  const CovMatrix cov = cholesky_factor(schoenberg_cov(g, 1e4));
  const Stream stream(7);

  PathBatch ref, fast;
  double ts = time_it([&] { ref = reference::sample_Mn(cov, 10000, 200, stream); });
  double tp = time_it([&] { fast = sample_Mn(cov, 10000, 200, stream); });
  report("sample_Mn n=1e4 reps=200", ts, tp, (ref.paths - fast.paths).cwiseAbs().maxCoeff());

  ts = time_it([&] { ref = reference::sample_Ln(cov, 10000, 200, stream); });
  tp = time_it([&] { fast = sample_Ln(cov, 10000, 200, stream); });
  report("sample_Ln n=1e4 reps=200", ts, tp, (ref.paths - fast.paths).cwiseAbs().maxCoeff());

  ts = time_it([&] { ref = reference::sample_paths(cov, 1000000, stream); });
  tp = time_it([&] { fast = sample_paths(cov, 1000000, stream); });
  report("sample_paths m=1e6", ts, tp, (ref.paths - fast.paths).cwiseAbs().maxCoeff());

  const FidiQuery q{g, {0, 1, 2}, {0.0, 0.5, 1.0}, {}, {}};
  FidiResult a, b;
  ts = time_it([&] { a = reference::fidi_cdf_max(q, 1000000, stream); });
  tp = time_it([&] { b = fidi_cdf_max(q, 1000000, stream); });
  report("fidi_cdf_max inner=1e6", ts, tp, std::fabs(a.probability - b.probability));

  ts = time_it([&] { a = reference::fidi_surv_min(q, 1000000, stream); });
  tp = time_it([&] { b = fidi_surv_min(q, 1000000, stream); });
  report("fidi_surv_min inner=1e6", ts, tp, std::fabs(a.probability - b.probability));
  return 0;
}
