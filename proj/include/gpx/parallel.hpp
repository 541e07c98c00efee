// Copyright 2026 The gpx Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef GPX_PARALLEL_HPP
#define GPX_PARALLEL_HPP

#include <omp.h>

#include <cstddef>
#include <exception>
#include <mutex>

namespace gpx {

// Number of worker threads for a request; 0 means the OpenMP default.
inline int resolve_threads(int threads) { return threads > 0 ? threads : omp_get_max_threads(); }

// Runs body(i) for i in [0, count) across OpenMP threads. Every index owns
// its own random sub-stream, so results do not depend on scheduling. The
// first exception thrown by any body is rethrown on the calling thread.
template <class Body>
void parallel_for(std::size_t count, int threads, Body&& body) {
  std::exception_ptr error;
  std::mutex error_mutex;
  const auto n = static_cast<long long>(count);
#pragma omp parallel for schedule(dynamic, 1) num_threads(resolve_threads(threads))
  for (long long i = 0; i < n; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
      std::lock_guard<std::mutex> lock(error_mutex);
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace gpx

#endif  // GPX_PARALLEL_HPP
