// Copyright 2026 The gpx Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef GPX_REFERENCE_HPP
#define GPX_REFERENCE_HPP

#include <cstddef>

#include "gpx/gauss.hpp"
#include "gpx/limitproc.hpp"
#include "gpx/rng.hpp"

// Serial, unblocked versions of the parallel kernels. They consume random
// streams in exactly the same order, so outputs agree with the optimized
// paths up to floating-point summation order.
namespace gpx::reference {

PathBatch sample_paths(const CovMatrix& c, std::size_t m, const Stream& stream);
PathBatch sample_Mn(const CovMatrix& cov, std::size_t n, std::size_t reps, const Stream& stream);
PathBatch sample_Ln(const CovMatrix& cov, std::size_t n, std::size_t reps, const Stream& stream);
FidiResult fidi_cdf_max(const FidiQuery& q, std::size_t inner_samples, const Stream& stream);
FidiResult fidi_surv_min(const FidiQuery& q, std::size_t inner_samples, const Stream& stream);

}  // namespace gpx::reference

#endif  // GPX_REFERENCE_HPP
