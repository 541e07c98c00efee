// Copyright 2026 The gpx Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef GPX_IO_HPP
#define GPX_IO_HPP

#include <filesystem>
#include <iosfwd>
#include <json.hpp>
#include <string>
#include <vector>

#include "gpx/gauss.hpp"
#include "gpx/kernel.hpp"
#include "gpx/limitproc.hpp"
#include "gpx/rng.hpp"

namespace gpx {

using Json = nlohmann::json;

// 17 significant digits; "inf", "-inf" and "nan" spelled out.
std::string format_double(double x);

// Header "row,<site labels>", one path per line.
void write_paths_csv(const PathBatch& batch, std::ostream& out);
void write_paths_csv(const PathBatch& batch, const std::filesystem::path& path);

Json read_json_file(const std::filesystem::path& path);
void write_json_file(const Json& j, const std::filesystem::path& path);

// Reals, or the string "inf" for +infinity.
double json_extended_real(const Json& j);

// Array of numbers or of 3-vectors (unit sphere points).
std::vector<Site> sites_from_json(const Json& j);

// {"type": "fbm", "alpha": a} | {"type": "sphere", "beta": b}
// | {"type": "custom", "sites": [...], "gamma": [[...]]}
// | {"type": "scaled", "factor": c, "base": {...}}
// | {"type": "power", "exponent": e}: |t1 - t2|^e on `grid` with no range
//   check on e (for validation experiments)
// | {"type": "file", "path": p}: a kernel document as below.
KernelSpec kernel_from_json(const Json& j, const std::vector<Site>& grid);

// Kernel document {"sites": [...], "gamma": [[...]]} with "inf" entries.
GammaMatrix gamma_from_json(const Json& j);
GammaMatrix load_kernel_json(const std::filesystem::path& path);
Json to_json(const GammaMatrix& g);

// {"sites": [...], "thresholds": [...], "drift": [...], "anchors": [...]}
// with sites indexing into g; a JSON array yields a batch.
FidiQuery fidi_query_from_json(const Json& j, const GammaMatrix& g);
std::vector<FidiQuery> fidi_queries_from_json(const Json& j, const GammaMatrix& g);
Json to_json(const FidiResult& r, const Stream& stream);

}  // namespace gpx

#endif  // GPX_IO_HPP
