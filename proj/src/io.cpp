// Copyright 2026 The gpx Authors
// SPDX-License-Identifier: Apache-2.0

#include "gpx/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>

#include "gpx/error.hpp"

namespace gpx {

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_paths_csv(const PathBatch& batch, std::ostream& out) {
  out << "row";
  for (const Site& s : batch.sites) out << ",\"" << to_string(s) << '"';
  out << '\n';
  for (Eigen::Index r = 0; r < batch.paths.rows(); ++r) {
    out << r;
    for (Eigen::Index c = 0; c < batch.paths.cols(); ++c) out << ',' << format_double(batch.paths(r, c));
    out << '\n';
  }
}

void write_paths_csv(const PathBatch& batch, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  write_paths_csv(batch, out);
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void write_json_file(const Json& j, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
}

double json_extended_real(const Json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string() && j.get<std::string>() == "inf") return kInf;
  throw ConfigError("expected a number or \"inf\", got " + j.dump());
}

namespace {

std::vector<double> reals(const Json& j, const char* what) {
  if (!j.is_array()) throw ConfigError(std::string(what) + " must be an array");
  std::vector<double> out;
  for (const Json& v : j) {
    if (!v.is_number()) throw ConfigError(std::string(what) + " must contain numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

Eigen::MatrixXd extended_matrix(const Json& j) {
  if (!j.is_array() || j.empty()) throw ConfigError("gamma must be a nonempty array of rows");
  const auto k = static_cast<Eigen::Index>(j.size());
  Eigen::MatrixXd m(k, k);
  for (Eigen::Index r = 0; r < k; ++r) {
    const Json& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != k) throw ConfigError("gamma must be square");
    for (Eigen::Index c = 0; c < k; ++c) m(r, c) = json_extended_real(row[static_cast<std::size_t>(c)]);
  }
  return m;
}

const Json& field(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw ConfigError(std::string("kernel: missing field \"") + key + "\"");
  return j.at(key);
}

}  // namespace

std::vector<Site> sites_from_json(const Json& j) {
  if (!j.is_array() || j.empty()) throw ConfigError("grid must be a nonempty array");
  std::vector<Site> out;
  for (const Json& v : j) {
    if (v.is_number()) {
      out.emplace_back(v.get<double>());
    } else if (v.is_array() && v.size() == 3) {
      out.emplace_back(Vec3{v[0].get<double>(), v[1].get<double>(), v[2].get<double>()});
    } else {
      throw ConfigError("grid entries must be numbers or 3-vectors");
    }
  }
  return out;
}

KernelSpec kernel_from_json(const Json& j, const std::vector<Site>& grid) {
  const std::string type = field(j, "type").get<std::string>();
  if (type == "fbm") return KernelSpec::fbm(field(j, "alpha").get<double>());
  if (type == "sphere") return KernelSpec::sphere(field(j, "beta").get<double>());
  if (type == "custom") return KernelSpec::custom(reals(field(j, "sites"), "kernel sites"), extended_matrix(field(j, "gamma")));
  if (type == "scaled")
    return KernelSpec::scaled(kernel_from_json(field(j, "base"), grid), field(j, "factor").get<double>());
  if (type == "power") {
    const double e = field(j, "exponent").get<double>();
    std::vector<double> t;
    for (const Site& s : grid) {
      const double* v = std::get_if<double>(&s);
      if (v == nullptr) throw ConfigError("power kernel needs a real grid");
      t.push_back(*v);
    }
    const auto k = static_cast<Eigen::Index>(t.size());
    Eigen::MatrixXd m(k, k);
    for (Eigen::Index a = 0; a < k; ++a)
      for (Eigen::Index b = 0; b < k; ++b)
        m(a, b) = a == b ? 0.0 : std::pow(std::fabs(t[static_cast<std::size_t>(a)] - t[static_cast<std::size_t>(b)]), e);
    return KernelSpec::custom(t, m);
  }
  if (type == "file") {
    const GammaMatrix g = load_kernel_json(field(j, "path").get<std::string>());
    std::vector<double> t;
    for (const Site& s : g.sites()) t.push_back(std::get<double>(s));
    return KernelSpec::custom(t, g.values());
  }
  throw ConfigError("kernel: unknown type \"" + type + "\"");
}

GammaMatrix gamma_from_json(const Json& j) {
  if (!j.is_object()) throw ConfigError("kernel document must be an object");
  return GammaMatrix(sites_from_json(field(j, "sites")), extended_matrix(field(j, "gamma")));
}

GammaMatrix load_kernel_json(const std::filesystem::path& path) { return gamma_from_json(read_json_file(path)); }

Json to_json(const GammaMatrix& g) {
  Json sites = Json::array();
  for (const Site& s : g.sites()) {
    if (const double* v = std::get_if<double>(&s)) sites.push_back(*v);
    else {
      const Vec3& p = std::get<Vec3>(s);
      sites.push_back({p[0], p[1], p[2]});
    }
  }
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < g.values().rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < g.values().cols(); ++c) {
      const double v = g.values()(r, c);
      if (is_inf(v)) row.push_back("inf"); else row.push_back(v);
    }
    rows.push_back(row);
  }
  return {{"sites", sites}, {"gamma", rows}};
}

FidiQuery fidi_query_from_json(const Json& j, const GammaMatrix& g) {
  if (!j.is_object()) throw ConfigError("fidi query must be an object");
  FidiQuery q{g, {}, {}, {}, {}};
  for (const Json& v : j.at("sites")) q.sites.push_back(v.get<std::size_t>());
  q.thresholds = reals(j.at("thresholds"), "thresholds");
  if (j.contains("drift")) q.drift = reals(j.at("drift"), "drift");
  if (j.contains("anchors"))
    for (const Json& v : j.at("anchors")) q.anchors.push_back(v.get<std::size_t>());
  return q;
}

std::vector<FidiQuery> fidi_queries_from_json(const Json& j, const GammaMatrix& g) {
  std::vector<FidiQuery> out;
  if (j.is_array()) {
    for (const Json& q : j) out.push_back(fidi_query_from_json(q, g));
  } else {
    out.push_back(fidi_query_from_json(j, g));
  }
  return out;
}

Json to_json(const FidiResult& r, const Stream& stream) {
  return {{"probability", r.probability},
          {"stderr", r.std_error},
          {"inner_samples", r.inner_samples},
          {"method", r.method},
          {"seed", stream.seed()},
          {"stream", stream.describe()}};
}

}  // namespace gpx
