// Copyright 2026 The gpx Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef GPX_EXPERIMENT_HPP
#define GPX_EXPERIMENT_HPP

#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "gpx/io.hpp"

namespace gpx {

const std::vector<std::string>& experiment_names();

struct ExperimentConfig {
  std::string experiment;
  std::string name;  // output file stem; defaults to the experiment name
  std::uint64_t seed = 0;
  Json kernel;       // null when absent
  Json grid;         // null when absent
  std::vector<double> n_schedule;
  std::size_t reps = 0;
  std::size_t inner_samples = 100000;
  Json tolerances = Json::object();
  Json params = Json::object();
  std::vector<std::string> expect_fail;  // row labels expected to fail
  std::string out_dir = ".";
  int threads = 0;
};

// Every violated field, empty when the document is valid. Includes semantic
// checks (kernel construction, experiment-specific parameters).
std::vector<std::string> config_errors(const Json& j);
// Throws ConfigError carrying the full list from config_errors.
ExperimentConfig parse_config(const Json& j);

struct ResultRow {
  std::string label;
  std::string parameters;
  double estimate = std::numeric_limits<double>::quiet_NaN();
  double statistic = std::numeric_limits<double>::quiet_NaN();
  double threshold = std::numeric_limits<double>::quiet_NaN();
  bool pass = true;
  bool gated = true;  // informational rows do not affect the exit status
  bool expected_pass = true;
  int attempts = 1;
  std::string stream;
  double runtime_seconds = 0.0;  // sidecar only

  bool ok() const { return !gated || pass == expected_pass; }
};

// Plot-ready numeric columns.
struct DataTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

struct ResultTable {
  std::string experiment;
  std::vector<ResultRow> rows;
  DataTable data;
  Json notes = Json::object();

  bool ok() const;
  const ResultRow* find(const std::string& label) const;
  // Deterministic given the config: no timing information.
  std::string csv() const;
  std::string data_csv() const;
  Json sidecar(const ExperimentConfig& config) const;
};

ResultTable run_experiment(const ExperimentConfig& config);

struct OutputPaths {
  std::filesystem::path table;
  std::filesystem::path data;  // empty when there is no data table
  std::filesystem::path sidecar;
};

OutputPaths write_outputs(const ResultTable& table, const ExperimentConfig& config);

}  // namespace gpx

#endif  // GPX_EXPERIMENT_HPP
