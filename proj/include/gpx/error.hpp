// Copyright 2026 The gpx Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef GPX_ERROR_HPP
#define GPX_ERROR_HPP

#include <stdexcept>
#include <string>

namespace gpx {

// All library failures derive from Error so callers can catch one type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A site lies outside the domain of a kernel.
class DomainError : public Error {
 public:
  using Error::Error;
};

// A kernel matrix violates the extended-sense block structure.
class StructureError : public Error {
 public:
  using Error::Error;
};

// Queried indices do not share a finite block.
class BlockError : public Error {
 public:
  using Error::Error;
};

class ParameterError : public Error {
 public:
  using Error::Error;
};

class FactorizationError : public Error {
 public:
  FactorizationError(const std::string& what, double final_pivot)
      : Error(what), final_pivot_(final_pivot) {}
  double final_pivot() const noexcept { return final_pivot_; }

 private:
  double final_pivot_;
};

class TruncationError : public Error {
 public:
  TruncationError(const std::string& what, std::size_t points_used, double bound)
      : Error(what), points_used_(points_used), bound_(bound) {}
  std::size_t points_used() const noexcept { return points_used_; }
  double bound() const noexcept { return bound_; }

 private:
  std::size_t points_used_;
  double bound_;
};

// Non-finite or otherwise unusable sample data.
class DataError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace gpx

#endif  // GPX_ERROR_HPP
