#pragma once

#include <stdexcept>
#include <string>

namespace geg {

/// Raised for malformed inputs: bad CSV files, schema mismatches, invalid specs.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

/// Raised when the saddle-point solver or an oracle fails mid-run.
class SolverError : public std::runtime_error {
 public:
  explicit SolverError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace geg
