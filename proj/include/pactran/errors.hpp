#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace pactran {

/// Bad inputs: shape mismatches, out-of-domain values, inconsistent datasets.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed files. byte_offset points at the first offending byte.
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& what, std::uint64_t byte_offset)
      : std::runtime_error(what + " (byte offset " + std::to_string(byte_offset) + ")"),
        byte_offset(byte_offset) {}
  std::uint64_t byte_offset;
};

/// Non-finite values produced where the math promises finite ones.
/// Carries the point at which the failure was observed, when there is one.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
  NumericalError(const std::string& what, Eigen::VectorXd point)
      : std::runtime_error(what), offending_point(std::move(point)) {}
  Eigen::VectorXd offending_point;
};

}  // namespace pactran
