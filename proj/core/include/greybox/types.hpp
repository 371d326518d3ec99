#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace greybox {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Thrown when a caller violates a documented precondition (dimension
/// mismatch, non-finite input, empty dataset, ...).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when a numerical procedure fails in a way the caller may want to
/// distinguish from bad input: indefinite Gram matrices, non-finite white-box
/// values, unconverged recycle loops.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class FactorizationError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Axis-aligned box, lower < upper componentwise.
struct BoxDomain {
  Vector lower;
  Vector upper;

  BoxDomain() = default;
  BoxDomain(Vector lo, Vector hi);

  [[nodiscard]] Eigen::Index dim() const { return lower.size(); }
  [[nodiscard]] bool contains(const Vector& x, double tol = 0.0) const;
  [[nodiscard]] Vector project(const Vector& x) const;
  [[nodiscard]] Vector to_unit(const Vector& x) const;
  [[nodiscard]] Vector from_unit(const Vector& u) const;
  [[nodiscard]] Vector width() const { return upper - lower; }
};

void require_finite(const Vector& v, const char* what);

}  // namespace greybox
