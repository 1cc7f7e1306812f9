#pragma once

#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Core>

namespace elmech {

/// Geometry that cannot be meshed (overlapping electrodes, non-positive sizes).
class GeometryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A mesh or configuration that violates a structural invariant.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(int line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

/// Non-positive Jacobian (reference or current configuration) inside an element.
class ElementInversion : public std::runtime_error {
 public:
  explicit ElementInversion(int element = -1)
      : std::runtime_error(element < 0 ? std::string("element inversion")
                                       : "element inversion in element " + std::to_string(element)),
        element_(element) {}
  int element() const { return element_; }

 private:
  int element_;
};

class SingularMatrixError : public std::runtime_error {
 public:
  SingularMatrixError(const std::string& what, Eigen::VectorXd null_direction)
      : std::runtime_error(what), null_direction_(std::move(null_direction)) {}
  const Eigen::VectorXd& null_direction() const { return null_direction_; }

 private:
  Eigen::VectorXd null_direction_;
};

}  // namespace elmech
