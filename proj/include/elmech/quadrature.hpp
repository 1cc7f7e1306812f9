#pragma once

#include <vector>

#include <Eigen/Core>

#include "elmech/mesh_types.hpp"

namespace elmech {

/// Symmetric Gauss rule on the reference triangle {xi >= 0, eta >= 0, xi + eta <= 1}.
/// Weights sum to the reference area 1/2.
struct QuadratureRule {
  std::vector<Eigen::Vector2d> points;
  std::vector<double> weights;
  int degree = 0;

  std::size_t size() const { return points.size(); }
};

/// Rule exact for polynomials of total degree <= requested_degree (0..5).
/// Throws std::invalid_argument for unsupported degrees.
const QuadratureRule& quadrature_rule(ElementKind kind, int requested_degree);

/// Degrees used by the kernels: exact for every polynomial integrand on
/// straight-sided elements.
inline int mechanical_degree(ElementKind kind) { return kind == ElementKind::Tri3 ? 1 : 4; }
inline int electric_degree(ElementKind kind) { return kind == ElementKind::Tri3 ? 2 : 4; }
inline int mass_degree(ElementKind kind) { return kind == ElementKind::Tri3 ? 2 : 4; }

}  // namespace elmech
