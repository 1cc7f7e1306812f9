#pragma once

#include <Eigen/Core>

#include "elmech/mesh_types.hpp"

namespace elmech {

template <typename Scalar>
using ShapeVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1, 0, 6, 1>;
template <typename Scalar>
using ShapeGradients = Eigen::Matrix<Scalar, Eigen::Dynamic, 2, 0, 6, 2>;

/// Nodal coordinates of one element, one column per node.
template <typename Scalar>
using NodeCoords = Eigen::Matrix<Scalar, 2, Eigen::Dynamic, 0, 2, 6>;

template <typename Scalar>
struct ShapeEval {
  ShapeVector<Scalar> N;
  ShapeGradients<Scalar> dN;  // row a = dN_a / d(xi, eta)
};

/// Lagrange shape functions on the reference triangle. TRI6 node order:
/// vertices 0,1,2 then mid-sides (0-1), (1-2), (2-0).
template <typename Scalar>
ShapeEval<Scalar> shape_eval(ElementKind kind, const Eigen::Matrix<Scalar, 2, 1>& xi) {
  const Scalar L1 = Scalar(1) - xi(0) - xi(1);
  const Scalar L2 = xi(0);
  const Scalar L3 = xi(1);
  const Eigen::Matrix<Scalar, 2, 1> d1(Scalar(-1), Scalar(-1));
  const Eigen::Matrix<Scalar, 2, 1> d2(Scalar(1), Scalar(0));
  const Eigen::Matrix<Scalar, 2, 1> d3(Scalar(0), Scalar(1));

  ShapeEval<Scalar> s;
  if (kind == ElementKind::Tri3) {
    s.N.resize(3);
    s.dN.resize(3, 2);
    s.N << L1, L2, L3;
    s.dN.row(0) = d1.transpose();
    s.dN.row(1) = d2.transpose();
    s.dN.row(2) = d3.transpose();
    return s;
  }
  s.N.resize(6);
  s.dN.resize(6, 2);
  s.N << L1 * (2 * L1 - 1), L2 * (2 * L2 - 1), L3 * (2 * L3 - 1), 4 * L1 * L2, 4 * L2 * L3,
      4 * L3 * L1;
  s.dN.row(0) = ((4 * L1 - 1) * d1).transpose();
  s.dN.row(1) = ((4 * L2 - 1) * d2).transpose();
  s.dN.row(2) = ((4 * L3 - 1) * d3).transpose();
  s.dN.row(3) = (4 * (L2 * d1 + L1 * d2)).transpose();
  s.dN.row(4) = (4 * (L3 * d2 + L2 * d3)).transpose();
  s.dN.row(5) = (4 * (L1 * d3 + L3 * d1)).transpose();
  return s;
}

/// Reference coordinates of the element nodes.
inline Eigen::Vector2d reference_node(ElementKind kind, int a) {
  static const double xi[6][2] = {{0, 0}, {1, 0}, {0, 1}, {0.5, 0}, {0.5, 0.5}, {0, 0.5}};
  (void)kind;
  return {xi[a][0], xi[a][1]};
}

}  // namespace elmech
