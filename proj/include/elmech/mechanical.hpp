#pragma once

#include <Eigen/Dense>

#include "elmech/errors.hpp"
#include "elmech/materials.hpp"
#include "elmech/quadrature.hpp"
#include "elmech/shape.hpp"

namespace elmech {

template <typename Scalar>
using ElementVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1, 0, 12, 1>;
template <typename Scalar>
using ElementMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, 0, 12, 12>;

template <typename Scalar>
struct MechanicalElementOutput {
  Scalar energy = Scalar(0);
  ElementVector<Scalar> f;  // dW/du, node-major (ux0, uy0, ux1, ...)
  ElementMatrix<Scalar> K;  // d2W/du2, material + geometric
  ElementMatrix<Scalar> M;  // consistent mass (only when requested)
};

/// Total-Lagrangian St. Venant-Kirchhoff element. All integrals run over the
/// reference coordinates X; u holds the nodal displacements. Throws
/// ElementInversion when det(J0) <= 0 or det(F) <= 0 at a quadrature point.
template <typename Scalar>
MechanicalElementOutput<Scalar> mech_element(ElementKind kind, const NodeCoords<Scalar>& X,
                                             const MechanicalMaterial& material,
                                             const ElementVector<Scalar>& u,
                                             bool with_mass = false) {
  using Mat2 = Eigen::Matrix<Scalar, 2, 2>;
  using Vec3 = Eigen::Matrix<Scalar, 3, 1>;
  const int n = node_count(kind);
  const Eigen::Matrix<Scalar, 3, 3> C = material.elasticity().cast<Scalar>();
  NodeCoords<Scalar> U = Eigen::Map<const Eigen::Matrix<Scalar, 2, Eigen::Dynamic>>(u.data(), 2, n);
  // Shape gradients sum to zero, so a common translation drops out of U * grad;
  // removing it first avoids cancellation when u is mostly rigid motion.
  const Eigen::Matrix<Scalar, 2, 1> u0 = U.col(0);
  U.colwise() -= u0;

  MechanicalElementOutput<Scalar> out;
  out.f = ElementVector<Scalar>::Zero(2 * n);
  out.K = ElementMatrix<Scalar>::Zero(2 * n, 2 * n);

  const QuadratureRule& rule = quadrature_rule(kind, mechanical_degree(kind));
  for (std::size_t q = 0; q < rule.size(); ++q) {
    const auto s = shape_eval<Scalar>(kind, rule.points[q].cast<Scalar>());
    const Mat2 J0 = X * s.dN;
    const Scalar det0 = J0.determinant();
    if (!(det0 > Scalar(0))) throw ElementInversion();
    const ShapeGradients<Scalar> grad = s.dN * J0.inverse();
    const Mat2 H = U * grad;
    const Mat2 F = Mat2::Identity() + H;
    if (!(F.determinant() > Scalar(0))) throw ElementInversion();

    // Written without F^T F - I, which cancels at MEMS-scale strains.
    const Mat2 strain = Scalar(0.5) * (H + H.transpose() + H.transpose() * H);
    const Vec3 S(strain(0, 0), strain(1, 1), Scalar(2) * strain(0, 1));
    const Vec3 T = C * S;
    const Scalar w = Scalar(rule.weights[q]) * det0;
    out.energy += w * Scalar(0.5) * S.dot(T);

    Mat2 stress;
    stress << T(0), T(2), T(2), T(1);
    Eigen::Matrix<Scalar, 3, Eigen::Dynamic, 0, 3, 12> B(3, 2 * n);
    for (int a = 0; a < n; ++a) {
      const Scalar n0 = grad(a, 0), n1 = grad(a, 1);
      for (int i = 0; i < 2; ++i) {
        B(0, 2 * a + i) = F(i, 0) * n0;
        B(1, 2 * a + i) = F(i, 1) * n1;
        B(2, 2 * a + i) = F(i, 0) * n1 + F(i, 1) * n0;
      }
    }
    out.f.noalias() += w * B.transpose() * T;
    out.K.noalias() += w * B.transpose() * C * B;
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        const Scalar g = w * (grad.row(a) * stress * grad.row(b).transpose()).value();
        out.K(2 * a, 2 * b) += g;
        out.K(2 * a + 1, 2 * b + 1) += g;
      }
  }
  out.K = Scalar(0.5) * (out.K + out.K.transpose()).eval();

  if (with_mass) {
    out.M = ElementMatrix<Scalar>::Zero(2 * n, 2 * n);
    const QuadratureRule& mrule = quadrature_rule(kind, mass_degree(kind));
    for (std::size_t q = 0; q < mrule.size(); ++q) {
      const auto s = shape_eval<Scalar>(kind, mrule.points[q].cast<Scalar>());
      const Scalar w = Scalar(mrule.weights[q]) * (X * s.dN).determinant() * Scalar(material.rho);
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
          const Scalar m = w * s.N(a) * s.N(b);
          out.M(2 * a, 2 * b) += m;
          out.M(2 * a + 1, 2 * b + 1) += m;
        }
    }
  }
  return out;
}

/// Small-strain stiffness with unit Young's modulus; used for the fictitious
/// vacuum elasticity that drives mesh morphing.
inline ElementMatrix<double> unit_linear_stiffness(ElementKind kind, const NodeCoords<double>& X,
                                                   double nu = 0.3) {
  MechanicalMaterial unit;
  unit.E = 1.0;
  unit.nu = nu;
  unit.rho = 0.0;
  return mech_element<double>(kind, X, unit, ElementVector<double>::Zero(2 * node_count(kind))).K;
}

}  // namespace elmech
