#pragma once

#include <Eigen/Dense>

#include "elmech/mechanical.hpp"

namespace elmech {

/// How far an electrostatic kernel evaluation goes.
enum class ElectricLevel { Energy, Force, Tangent };

/// Electrostatic field energy W_e = 1/2 int eps |grad phi|^2 over the current
/// element and its exact derivatives with respect to the nodal potentials and
/// the current nodal coordinates x (node-major, like displacements).
template <typename Scalar>
struct ElectrostaticElementOutput {
  Scalar energy = Scalar(0);
  ElementVector<Scalar> charges;  // dW/dphi
  ElementMatrix<Scalar> K_pp;     // d2W/dphi2
  ElementVector<Scalar> force;    // dW/dx at fixed potentials
  ElementMatrix<Scalar> K_xx;     // d2W/dx2
  ElementMatrix<Scalar> K_xp;     // d2W/dx dphi, (2n x n)
};

/// Evaluates the field energy on current coordinates and differentiates the
/// quadrature sum exactly. With n_a = J^-T dN_a (physical shape gradients),
/// G = grad phi and d = det J, every term is a polynomial in (n_a, G, d):
///
///   dW/dphi_a   = eps d (n_a . G)
///   dW/dx_a     = eps d (1/2 |G|^2 n_a - (n_a . G) G)          (Maxwell stress)
///   d2W/dx_a dphi_c = eps d ((n_c . G) n_a - (n_a . G) n_c - (n_a . n_c) G)
///   d2W/dx_a dx_c   = eps d [1/2 |G|^2 (n_a n_c^T - n_c n_a^T)
///                     - mu_a G n_c^T - mu_c n_a G^T + mu_a n_c G^T + mu_c G n_a^T
///                     + (n_a . n_c) G G^T],   mu = n . G
template <typename Scalar>
ElectrostaticElementOutput<Scalar> electrostatic_element(ElementKind kind,
                                                         const NodeCoords<Scalar>& x,
                                                         Scalar permittivity,
                                                         const ShapeVector<Scalar>& phi,
                                                         ElectricLevel level = ElectricLevel::Tangent) {
  using Vec2 = Eigen::Matrix<Scalar, 2, 1>;
  using Mat2 = Eigen::Matrix<Scalar, 2, 2>;
  const int n = node_count(kind);
  const bool want_force = level != ElectricLevel::Energy;
  const bool want_tangent = level == ElectricLevel::Tangent;

  ElectrostaticElementOutput<Scalar> out;
  out.charges = ElementVector<Scalar>::Zero(n);
  out.K_pp = ElementMatrix<Scalar>::Zero(n, n);
  if (want_force) out.force = ElementVector<Scalar>::Zero(2 * n);
  if (want_tangent) {
    out.K_xx = ElementMatrix<Scalar>::Zero(2 * n, 2 * n);
    out.K_xp = ElementMatrix<Scalar>::Zero(2 * n, n);
  }

  const QuadratureRule& rule = quadrature_rule(kind, electric_degree(kind));
  for (std::size_t q = 0; q < rule.size(); ++q) {
    const auto s = shape_eval<Scalar>(kind, rule.points[q].cast<Scalar>());
    const Mat2 J = x * s.dN;
    const Scalar d = J.determinant();
    if (!(d > Scalar(0))) throw ElementInversion();
    const ShapeGradients<Scalar> grad = s.dN * J.inverse();  // row a = n_a^T
    const Vec2 G = grad.transpose() * phi;
    const Scalar G2 = G.squaredNorm();
    const Scalar c = Scalar(rule.weights[q]) * permittivity * d;

    out.energy += Scalar(0.5) * c * G2;
    const ShapeVector<Scalar> mu = grad * G;
    out.charges.noalias() += c * mu;
    const ElementMatrix<Scalar> nn = grad * grad.transpose();
    out.K_pp.noalias() += c * nn;
    if (!want_force) continue;

    for (int a = 0; a < n; ++a) {
      const Vec2 na = grad.row(a).transpose();
      out.force.template segment<2>(2 * a) += c * (Scalar(0.5) * G2 * na - mu(a) * G);
    }
    if (!want_tangent) continue;

    const Mat2 GG = G * G.transpose();
    for (int a = 0; a < n; ++a) {
      const Vec2 na = grad.row(a).transpose();
      for (int b = 0; b < n; ++b) {
        const Vec2 nb = grad.row(b).transpose();
        out.K_xp.template block<2, 1>(2 * a, b) += c * (mu(b) * na - mu(a) * nb - nn(a, b) * G);
        const Mat2 block = Scalar(0.5) * G2 * (na * nb.transpose() - nb * na.transpose()) -
                           mu(a) * G * nb.transpose() - mu(b) * na * G.transpose() +
                           mu(a) * nb * G.transpose() + mu(b) * G * na.transpose() + nn(a, b) * GG;
        out.K_xx.template block<2, 2>(2 * a, 2 * b) += c * block;
      }
    }
  }
  out.K_pp = Scalar(0.5) * (out.K_pp + out.K_pp.transpose()).eval();
  if (want_tangent) out.K_xx = Scalar(0.5) * (out.K_xx + out.K_xx.transpose()).eval();
  return out;
}

template <typename Scalar>
struct ElectricEnergyOutput {
  Scalar energy;
  ElementVector<Scalar> charges;
  ElementMatrix<Scalar> K_pp;
};

/// (W_e, q_e, K_phiphi) on current coordinates.
template <typename Scalar>
ElectricEnergyOutput<Scalar> elec_element(ElementKind kind, const NodeCoords<Scalar>& x,
                                          Scalar permittivity, const ShapeVector<Scalar>& phi) {
  auto r = electrostatic_element(kind, x, permittivity, phi, ElectricLevel::Energy);
  return {r.energy, std::move(r.charges), std::move(r.K_pp)};
}

/// dW_e/dx at fixed nodal potentials. Enters the mechanical residual with a
/// minus sign (it is the electrostatic load).
template <typename Scalar>
ElementVector<Scalar> elec_force(ElementKind kind, const NodeCoords<Scalar>& x,
                                 Scalar permittivity, const ShapeVector<Scalar>& phi) {
  return electrostatic_element(kind, x, permittivity, phi, ElectricLevel::Force).force;
}

template <typename Scalar>
struct CoupledTangentOutput {
  ElementMatrix<Scalar> K_uu_elec;  // d2W_e/du2
  ElementMatrix<Scalar> K_uphi;     // d2W_e/du dphi
};

template <typename Scalar>
CoupledTangentOutput<Scalar> coupled_tangent(ElementKind kind, const NodeCoords<Scalar>& x,
                                             Scalar permittivity, const ShapeVector<Scalar>& phi) {
  auto r = electrostatic_element(kind, x, permittivity, phi, ElectricLevel::Tangent);
  return {std::move(r.K_xx), std::move(r.K_xp)};
}

}  // namespace elmech
