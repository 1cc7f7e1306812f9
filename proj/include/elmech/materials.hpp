#pragma once

#include <Eigen/Core>

namespace elmech {

inline constexpr double kVacuumPermittivity = 8.8541878128e-12;  // F/m

enum class PlaneAssumption { Stress, Strain };

/// Isotropic St. Venant-Kirchhoff solid.
struct MechanicalMaterial {
  double E = 169e9;    // Pa
  double nu = 0.3;
  double rho = 2330.0; // kg/m^3
  PlaneAssumption plane = PlaneAssumption::Strain;

  bool admissible() const { return E > 0 && nu > -1 && nu < 0.5 && rho >= 0; }

  /// Voigt constitutive matrix for (E11, E22, 2 E12).
  Eigen::Matrix3d elasticity() const {
    Eigen::Matrix3d C = Eigen::Matrix3d::Zero();
    if (plane == PlaneAssumption::Strain) {
      const double lambda = E * nu / ((1 + nu) * (1 - 2 * nu));
      const double mu = E / (2 * (1 + nu));
      C << lambda + 2 * mu, lambda, 0, lambda, lambda + 2 * mu, 0, 0, 0, mu;
    } else {
      const double f = E / (1 - nu * nu);
      C << f, f * nu, 0, f * nu, f, 0, 0, 0, f * (1 - nu) / 2;
    }
    return C;
  }

  /// Bending modulus of a thin strip under the plane assumption.
  double bending_modulus() const {
    return plane == PlaneAssumption::Strain ? E / (1 - nu * nu) : E;
  }
};

struct ElectricMaterial {
  double permittivity = kVacuumPermittivity;  // F/m
  bool admissible() const { return permittivity > 0; }
};

}  // namespace elmech
