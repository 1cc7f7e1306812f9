#pragma once

#include <map>
#include <string>
#include <vector>

#include <Eigen/Sparse>

#include "elmech/dofmap.hpp"
#include "elmech/materials.hpp"
#include "elmech/mesh.hpp"

namespace elmech {

using SparseMatrix = Eigen::SparseMatrix<double>;

struct Materials {
  std::map<std::string, MechanicalMaterial> mechanical;
  std::map<std::string, ElectricMaterial> electric;
};

/// Gradient and Hessian of Pi = W_m + W_spring + W_morph - W_e over the free
/// unknowns. Mechanical rows are f_int - f_elec, potential rows are -q_e, so
/// the tangent blocks are (K_m - d2We/du2 + K_morph, -d2We/dudphi;
/// -d2We/dphidu, -d2We/dphi2) and K is symmetric.
struct TangentSystem {
  SparseMatrix K;              // empty when assembled without tangent
  Eigen::VectorXd r;
  Eigen::VectorXd r_mech;      // strain, spring and morphing part of r
  Eigen::VectorXd dr_dV;       // d r / d V_applied at fixed free unknowns
  double W_m = 0.0;            // strain + spring energy
  double W_e = 0.0;            // field energy
  double W_morph = 0.0;        // fictitious, not physical
  // Residual references: norms of the entrywise sums of |element
  // contributions|, so cancellation between elements sets no false floor.
  double force_scale = 0.0;    // displacement rows (strain, spring, morph, field)
  double charge_scale = 0.0;   // nodal charges, free and fixed
  Eigen::VectorXd charges;     // dW_e/dphi per node (free and fixed)
  Eigen::VectorXd elec_force;  // dW_e/dx per node (2 per node)
};

struct ResidualNorms {
  double displacement = 0.0;
  double potential = 0.0;
};

/// Immutable coupled electro-mechanical model: mesh, materials, boundary
/// conditions and the precomputed assembly plan.
class CoupledModel {
 public:
  CoupledModel(Mesh mesh, Materials materials, BoundaryConditions bcs, MorphSettings morph = {});

  const Mesh& mesh() const { return mesh_; }
  const DofMap& dofs() const { return dofs_; }
  const Materials& materials() const { return materials_; }
  const BoundaryConditions& bcs() const { return bcs_; }
  const MorphSettings& morph() const { return morph_settings_; }
  const std::vector<std::string>& warnings() const { return warnings_; }
  int num_free() const { return dofs_.num_free(); }

  State zero_state(double voltage = 0.0) const;
  State state(const Eigen::VectorXd& free, double voltage) const { return make_state(dofs_, free, voltage); }
  Eigen::VectorXd free(const State& s) const { return free_vector(dofs_, s); }

  enum class Parts { All, Mechanical };
  /// Throws ElementInversion (with element id) when any element folds.
  /// Parts::Mechanical skips the field energy (staggered mechanical stage).
  TangentSystem assemble(const State& state, bool with_tangent = true, Parts parts = Parts::All) const;
  /// Consistent mass on structural displacement unknowns.
  const SparseMatrix& mass() const { return mass_; }
  /// Fictitious vacuum stiffness on MorphRelative unknowns only.
  const SparseMatrix& morph_stiffness() const { return morph_; }

  ResidualNorms residual_norms(const Eigen::VectorXd& r) const;
  /// Row classes: 0 displacement (incl. relative vacuum), 1 potential.
  const std::vector<int>& row_class() const { return row_class_; }

  /// Total electrostatic force (+dW_e/dx at fixed potential) on a node set.
  Eigen::Vector2d set_force(const TangentSystem& sys, const std::string& set) const;
  /// Sum of nodal charges on a node set.
  double set_charge(const TangentSystem& sys, const std::string& set) const;

 private:
  struct ElementPlan {
    std::vector<int> slots;      // physical slots in element order (u..., phi...)
    std::vector<int> unknowns;   // union of free indices
    Eigen::MatrixXd T;           // slots x unknowns
    Eigen::VectorXd dslot_dV;    // prescribed-potential coefficients
    std::vector<int> positions;  // CSC value positions, unknowns^2, column-major
    bool mechanical = false;
    bool electric = false;
  };

  void plan();

  Mesh mesh_;
  Materials materials_;
  BoundaryConditions bcs_;
  MorphSettings morph_settings_;
  std::vector<std::string> warnings_;
  DofMap dofs_;
  std::vector<ElementPlan> plans_;
  std::vector<const MechanicalMaterial*> mech_material_;
  std::vector<double> permittivity_;
  std::vector<std::pair<int, double>> springs_;  // (free index, stiffness)
  SparseMatrix pattern_;
  SparseMatrix mass_;
  SparseMatrix morph_;
  std::vector<int> morph_positions_;
  std::vector<int> row_class_;
};

/// K_morph for the relative vacuum unknowns: scale * (mean mechanical
/// stiffness diagonal / mean unit-modulus diagonal) * unit small-strain
/// stiffness of the electric elements, restricted to MorphRelative slots.
SparseMatrix morphing_stiffness(const Mesh& mesh, const DofMap& dofs, const Materials& materials,
                                double scale);

/// K + K_morph; structure and potential slots are left untouched.
SparseMatrix add_mesh_morphing(const SparseMatrix& K, const Mesh& mesh, const DofMap& dofs,
                               const Materials& materials, double scale);

/// Consistent mass on structural displacement unknowns; zero rows elsewhere.
SparseMatrix assemble_mass(const Mesh& mesh, const Materials& materials, const DofMap& dofs);

}  // namespace elmech
