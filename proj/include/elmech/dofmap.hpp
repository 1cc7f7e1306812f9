#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "elmech/mesh.hpp"

namespace elmech {

struct Clamp {
  std::string set;
  bool x = true;
  bool y = true;
};

/// phi = coefficient * V_applied on every node of `set`.
struct ElectrodePotential {
  std::string set;
  double coefficient = 1.0;
};

/// Linear spring to ground on one displacement component; `stiffness` is the
/// total value (per unit depth). It is spread over the nodes of the set like
/// a uniform elastic foundation along the element edges lying in the set
/// (consistent edge weights), or equally when the set contains no edge.
struct GroundSpring {
  std::string set;
  int component = 1;
  double stiffness = 0.0;
};

struct BoundaryConditions {
  std::vector<Clamp> clamps;
  std::vector<ElectrodePotential> electrodes;
  std::vector<std::string> conductors;  // phi = 0 reference surfaces
  std::vector<GroundSpring> springs;
};

enum class MorphMode { PseudoElastic, Slaved };

struct MorphSettings {
  MorphMode mode = MorphMode::PseudoElastic;
  double scale = 1e-4;        // times the mean mechanical stiffness diagonal
  double truncation = 1e-3;   // extension weights below this are dropped
};

enum class SlotKind { Displacement, MorphRelative, Potential };

struct DofEntry {
  int index;
  double weight;
};

/// Maps physical nodal slots (u_x, u_y, phi per node) to the free unknowns.
///
/// Displacements of vacuum-interior nodes (nodes touching only electric
/// elements) are written u_v = sum_i E_vi u_i + w_v, where u_i are the free
/// displacements of the structure/vacuum interface and E is a fixed harmonic
/// extension on the reference mesh. In PseudoElastic mode w_v are unknowns,
/// in Slaved mode w_v = 0. Every other free slot is an unknown of its own.
/// Fixed slots hold prescribed values: zero displacement or
/// coefficient * V_applied potential.
class DofMap {
 public:
  static constexpr int kSlotsPerNode = 3;
  static int slot(int node, int component) { return kSlotsPerNode * node + component; }

  int num_nodes() const { return num_nodes_; }
  int num_free() const { return int(kinds_.size()); }

  bool has_potential(int node) const { return has_potential_[node]; }
  bool is_structural(int node) const { return structural_[node]; }
  bool is_vacuum_interior(int node) const { return !structural_[node] && has_potential_[node]; }
  bool is_fixed(int slot) const { return fixed_[slot]; }
  /// Prescribed phi = potential_coefficient(slot) * V for fixed potential slots.
  double potential_coefficient(int slot) const { return coefficient_[slot]; }
  std::span<const DofEntry> entries(int slot) const {
    return {entries_.data() + offsets_[slot], entries_.data() + offsets_[slot + 1]};
  }
  /// Free index of a slot that is an unknown of its own, or -1.
  int own_index(int slot) const { return own_[slot]; }

  SlotKind kind(int free_index) const { return kinds_[free_index]; }
  int node_of(int free_index) const { return owner_[free_index] / kSlotsPerNode; }
  int component_of(int free_index) const { return owner_[free_index] % kSlotsPerNode; }

  int count(SlotKind k) const;
  MorphMode morph_mode() const { return morph_mode_; }

 private:
  friend DofMap build_dofmap(const Mesh&, const BoundaryConditions&, const MorphSettings&,
                             std::vector<std::string>*);
  int num_nodes_ = 0;
  MorphMode morph_mode_ = MorphMode::PseudoElastic;
  std::vector<bool> has_potential_, structural_, fixed_;
  std::vector<double> coefficient_;
  std::vector<int> own_;
  std::vector<int> offsets_;
  std::vector<DofEntry> entries_;
  std::vector<SlotKind> kinds_;
  std::vector<int> owner_;
};

/// Deterministic node-major, slot-minor numbering. Throws ValidationError for
/// unknown node sets, conflicting potential prescriptions, potentials on
/// nodes without an electric region, or an electric region with no
/// Dirichlet potential at all. An empty BoundaryConditions yields a warning.
DofMap build_dofmap(const Mesh& mesh, const BoundaryConditions& bcs,
                    const MorphSettings& morph = {}, std::vector<std::string>* warnings = nullptr);

/// Nodal fields of the coupled problem plus the applied voltage.
struct State {
  Eigen::VectorXd u;    // 2 * nodes, (u_x, u_y) per node
  Eigen::VectorXd phi;  // nodes; zero where a node has no potential slot
  double voltage = 0.0;
};

State make_state(const DofMap& dofs, const Eigen::VectorXd& free, double voltage);
Eigen::VectorXd free_vector(const DofMap& dofs, const State& state);
/// Same State with prescribed potentials set for a new voltage.
State with_voltage(const DofMap& dofs, State state, double voltage);

}  // namespace elmech
