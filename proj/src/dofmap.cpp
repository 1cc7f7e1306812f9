#include "elmech/dofmap.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>

#include <Eigen/SparseCholesky>

#include "elmech/electrostatic.hpp"
#include "elmech/errors.hpp"

namespace elmech {
namespace {

struct Extension {
  // For each vacuum-interior node: (interface node, weight) pairs.
  std::vector<std::vector<std::pair<int, double>>> weights;
};

/// Harmonic extension of the interface displacement component `c` into the
/// vacuum region: unit-conductivity Laplacian on the reference mesh, value 1
/// at one interface node, 0 at the other interface nodes and at fixed nodes.
Extension harmonic_extension(const Mesh& mesh, const std::vector<bool>& structural,
                             const std::vector<bool>& electric, const std::vector<bool>& fixed_c,
                             double truncation) {
  const int N = mesh.num_nodes();
  Extension ext;
  ext.weights.resize(N);

  std::vector<int> unknown(N, -1), master(N, -1);
  int nu = 0, nm = 0;
  for (int n = 0; n < N; ++n) {
    if (!electric[n]) continue;
    if (!structural[n] && !fixed_c[n]) unknown[n] = nu++;
    else if (structural[n] && !fixed_c[n]) master[n] = nm++;
  }
  if (nu == 0 || nm == 0) return ext;

  std::vector<Eigen::Triplet<double>> tv, tm;
  for (const auto& e : mesh.elements) {
    if (!has_electrostatics(mesh.region_of(e).physics)) continue;
    const auto X = mesh.element_coords(e);
    const auto L = electrostatic_element<double>(e.kind, X, 1.0, ShapeVector<double>::Zero(node_count(e.kind)),
                                                 ElectricLevel::Energy)
                       .K_pp;
    const auto conn = e.connectivity();
    for (std::size_t a = 0; a < conn.size(); ++a) {
      const int ia = unknown[conn[a]];
      if (ia < 0) continue;
      for (std::size_t b = 0; b < conn.size(); ++b) {
        if (unknown[conn[b]] >= 0) tv.emplace_back(ia, unknown[conn[b]], L(a, b));
        else if (master[conn[b]] >= 0) tm.emplace_back(ia, master[conn[b]], L(a, b));
      }
    }
  }
  Eigen::SparseMatrix<double> Lvv(nu, nu), Lvm(nu, nm);
  Lvv.setFromTriplets(tv.begin(), tv.end());
  Lvm.setFromTriplets(tm.begin(), tm.end());

  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(Lvv);
  if (solver.info() != Eigen::Success) throw ValidationError("vacuum mesh-motion Laplacian is singular");
  const Eigen::MatrixXd E = -solver.solve(Eigen::MatrixXd(Lvm));

  std::vector<int> master_node(nm);
  for (int n = 0; n < N; ++n)
    if (master[n] >= 0) master_node[master[n]] = n;
  for (int n = 0; n < N; ++n) {
    if (unknown[n] < 0) continue;
    for (int m = 0; m < nm; ++m) {
      const double w = E(unknown[n], m);
      if (std::abs(w) >= truncation) ext.weights[n].emplace_back(master_node[m], w);
    }
  }
  return ext;
}

}  // namespace

int DofMap::count(SlotKind k) const { return int(std::count(kinds_.begin(), kinds_.end(), k)); }

DofMap build_dofmap(const Mesh& mesh, const BoundaryConditions& bcs, const MorphSettings& morph,
                    std::vector<std::string>* warnings) {
  const int N = mesh.num_nodes();
  const int S = DofMap::kSlotsPerNode * N;
  DofMap map;
  map.num_nodes_ = N;
  map.morph_mode_ = morph.mode;
  map.has_potential_.assign(N, false);
  map.structural_.assign(N, false);
  map.fixed_.assign(S, false);
  map.coefficient_.assign(S, 0.0);

  for (const auto& e : mesh.elements) {
    const Physics p = mesh.region_of(e).physics;
    for (int n : e.connectivity()) {
      if (has_mechanics(p)) map.structural_[n] = true;
      if (has_electrostatics(p)) map.has_potential_[n] = true;
    }
  }

  if (bcs.clamps.empty() && bcs.electrodes.empty() && bcs.conductors.empty() && warnings)
    warnings->push_back("no boundary conditions: every slot is free");

  for (const auto& c : bcs.clamps)
    for (int n : mesh.node_set(c.set)) {
      if (c.x) map.fixed_[DofMap::slot(n, 0)] = true;
      if (c.y) map.fixed_[DofMap::slot(n, 1)] = true;
    }

  auto prescribe = [&](const std::string& set, double coefficient) {
    for (int n : mesh.node_set(set)) {
      if (!map.has_potential_[n])
        throw ValidationError("potential set '" + set + "' contains node " + std::to_string(n) +
                              " outside every electric region");
      const int s = DofMap::slot(n, 2);
      if (map.fixed_[s] && map.coefficient_[s] != coefficient)
        throw ValidationError("conflicting potentials prescribed on node " + std::to_string(n) +
                              " (set '" + set + "')");
      map.fixed_[s] = true;
      map.coefficient_[s] = coefficient;
    }
  };
  for (const auto& name : bcs.conductors) prescribe(name, 0.0);
  for (const auto& el : bcs.electrodes) prescribe(el.set, el.coefficient);

  const bool any_potential = std::any_of(map.has_potential_.begin(), map.has_potential_.end(), [](bool b) { return b; });
  bool any_dirichlet = false;
  for (int n = 0; n < N; ++n) any_dirichlet |= map.has_potential_[n] && map.fixed_[DofMap::slot(n, 2)];
  if (any_potential && !any_dirichlet && !(bcs.clamps.empty() && bcs.electrodes.empty() && bcs.conductors.empty()))
    throw ValidationError("electric region has no prescribed potential; the potential would float");

  std::vector<bool> electric(N);
  for (int n = 0; n < N; ++n) electric[n] = map.has_potential_[n];
  std::array<Extension, 2> ext;
  for (int c = 0; c < 2; ++c) {
    std::vector<bool> fixed_c(N);
    for (int n = 0; n < N; ++n) fixed_c[n] = map.fixed_[DofMap::slot(n, c)];
    ext[c] = harmonic_extension(mesh, map.structural_, electric, fixed_c, morph.truncation);
  }

  map.own_.assign(S, -1);
  for (int n = 0; n < N; ++n)
    for (int c = 0; c < 3; ++c) {
      const int s = DofMap::slot(n, c);
      if (map.fixed_[s]) continue;
      if (c == 2 && !map.has_potential_[n]) continue;
      SlotKind kind = SlotKind::Displacement;
      if (c == 2) kind = SlotKind::Potential;
      else if (map.is_vacuum_interior(n)) {
        if (morph.mode == MorphMode::Slaved) continue;
        kind = SlotKind::MorphRelative;
      }
      map.own_[s] = int(map.kinds_.size());
      map.kinds_.push_back(kind);
      map.owner_.push_back(s);
    }

  map.offsets_.assign(S + 1, 0);
  for (int s = 0; s < S; ++s) {
    const int n = s / DofMap::kSlotsPerNode, c = s % DofMap::kSlotsPerNode;
    if (map.own_[s] >= 0) map.entries_.push_back({map.own_[s], 1.0});
    if (c < 2 && !map.fixed_[s] && map.is_vacuum_interior(n))
      for (const auto& [m, w] : ext[c].weights[n]) map.entries_.push_back({map.own_[DofMap::slot(m, c)], w});
    map.offsets_[s + 1] = int(map.entries_.size());
  }
  return map;
}

State make_state(const DofMap& dofs, const Eigen::VectorXd& free, double voltage) {
  const int N = dofs.num_nodes();
  State s;
  s.u = Eigen::VectorXd::Zero(2 * N);
  s.phi = Eigen::VectorXd::Zero(N);
  s.voltage = voltage;
  for (int n = 0; n < N; ++n) {
    for (int c = 0; c < 2; ++c)
      for (const auto& e : dofs.entries(DofMap::slot(n, c))) s.u(2 * n + c) += e.weight * free(e.index);
    if (!dofs.has_potential(n)) continue;
    const int slot = DofMap::slot(n, 2);
    if (dofs.is_fixed(slot)) s.phi(n) = dofs.potential_coefficient(slot) * voltage;
    else s.phi(n) = free(dofs.own_index(slot));
  }
  return s;
}

Eigen::VectorXd free_vector(const DofMap& dofs, const State& state) {
  Eigen::VectorXd z = Eigen::VectorXd::Zero(dofs.num_free());
  // Structure and potential unknowns first; relative vacuum unknowns then
  // subtract the extension of the (already known) interface values.
  for (int i = 0; i < dofs.num_free(); ++i) {
    const int n = dofs.node_of(i), c = dofs.component_of(i);
    z(i) = c == 2 ? state.phi(n) : state.u(2 * n + c);
  }
  for (int i = 0; i < dofs.num_free(); ++i) {
    if (dofs.kind(i) != SlotKind::MorphRelative) continue;
    const int n = dofs.node_of(i), c = dofs.component_of(i);
    double ext = 0.0;
    for (const auto& e : dofs.entries(DofMap::slot(n, c)))
      if (e.index != i) ext += e.weight * z(e.index);
    z(i) -= ext;
  }
  return z;
}

State with_voltage(const DofMap& dofs, State state, double voltage) {
  const double ratio = state.voltage != 0.0 ? voltage / state.voltage : 0.0;
  for (int n = 0; n < dofs.num_nodes(); ++n) {
    if (!dofs.has_potential(n)) continue;
    const int slot = DofMap::slot(n, 2);
    state.phi(n) = dofs.is_fixed(slot) ? dofs.potential_coefficient(slot) * voltage
                                       : (state.voltage != 0.0 ? ratio * state.phi(n) : state.phi(n));
  }
  state.voltage = voltage;
  return state;
}

}  // namespace elmech
