#include "elmech/assembly.hpp"

#include <algorithm>
#include <map>
#include <cmath>
#include <unordered_map>

#include "elmech/electrostatic.hpp"
#include "elmech/errors.hpp"
#include "elmech/mechanical.hpp"

namespace elmech {
namespace {

const MechanicalMaterial& mechanical_material(const Materials& m, const std::string& name) {
  const auto it = m.mechanical.find(name);
  if (it == m.mechanical.end()) throw ValidationError("no mechanical material named '" + name + "'");
  if (!it->second.admissible()) throw ValidationError("material '" + name + "' has inadmissible constants");
  return it->second;
}

double permittivity_of(const Materials& m, const std::string& name) {
  const auto it = m.electric.find(name);
  if (it == m.electric.end()) throw ValidationError("no electric material named '" + name + "'");
  if (!(it->second.permittivity > 0)) throw ValidationError("permittivity of '" + name + "' must be positive");
  return it->second.permittivity;
}

// Position of (row, col) in the value array of a compressed column matrix.
int value_position(const SparseMatrix& A, int row, int col) {
  const int* inner = A.innerIndexPtr();
  const int begin = A.outerIndexPtr()[col], end = A.outerIndexPtr()[col + 1];
  const int* p = std::lower_bound(inner + begin, inner + end, row);
  return int(p - inner);
}

// Mean diagonal of the small-strain mechanical stiffness over free structural
// displacement unknowns.
double mean_mechanical_diagonal(const Mesh& mesh, const DofMap& dofs, const Materials& materials) {
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(dofs.num_free());
  for (const auto& e : mesh.elements) {
    const auto& region = mesh.region_of(e);
    if (!has_mechanics(region.physics)) continue;
    const auto& mat = mechanical_material(materials, region.material);
    const int n = node_count(e.kind);
    const auto K = mech_element<double>(e.kind, mesh.element_coords(e), mat, ElementVector<double>::Zero(2 * n)).K;
    const auto conn = e.connectivity();
    for (int a = 0; a < n; ++a)
      for (int c = 0; c < 2; ++c) {
        const int i = dofs.own_index(DofMap::slot(conn[a], c));
        if (i >= 0) diag(i) += K(2 * a + c, 2 * a + c);
      }
  }
  double sum = 0.0;
  int count = 0;
  for (int i = 0; i < dofs.num_free(); ++i)
    if (dofs.kind(i) == SlotKind::Displacement && dofs.is_structural(dofs.node_of(i))) {
      sum += diag(i);
      ++count;
    }
  return count > 0 ? sum / count : 0.0;
}

}  // namespace

SparseMatrix morphing_stiffness(const Mesh& mesh, const DofMap& dofs, const Materials& materials,
                                double scale) {
  const int nf = dofs.num_free();
  SparseMatrix K(nf, nf);
  if (dofs.count(SlotKind::MorphRelative) == 0) return K;
  if (scale < 0) throw ValidationError("mesh-morphing stiffness scale must be non-negative");

  std::vector<Eigen::Triplet<double>> trip;
  for (const auto& e : mesh.elements) {
    if (!has_electrostatics(mesh.region_of(e).physics) || has_mechanics(mesh.region_of(e).physics)) continue;
    const int n = node_count(e.kind);
    const auto Ke = unit_linear_stiffness(e.kind, mesh.element_coords(e));
    const auto conn = e.connectivity();
    for (int a = 0; a < 2 * n; ++a) {
      const int i = dofs.own_index(DofMap::slot(conn[a / 2], a % 2));
      if (i < 0 || dofs.kind(i) != SlotKind::MorphRelative) continue;
      for (int b = 0; b < 2 * n; ++b) {
        const int j = dofs.own_index(DofMap::slot(conn[b / 2], b % 2));
        if (j < 0 || dofs.kind(j) != SlotKind::MorphRelative) continue;
        trip.emplace_back(i, j, Ke(a, b));
      }
    }
  }
  K.setFromTriplets(trip.begin(), trip.end());

  double unit_diag = 0.0;
  int count = 0;
  for (int i = 0; i < nf; ++i)
    if (dofs.kind(i) == SlotKind::MorphRelative) {
      unit_diag += K.coeff(i, i);
      ++count;
    }
  unit_diag /= std::max(count, 1);
  const double mech_diag = mean_mechanical_diagonal(mesh, dofs, materials);
  const double factor = unit_diag > 0 && mech_diag > 0 ? scale * mech_diag / unit_diag : scale;
  K *= factor;
  return K;
}

SparseMatrix add_mesh_morphing(const SparseMatrix& K, const Mesh& mesh, const DofMap& dofs,
                               const Materials& materials, double scale) {
  return K + morphing_stiffness(mesh, dofs, materials, scale);
}

SparseMatrix assemble_mass(const Mesh& mesh, const Materials& materials, const DofMap& dofs) {
  const int nf = dofs.num_free();
  std::vector<Eigen::Triplet<double>> trip;
  for (const auto& e : mesh.elements) {
    const auto& region = mesh.region_of(e);
    if (!has_mechanics(region.physics)) continue;
    const auto& mat = mechanical_material(materials, region.material);
    if (mat.rho == 0.0) continue;
    const int n = node_count(e.kind);
    const auto M = mech_element<double>(e.kind, mesh.element_coords(e), mat, ElementVector<double>::Zero(2 * n), true).M;
    const auto conn = e.connectivity();
    for (int a = 0; a < 2 * n; ++a)
      for (const auto& ea : dofs.entries(DofMap::slot(conn[a / 2], a % 2)))
        for (int b = 0; b < 2 * n; ++b)
          for (const auto& eb : dofs.entries(DofMap::slot(conn[b / 2], b % 2)))
            trip.emplace_back(ea.index, eb.index, ea.weight * eb.weight * M(a, b));
  }
  SparseMatrix M(nf, nf);
  M.setFromTriplets(trip.begin(), trip.end());
  return M;
}

CoupledModel::CoupledModel(Mesh mesh, Materials materials, BoundaryConditions bcs, MorphSettings morph)
    : mesh_(std::move(mesh)), materials_(std::move(materials)), bcs_(std::move(bcs)), morph_settings_(morph) {
  dofs_ = build_dofmap(mesh_, bcs_, morph_settings_, &warnings_);
  plan();
}

void CoupledModel::plan() {
  const int nf = dofs_.num_free();
  mech_material_.assign(mesh_.elements.size(), nullptr);
  permittivity_.assign(mesh_.elements.size(), 0.0);
  plans_.resize(mesh_.elements.size());

  std::vector<Eigen::Triplet<double>> trip;
  for (const auto& e : mesh_.elements) {
    const auto& region = mesh_.region_of(e);
    ElementPlan& p = plans_[e.id];
    p.mechanical = has_mechanics(region.physics);
    p.electric = has_electrostatics(region.physics);
    if (p.mechanical) mech_material_[e.id] = &mechanical_material(materials_, region.material);
    if (p.electric) permittivity_[e.id] = permittivity_of(materials_, region.material);

    const auto conn = e.connectivity();
    const int n = int(conn.size());
    for (int a = 0; a < n; ++a)
      for (int c = 0; c < 2; ++c) p.slots.push_back(DofMap::slot(conn[a], c));
    if (p.electric)
      for (int a = 0; a < n; ++a) p.slots.push_back(DofMap::slot(conn[a], 2));

    std::unordered_map<int, int> column;
    for (int s : p.slots)
      for (const auto& entry : dofs_.entries(s))
        if (column.emplace(entry.index, int(p.unknowns.size())).second) p.unknowns.push_back(entry.index);
    const int m = int(p.unknowns.size());
    p.T = Eigen::MatrixXd::Zero(int(p.slots.size()), m);
    p.dslot_dV = Eigen::VectorXd::Zero(int(p.slots.size()));
    for (int k = 0; k < int(p.slots.size()); ++k) {
      const int s = p.slots[k];
      for (const auto& entry : dofs_.entries(s)) p.T(k, column[entry.index]) += entry.weight;
      if (s % DofMap::kSlotsPerNode == 2 && dofs_.is_fixed(s)) p.dslot_dV(k) = dofs_.potential_coefficient(s);
    }
    for (int i : p.unknowns)
      for (int j : p.unknowns) trip.emplace_back(i, j, 0.0);
  }

  for (const auto& spring : bcs_.springs) {
    const auto& nodes = mesh_.node_set(spring.set);
    if (spring.component < 0 || spring.component > 1)
      throw ValidationError("spring component must be 0 (x) or 1 (y)");
    std::map<int, double> weight;
    for (const auto& e : mesh_.elements) {
      const auto conn = e.connectivity();
      for (int a = 0; a < 3; ++a) {
        const int b = (a + 1) % 3;
        const int na = conn[a], nb = conn[b];
        const bool quadratic = e.kind == ElementKind::Tri6;
        const int nm = quadratic ? conn[3 + a] : -1;
        auto in_set = [&](int n) { return std::binary_search(nodes.begin(), nodes.end(), n); };
        if (!in_set(na) || !in_set(nb) || (quadratic && !in_set(nm))) continue;
        const double len = (mesh_.coords.col(na) - mesh_.coords.col(nb)).norm();
        weight[na] += len * (quadratic ? 1.0 / 6.0 : 0.5);
        weight[nb] += len * (quadratic ? 1.0 / 6.0 : 0.5);
        if (quadratic) weight[nm] += len * 2.0 / 3.0;
      }
    }
    // Each edge is seen once per adjacent element; only the total matters.
    double total = 0.0;
    for (const auto& [n, w] : weight) total += w;
    if (total <= 0.0) {
      weight.clear();
      for (int node : nodes) weight[node] = 1.0;
      total = double(nodes.size());
    }
    for (const auto& [node, w] : weight) {
      const int i = dofs_.own_index(DofMap::slot(node, spring.component));
      if (i < 0) continue;
      springs_.emplace_back(i, spring.stiffness * w / total);
      trip.emplace_back(i, i, 0.0);
    }
  }

  morph_ = morphing_stiffness(mesh_, dofs_, materials_, morph_settings_.scale);
  for (int k = 0; k < morph_.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(morph_, k); it; ++it) trip.emplace_back(int(it.row()), int(it.col()), 0.0);

  pattern_.resize(nf, nf);
  pattern_.setFromTriplets(trip.begin(), trip.end());
  pattern_.makeCompressed();

  for (auto& p : plans_) {
    const int m = int(p.unknowns.size());
    p.positions.resize(std::size_t(m) * m);
    for (int b = 0; b < m; ++b)
      for (int a = 0; a < m; ++a) p.positions[std::size_t(b) * m + a] = value_position(pattern_, p.unknowns[a], p.unknowns[b]);
  }
  morph_positions_.clear();
  for (int k = 0; k < morph_.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(morph_, k); it; ++it)
      morph_positions_.push_back(value_position(pattern_, int(it.row()), int(it.col())));

  mass_ = assemble_mass(mesh_, materials_, dofs_);
  row_class_.resize(nf);
  for (int i = 0; i < nf; ++i) row_class_[i] = dofs_.kind(i) == SlotKind::Potential ? 1 : 0;
}

State CoupledModel::zero_state(double voltage) const {
  return make_state(dofs_, Eigen::VectorXd::Zero(dofs_.num_free()), voltage);
}

TangentSystem CoupledModel::assemble(const State& state, bool with_tangent, Parts parts) const {
  const int nf = dofs_.num_free();
  const int N = mesh_.num_nodes();
  TangentSystem sys;
  sys.r = Eigen::VectorXd::Zero(nf);
  sys.dr_dV = Eigen::VectorXd::Zero(nf);
  sys.charges = Eigen::VectorXd::Zero(N);
  sys.elec_force = Eigen::VectorXd::Zero(2 * N);
  Eigen::VectorXd r_mech = Eigen::VectorXd::Zero(nf), r_elec = Eigen::VectorXd::Zero(nf);
  Eigen::VectorXd abs_force = Eigen::VectorXd::Zero(nf), abs_charge = Eigen::VectorXd::Zero(N);
  if (with_tangent) {
    sys.K = pattern_;
    std::fill(sys.K.valuePtr(), sys.K.valuePtr() + sys.K.nonZeros(), 0.0);
  }
  double* values = with_tangent ? sys.K.valuePtr() : nullptr;

  Eigen::VectorXd g;
  Eigen::MatrixXd H;
  for (const auto& e : mesh_.elements) {
    const ElementPlan& p = plans_[e.id];
    const auto conn = e.connectivity();
    const int n = int(conn.size());
    const int ns = int(p.slots.size());
    g = Eigen::VectorXd::Zero(ns);
    Eigen::VectorXd g_mech = Eigen::VectorXd::Zero(ns);
    if (with_tangent) H = Eigen::MatrixXd::Zero(ns, ns);

    const NodeCoords<double> X = mesh_.element_coords(e);
    ElementVector<double> u(2 * n);
    for (int a = 0; a < n; ++a) u.segment<2>(2 * a) = state.u.segment<2>(2 * conn[a]);

    try {
      if (p.mechanical) {
        const auto out = mech_element<double>(e.kind, X, *mech_material_[e.id], u);
        sys.W_m += out.energy;
        g_mech.head(2 * n) = out.f;
        if (with_tangent) H.topLeftCorner(2 * n, 2 * n) += out.K;
      }
      if (p.electric && parts == Parts::All) {
        NodeCoords<double> x = X;
        for (int a = 0; a < n; ++a) x.col(a) += u.segment<2>(2 * a);
        ShapeVector<double> phi(n);
        for (int a = 0; a < n; ++a) phi(a) = state.phi(conn[a]);
        const auto out = electrostatic_element<double>(e.kind, x, permittivity_[e.id], phi,
                                                       with_tangent ? ElectricLevel::Tangent : ElectricLevel::Force);
        sys.W_e += out.energy;
        g.head(2 * n) -= out.force;
        g.tail(n) -= out.charges;
        for (int a = 0; a < n; ++a) {
          sys.charges(conn[a]) += out.charges(a);
          abs_charge(conn[a]) += std::abs(out.charges(a));
          sys.elec_force.segment<2>(2 * conn[a]) += out.force.segment(2 * a, 2);
        }
        if (with_tangent) {
          H.topLeftCorner(2 * n, 2 * n) -= out.K_xx;
          H.block(0, 2 * n, 2 * n, n) -= out.K_xp;
          H.block(2 * n, 0, n, 2 * n) -= out.K_xp.transpose();
          H.bottomRightCorner(n, n) -= out.K_pp;
        }
      }
    } catch (const ElementInversion&) {
      throw ElementInversion(e.id);
    }

    const Eigen::VectorXd ge = p.T.transpose() * g;
    const Eigen::VectorXd gm = p.T.transpose() * g_mech;
    const int m = int(p.unknowns.size());
    for (int a = 0; a < m; ++a) {
      r_elec(p.unknowns[a]) += ge(a);
      r_mech(p.unknowns[a]) += gm(a);
      abs_force(p.unknowns[a]) += std::abs(ge(a)) + std::abs(gm(a));
    }
    if (with_tangent) {
      if (p.electric && p.dslot_dV.any()) {
        const Eigen::VectorXd dv = p.T.transpose() * (H * p.dslot_dV);
        for (int a = 0; a < m; ++a) sys.dr_dV(p.unknowns[a]) += dv(a);
      }
      const Eigen::MatrixXd Kz = p.T.transpose() * H * p.T;
      for (int b = 0; b < m; ++b)
        for (int a = 0; a < m; ++a) values[p.positions[std::size_t(b) * m + a]] += Kz(a, b);
    }
  }

  for (const auto& [i, k] : springs_) {
    // Springs act on own displacement slots only, so the slot value is z(i).
    const int node = dofs_.node_of(i), c = dofs_.component_of(i);
    const double ui = state.u(2 * node + c);
    sys.W_m += 0.5 * k * ui * ui;
    r_mech(i) += k * ui;
    abs_force(i) += std::abs(k * ui);
  }
  if (with_tangent) {
    for (const auto& [i, k] : springs_) values[value_position(sys.K, i, i)] += k;
  }

  if (morph_.nonZeros() > 0) {
    const Eigen::VectorXd z = free_vector(dofs_, state);
    Eigen::VectorXd w = Eigen::VectorXd::Zero(nf);
    for (int i = 0; i < nf; ++i)
      if (dofs_.kind(i) == SlotKind::MorphRelative) w(i) = z(i);
    const Eigen::VectorXd fw = morph_ * w;
    sys.W_morph = 0.5 * w.dot(fw);
    r_mech += fw;
    abs_force += fw.cwiseAbs();
    if (with_tangent) {
      int k = 0;
      for (int col = 0; col < morph_.outerSize(); ++col)
        for (SparseMatrix::InnerIterator it(morph_, col); it; ++it) values[morph_positions_[k++]] += it.value();
    }
  }

  sys.r = r_mech + r_elec;
  sys.r_mech = r_mech;
  double fs = 0.0;
  for (int i = 0; i < nf; ++i)
    if (row_class_[i] == 0) fs += abs_force(i) * abs_force(i);
  sys.force_scale = std::sqrt(fs);
  sys.charge_scale = abs_charge.norm();
  return sys;
}

ResidualNorms CoupledModel::residual_norms(const Eigen::VectorXd& r) const {
  double u = 0.0, p = 0.0;
  for (int i = 0; i < int(r.size()); ++i) (row_class_[i] == 0 ? u : p) += r(i) * r(i);
  return {std::sqrt(u), std::sqrt(p)};
}

Eigen::Vector2d CoupledModel::set_force(const TangentSystem& sys, const std::string& set) const {
  Eigen::Vector2d f = Eigen::Vector2d::Zero();
  for (int n : mesh_.node_set(set)) f += sys.elec_force.segment<2>(2 * n);
  return f;
}

double CoupledModel::set_charge(const TangentSystem& sys, const std::string& set) const {
  double q = 0.0;
  for (int n : mesh_.node_set(set)) q += sys.charges(n);
  return q;
}

}  // namespace elmech
