#include "elmech/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <utility>

#include <Eigen/LU>

#include "elmech/errors.hpp"
#include "elmech/quadrature.hpp"

namespace elmech {
namespace {

constexpr int kCornerEdges[3][2] = {{0, 1}, {1, 2}, {2, 0}};

std::pair<int, int> edge_key(int a, int b) { return a < b ? std::pair{a, b} : std::pair{b, a}; }

std::string format_message(const std::string& what, int id) {
  std::ostringstream os;
  os << what << " (id " << id << ")";
  return os.str();
}

}  // namespace

int Mesh::find_region(std::string_view name) const {
  for (std::size_t i = 0; i < regions.size(); ++i)
    if (regions[i].name == name) return int(i);
  return -1;
}

const std::vector<int>& Mesh::node_set(const std::string& name) const {
  auto it = node_sets.find(name);
  if (it == node_sets.end()) throw ValidationError("unknown node set '" + name + "'");
  return it->second;
}

NodeCoords<double> Mesh::element_coords(const Element& e) const {
  const int n = node_count(e.kind);
  NodeCoords<double> X(2, n);
  for (int a = 0; a < n; ++a) X.col(a) = coords.col(e.nodes[a]);
  return X;
}

double Mesh::characteristic_length() const {
  double h = 0.0;
  for (const auto& e : elements)
    for (const auto& edge : kCornerEdges)
      h = std::max(h, (coords.col(e.nodes[edge[0]]) - coords.col(e.nodes[edge[1]])).norm());
  return h;
}

double element_area(const Mesh& mesh, const Element& e) {
  const auto X = mesh.element_coords(e);
  const QuadratureRule& rule = quadrature_rule(e.kind, 2);
  double area = 0.0;
  for (std::size_t q = 0; q < rule.size(); ++q)
    area += rule.weights[q] * (X * shape_eval<double>(e.kind, rule.points[q]).dN).determinant();
  return area;
}

double total_area(const Mesh& mesh) {
  double a = 0.0;
  for (const auto& e : mesh.elements) a += element_area(mesh, e);
  return a;
}

Mesh generate_beam_mesh(const BeamGeometry& g) {
  if (!(g.length > 0 && g.thickness > 0 && g.gap > 0))
    throw GeometryError("beam length, thickness and gap must be positive");
  if (g.nx < 1 || g.ny_beam < 1 || g.ny_gap < 1)
    throw ValidationError("mesh subdivisions nx, ny_beam, ny_gap must be >= 1");
  if (g.order != 1 && g.order != 2) throw ValidationError("element order must be 1 or 2");

  const double tol = 1e-9 * g.length;
  std::vector<std::pair<double, double>> spans;
  for (double c : g.electrode_centers) {
    if (!(g.electrode_length > 0)) throw GeometryError("electrode length must be positive");
    const double lo = c - 0.5 * g.electrode_length, hi = c + 0.5 * g.electrode_length;
    if (lo < -tol || hi > g.length + tol)
      throw GeometryError("electrode centred at x = " + std::to_string(c) + " leaves the beam span");
    spans.emplace_back(lo, hi);
  }
  std::vector<std::pair<double, double>> sorted = spans;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t k = 1; k < sorted.size(); ++k)
    if (sorted[k].first < sorted[k - 1].second - tol) throw GeometryError("electrodes overlap");

  const int cols = g.nx + 1;
  const int rows = g.ny_gap + g.ny_beam + 1;
  auto id = [cols](int i, int r) { return r * cols + i; };

  Mesh mesh;
  mesh.regions = {{"gap", Physics::Electric, g.gap_material},
                  {"beam", Physics::Mechanical, g.beam_material}};
  mesh.coords.resize(2, cols * rows);
  for (int r = 0; r < rows; ++r) {
    const double y = r <= g.ny_gap ? g.gap * r / g.ny_gap
                                   : g.gap + g.thickness * (r - g.ny_gap) / g.ny_beam;
    for (int i = 0; i < cols; ++i) mesh.coords.col(id(i, r)) << g.length * i / g.nx, y;
  }

  for (int r = 0; r + 1 < rows; ++r) {
    const int region = r < g.ny_gap ? 0 : 1;
    for (int i = 0; i < g.nx; ++i) {
      const int n00 = id(i, r), n10 = id(i + 1, r), n01 = id(i, r + 1), n11 = id(i + 1, r + 1);
      const bool rising = 2 * i < g.nx - (g.nx % 2);
      const std::array<std::array<int, 3>, 2> tris =
          rising ? std::array<std::array<int, 3>, 2>{{{n00, n10, n11}, {n00, n11, n01}}}
                 : std::array<std::array<int, 3>, 2>{{{n00, n10, n01}, {n10, n11, n01}}};
      for (const auto& t : tris) {
        Element e;
        e.id = int(mesh.elements.size());
        e.kind = ElementKind::Tri3;
        e.nodes = {t[0], t[1], t[2], 0, 0, 0};
        e.region = region;
        mesh.elements.push_back(e);
      }
    }
  }

  auto& sets = mesh.node_sets;
  for (int r = g.ny_gap; r < rows; ++r) {
    sets["clamp_left"].push_back(id(0, r));
    sets["clamp_right"].push_back(id(g.nx, r));
  }
  for (int r = 0; r <= g.ny_gap; ++r) {
    sets["gap_left"].push_back(id(0, r));
    sets["gap_right"].push_back(id(g.nx, r));
  }
  for (int i = 0; i < cols; ++i) {
    sets["substrate"].push_back(id(i, 0));
    sets["beam_bottom"].push_back(id(i, g.ny_gap));
    sets["beam_top"].push_back(id(i, rows - 1));
  }
  for (std::size_t k = 0; k < spans.size(); ++k) {
    auto& set = sets["electrode_" + std::to_string(k + 1)];
    for (int i = 0; i < cols; ++i) {
      const double x = mesh.coords(0, id(i, 0));
      if (x >= spans[k].first - tol && x <= spans[k].second + tol) set.push_back(id(i, 0));
    }
    if (set.size() < 2)
      throw ValidationError("electrode_" + std::to_string(k + 1) +
                            " is not resolved by the mesh (fewer than two nodes); increase nx");
  }
  for (auto& [name, ids] : sets) std::sort(ids.begin(), ids.end());

  return g.order == 2 ? elevate_order(mesh) : mesh;
}

std::vector<Diagnostic> validate(const Mesh& mesh) {
  std::vector<Diagnostic> out;
  const int N = mesh.num_nodes();

  for (int i = 0; i < N; ++i)
    if (!mesh.coords.col(i).allFinite())
      out.push_back({DiagnosticKind::BadCoordinate, i, format_message("non-finite coordinate", i)});

  std::vector<int> uses(N, 0);
  std::map<std::pair<int, int>, int> edge_count;
  for (const auto& e : mesh.elements) {
    if (e.region < 0 || e.region >= int(mesh.regions.size())) {
      out.push_back({DiagnosticKind::BadRegion, e.id, format_message("element without a valid region", e.id)});
    }
    bool dangling = false;
    for (int n : e.connectivity())
      if (n < 0 || n >= N) dangling = true;
    if (dangling) {
      out.push_back({DiagnosticKind::DanglingNode, e.id,
                     format_message("element references a node outside 0.." + std::to_string(N - 1), e.id)});
      continue;
    }
    for (int n : e.connectivity()) ++uses[n];
    for (const auto& edge : kCornerEdges) ++edge_count[edge_key(e.nodes[edge[0]], e.nodes[edge[1]])];

    const auto X = mesh.element_coords(e);
    bool negative = false;
    const QuadratureRule& rule = quadrature_rule(e.kind, 4);
    for (std::size_t q = 0; q < rule.size() && !negative; ++q)
      negative = !((X * shape_eval<double>(e.kind, rule.points[q]).dN).determinant() > 0);
    for (int a = 0; a < node_count(e.kind) && !negative; ++a) {
      const Eigen::Vector2d xi = reference_node(e.kind, a);
      negative = !((X * shape_eval<double>(e.kind, xi).dN).determinant() > 0);
    }
    if (negative)
      out.push_back({DiagnosticKind::NegativeJacobian, e.id, format_message("non-positive Jacobian", e.id)});

    if (e.kind == ElementKind::Tri6) {
      const double h = (X.col(1) - X.col(0)).norm() + (X.col(2) - X.col(1)).norm();
      for (int k = 0; k < 3; ++k) {
        const Eigen::Vector2d mid = 0.5 * (X.col(kCornerEdges[k][0]) + X.col(kCornerEdges[k][1]));
        if ((X.col(3 + k) - mid).norm() > 1e-9 * h) {
          out.push_back({DiagnosticKind::MidsideOffset, e.id, format_message("mid-side node off the edge midpoint", e.id)});
          break;
        }
      }
    }
  }
  for (int i = 0; i < N; ++i)
    if (uses[i] == 0) out.push_back({DiagnosticKind::OrphanNode, i, format_message("node not used by any element", i)});

  // Conformity: coincident nodes with distinct ids, and vertices hanging on a
  // boundary edge of a neighbour.
  const double h = mesh.characteristic_length();
  const double tol = 1e-10 * (h > 0 ? h : 1.0);
  std::vector<int> order(N);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return mesh.coords(0, a) < mesh.coords(0, b); });
  for (int p = 0; p < N; ++p)
    for (int q = p + 1; q < N && mesh.coords(0, order[q]) - mesh.coords(0, order[p]) <= tol; ++q)
      if ((mesh.coords.col(order[q]) - mesh.coords.col(order[p])).norm() <= tol)
        out.push_back({DiagnosticKind::NonConforming, std::max(order[p], order[q]),
                       format_message("coincident nodes " + std::to_string(order[p]) + " and " +
                                          std::to_string(order[q]) + " break conformity",
                                      std::max(order[p], order[q]))});

  std::vector<std::pair<int, int>> boundary;
  for (const auto& [edge, count] : edge_count)
    if (count == 1) boundary.push_back(edge);
  for (const auto& [a, b] : boundary) {
    const Eigen::Vector2d pa = mesh.coords.col(a), pb = mesh.coords.col(b);
    const Eigen::Vector2d d = pb - pa;
    const double len2 = d.squaredNorm();
    if (len2 == 0.0) continue;
    for (const auto& other : boundary)
      for (int v : {other.first, other.second}) {
        if (v == a || v == b) continue;
        const Eigen::Vector2d pv = mesh.coords.col(v);
        const double t = (pv - pa).dot(d) / len2;
        if (t <= 1e-9 || t >= 1 - 1e-9) continue;
        if ((pa + t * d - pv).norm() <= tol) {
          out.push_back({DiagnosticKind::NonConforming, v,
                         format_message("node hangs on edge " + std::to_string(a) + "-" + std::to_string(b), v)});
        }
      }
  }

  for (const auto& [name, ids] : mesh.node_sets) {
    if (ids.empty()) out.push_back({DiagnosticKind::EmptyNodeSet, -1, "node set '" + name + "' is empty"});
    for (int n : ids)
      if (n < 0 || n >= N) {
        out.push_back({DiagnosticKind::DanglingNode, n, "node set '" + name + "' references a missing node"});
        break;
      }
  }
  return out;
}

Mesh elevate_order(const Mesh& mesh) {
  for (const auto& e : mesh.elements)
    if (e.kind != ElementKind::Tri3) throw ValidationError("elevate_order requires an all-TRI3 mesh");

  Mesh out;
  out.regions = mesh.regions;
  std::map<std::pair<int, int>, int> midside;
  std::vector<Eigen::Vector2d> extra;
  const int N = mesh.num_nodes();
  for (const auto& e : mesh.elements)
    for (const auto& edge : kCornerEdges) {
      const auto key = edge_key(e.nodes[edge[0]], e.nodes[edge[1]]);
      if (midside.emplace(key, N + int(extra.size())).second)
        extra.push_back(0.5 * (mesh.coords.col(key.first) + mesh.coords.col(key.second)));
    }

  out.coords.resize(2, N + int(extra.size()));
  out.coords.leftCols(N) = mesh.coords;
  for (std::size_t k = 0; k < extra.size(); ++k) out.coords.col(N + int(k)) = extra[k];

  out.elements.reserve(mesh.elements.size());
  for (const auto& e : mesh.elements) {
    Element q = e;
    q.kind = ElementKind::Tri6;
    for (int k = 0; k < 3; ++k)
      q.nodes[3 + k] = midside.at(edge_key(e.nodes[kCornerEdges[k][0]], e.nodes[kCornerEdges[k][1]]));
    out.elements.push_back(q);
  }

  for (const auto& [name, ids] : mesh.node_sets) {
    std::vector<int> set = ids;
    for (const auto& [edge, mid] : midside)
      if (std::binary_search(ids.begin(), ids.end(), edge.first) &&
          std::binary_search(ids.begin(), ids.end(), edge.second))
        set.push_back(mid);
    std::sort(set.begin(), set.end());
    out.node_sets[name] = std::move(set);
  }
  return out;
}

}  // namespace elmech
