#pragma once

#include <array>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "elmech/mesh_types.hpp"
#include "elmech/shape.hpp"

namespace elmech {

struct RegionTag {
  std::string name;
  Physics physics = Physics::Mechanical;
  std::string material;
};

struct Element {
  int id = 0;
  ElementKind kind = ElementKind::Tri3;
  std::array<int, 6> nodes{};  // first node_count(kind) entries are used
  int region = 0;              // index into Mesh::regions

  std::span<const int> connectivity() const { return {nodes.data(), std::size_t(node_count(kind))}; }
};

/// 2D triangulation covering the structure and the vacuum gap. Node ids are
/// column indices of `coords`; element ids are positions in `elements`.
/// Values are treated as immutable once built.
struct Mesh {
  Eigen::Matrix2Xd coords;
  std::vector<Element> elements;
  std::vector<RegionTag> regions;
  std::map<std::string, std::vector<int>> node_sets;  // sorted, unique ids

  int num_nodes() const { return int(coords.cols()); }
  int num_elements() const { return int(elements.size()); }
  const RegionTag& region_of(const Element& e) const { return regions[e.region]; }
  int find_region(std::string_view name) const;
  const std::vector<int>& node_set(const std::string& name) const;

  NodeCoords<double> element_coords(const Element& e) const;
  /// Largest element edge length.
  double characteristic_length() const;
};

double element_area(const Mesh& mesh, const Element& e);
double total_area(const Mesh& mesh);

struct BeamGeometry {
  double length = 300e-6;
  double thickness = 0.5e-6;
  double gap = 6e-6;
  double electrode_length = 60e-6;
  std::vector<double> electrode_centers;  // x of each electrode midpoint
  int nx = 60;
  int ny_beam = 2;
  int ny_gap = 4;
  int order = 1;
  std::string beam_material = "silicon";
  std::string gap_material = "vacuum";
};

/// Structured mesh: the beam (region "beam", MECHANICAL) on top of the air
/// gap (region "gap", ELECTRIC). Node sets: clamp_left, clamp_right (beam end
/// faces), beam_bottom, beam_top, substrate, gap_left, gap_right and
/// electrode_1..electrode_k (substrate nodes under each electrode). Diagonals
/// are mirrored about x = L/2 so symmetric loads give symmetric meshes.
/// Throws GeometryError on invalid input.
Mesh generate_beam_mesh(const BeamGeometry& geometry);

enum class DiagnosticKind {
  BadCoordinate,
  DanglingNode,
  NegativeJacobian,
  MidsideOffset,
  OrphanNode,
  NonConforming,
  BadRegion,
  EmptyNodeSet,
};

struct Diagnostic {
  DiagnosticKind kind;
  int id;  // element or node id, -1 when not applicable
  std::string message;
};

/// Every violated Mesh/Element invariant; empty means admissible.
std::vector<Diagnostic> validate(const Mesh& mesh);

/// TRI3 -> TRI6 with one mid-side node per edge. A mid-side node joins every
/// node set that contains both edge end points. Throws ValidationError on
/// non-TRI3 input.
Mesh elevate_order(const Mesh& mesh);

/// Parses the line-oriented mesh format (NODES / ELEMENTS / NODESET / REGION).
/// Clockwise elements are reordered; a note is appended to `warnings`.
/// Throws ParseError (with line number) or ValidationError.
Mesh load_mesh(std::string_view text, std::vector<std::string>* warnings = nullptr);
std::string write_mesh(const Mesh& mesh);

}  // namespace elmech
