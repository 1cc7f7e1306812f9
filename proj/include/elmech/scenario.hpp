#pragma once

#include "elmech/config.hpp"

namespace elmech {

/// Mesh and boundary conditions of the configured model.
///  beam: clamped-clamped beam over three substrate electrodes,
///        phi = c_k V on electrode k, beam bottom grounded.
///  parallel_plate: the same with one electrode spanning the gap.
///  rigid_plate: the plate slides vertically (x fixed on the plate and the gap
///        side walls) on a ground spring of total stiffness bcs.spring_stiffness
///        attached to its top face, one full-length electrode.
struct ScenarioSetup {
  Mesh mesh;
  BoundaryConditions bcs;
};

ScenarioSetup build_setup(const RunConfig& cfg);
CoupledModel build_model(const RunConfig& cfg);
/// Beam-bottom node nearest static.probe_x (mid-span when negative).
Probe build_probe(const RunConfig& cfg, const Mesh& mesh);

}  // namespace elmech
