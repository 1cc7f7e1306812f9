#include "elmech/scenario.hpp"

#include <algorithm>

namespace elmech {

ScenarioSetup build_setup(const RunConfig& cfg) {
  ScenarioSetup s;
  s.mesh = generate_beam_mesh(cfg.geometry.beam);
  auto& bcs = s.bcs;
  const auto& coeff = cfg.bcs.electrode_coefficients;
  for (std::size_t k = 0; k < coeff.size(); ++k) bcs.electrodes.push_back({"electrode_" + std::to_string(k + 1), coeff[k]});
  bcs.conductors = {"beam_bottom"};
  bcs.clamps.push_back({"substrate"});

  if (cfg.geometry.model == ModelKind::RigidPlate) {
    auto& plate = s.mesh.node_sets["plate"];
    for (const auto& e : s.mesh.elements)
      if (has_mechanics(s.mesh.region_of(e).physics))
        for (int n : e.connectivity()) plate.push_back(n);
    std::sort(plate.begin(), plate.end());
    plate.erase(std::unique(plate.begin(), plate.end()), plate.end());
    bcs.clamps.push_back({"plate", true, false});
    bcs.clamps.push_back({"gap_left", true, false});
    bcs.clamps.push_back({"gap_right", true, false});
    bcs.springs.push_back({"beam_top", 1, cfg.bcs.spring_stiffness});
  } else {
    bcs.clamps.push_back({"clamp_left"});
    bcs.clamps.push_back({"clamp_right"});
  }
  return s;
}

CoupledModel build_model(const RunConfig& cfg) {
  auto s = build_setup(cfg);
  return CoupledModel(std::move(s.mesh), cfg.materials, std::move(s.bcs), cfg.bcs.morph);
}

Probe build_probe(const RunConfig& cfg, const Mesh& mesh) {
  return cfg.statics.probe_x < 0 ? default_probe(mesh) : make_probe(mesh, "beam_bottom", cfg.statics.probe_x);
}

}  // namespace elmech
