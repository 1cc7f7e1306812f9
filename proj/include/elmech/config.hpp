#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "elmech/assembly.hpp"
#include "elmech/dynamics.hpp"
#include "elmech/mesh.hpp"

namespace elmech {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ModelKind { Beam, ParallelPlate, RigidPlate };

struct GeometryConfig {
  ModelKind model = ModelKind::Beam;
  BeamGeometry beam;
};

struct BcsConfig {
  std::vector<double> electrode_coefficients{0.0, 1.0, 0.0};
  double spring_stiffness = 0.0;   // rigid_plate suspension, N/m per metre of depth
  MorphSettings morph;
};

struct StaticConfig {
  double voltage = 100.0;
  SolverSettings solver;
  double probe_x = -1.0;           // m; negative: mid-span
  double staggered_dV = 5.0;       // sweep step of the staggered solver
  double staggered_refine = 0.05;  // bisection tolerance of the staggered breakdown
};

struct DynamicConfig {
  VoltageSchedule schedule;        // amplitude doubles as the transient voltage
  NewmarkSettings newmark;         // dt = 0: period / steps_per_period
  int steps_per_period = 200;
  double duration_periods = 10.0;
  double horizon_periods = 10.0;
  double v_low = 0.0;
  double v_high = 0.0;
  double tol_V = 0.5;
  int prelude_samples = 0;
};

struct ModalConfig {
  int n_modes = 6;
  double voltage = 0.0;
};

struct OutputConfig {
  std::string directory = ".";
  std::string prefix;              // empty: config name
  bool vtk = true;
};

struct RunConfig {
  std::string name = "run";
  GeometryConfig geometry;
  Materials materials;
  BcsConfig bcs;
  StaticConfig statics;
  DynamicConfig dynamic;
  ModalConfig modal;
  OutputConfig output;
  /// Every key with its resolved SI value, defaults included ("section.key" -> text).
  std::map<std::string, std::string> resolved;

  /// FNV-1a 64 over the resolved keys, as 16 hex digits.
  std::string hash() const;
  /// One "section.key = value" line per resolved key.
  std::string dump() const;
};

/// Parses INI text with sections [geometry] [material.<name>] [bcs] [static]
/// [dynamic] [modal] [output]. Values may carry a unit suffix ("300 um",
/// "169 GPa"); without one they are SI. `overrides` are "section.key=value"
/// strings applied on top of the text. Unknown sections or keys, unit
/// mismatches, missing required keys and invalid values raise ConfigError.
RunConfig parse_config(const std::string& text, const std::vector<std::string>& overrides = {},
                       const std::string& name = "run");
/// Reads `path`, or the shipped config of that name when `path` has no
/// directory part and no such file exists.
RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides = {});

/// Value of a quantity with optional unit; throws ConfigError on an unknown
/// or mismatched unit. `dimension` is one of: length, voltage, pressure,
/// density, time, stiffness, permittivity, rate, none.
double parse_quantity(const std::string& text, const std::string& dimension);

std::uint64_t fnv1a64(const std::string& bytes);

}  // namespace elmech
