#pragma once

#include <vector>

#include "elmech/dynamics.hpp"

namespace elmech {

/// One-degree-of-freedom parallel-plate actuator: m x'' + k x = eps A V^2 / (2 (g - x)^2).
struct LumpedPlate {
  double k = 1.0;      // N/m
  double m = 1e-9;     // kg
  double g = 1e-6;     // m
  double A = 1e-8;     // m^2
  double eps = kVacuumPermittivity;

  bool valid() const { return k > 0 && m > 0 && g > 0 && A > 0 && eps > 0; }
  double period() const;
  /// Electrostatic force at displacement x and voltage V.
  double force(double x, double V) const { return eps * A * V * V / (2.0 * (g - x) * (g - x)); }
};

struct LumpedFold {
  double V_pi = 0.0;
  double x_pi = 0.0;
};

/// V_pi = sqrt(8 k g^3 / (27 eps A)), x_pi = g / 3.
LumpedFold lumped_static_pullin(const LumpedPlate& p);
/// Maximum of V(x) = sqrt(2 k x (g - x)^2 / (eps A)) by grid search, refined by
/// bisection on the sign of a central difference of V^2.
LumpedFold lumped_static_pullin_search(const LumpedPlate& p, int grid = 2000);
/// V_dpi = sqrt(k g^3 / (4 eps A)).
double lumped_dynamic_pullin(const LumpedPlate& p);
/// Stable equilibrium x in [0, g/3] at voltage V (V <= V_pi).
double lumped_static_displacement(const LumpedPlate& p, double V);

struct LumpedTrajectory {
  std::vector<double> t, x, v, energy;  // energy: m v^2/2 + k x^2/2 - eps A V^2 / (2 (g - x))
  TrajectoryClass kind = TrajectoryClass::Indeterminate;
  double contact_time = 0.0;
  double max_x = 0.0;
  double max_energy_error = 0.0;        // max |E - E0| / |E0| over the samples
};

/// Classical RK4 from rest at x = 0 under a voltage step V. PULL_IN once
/// x reaches contact_fraction g (time interpolated linearly), BOUNDED if the
/// horizon T is reached first.
LumpedTrajectory lumped_integrate(const LumpedPlate& p, double V, double dt, double T,
                                  double contact_fraction = 0.95, int sample_stride = 1);

struct LumpedBisection {
  double V_dpi = 0.0;
  double V_stable = 0.0;
  double V_unstable = 0.0;
  int runs = 0;
};

/// Step-voltage bisection on lumped_integrate between 0.5 V_pi and V_pi.
LumpedBisection lumped_dynamic_pullin_ode(const LumpedPlate& p, double horizon_periods = 10.0,
                                          int steps_per_period = 1000, double rel_tol = 1e-7);

}  // namespace elmech
