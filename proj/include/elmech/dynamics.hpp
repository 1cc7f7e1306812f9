#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "elmech/static_solvers.hpp"

namespace elmech {

enum class ScheduleKind { Step, Ramp, Table };

/// Applied voltage as a function of time.
struct VoltageSchedule {
  ScheduleKind kind = ScheduleKind::Step;
  double amplitude = 0.0;
  double step_time = 0.0;                         // Step: V = amplitude for t > step_time
  double ramp_rate = 0.0;                         // Ramp: V = min(amplitude, rate t), V/s
  std::vector<std::pair<double, double>> table;   // Table: (t, V), linear in between

  double operator()(double t) const;
  static VoltageSchedule step(double amplitude) { return {ScheduleKind::Step, amplitude, 0.0, 0.0, {}}; }
};

struct NewmarkSettings {
  double beta = 0.25;
  double gamma = 0.5;
  double alpha = 0.0;            // HHT force averaging, in [-1/3, 0]; 0 is plain Newmark
  double dt = 0.0;               // required
  double duration = 0.0;         // required
  double tol_residual = 1e-8;
  double tol_increment = 1e-6;
  int max_iter = 25;
  int max_halvings = 4;          // dt halvings of one step before giving up
  int snapshot_stride = 0;       // 0: no snapshots
  double contact_fraction = 0.95;
  double gap = 0.0;              // required for contact detection
  double rayleigh_mass = 0.0;    // C = a M + b K(state0)
  double rayleigh_stiffness = 0.0;

  /// HHT-alpha parameters: dissipates unresolved high modes, second order in dt.
  void set_hht(double a) {
    alpha = a;
    beta = 0.25 * (1.0 - a) * (1.0 - a);
    gamma = 0.5 - a;
  }
};

struct EnergySample {
  double kinetic = 0.0;
  double strain = 0.0;     // W_m incl. springs
  double electric = 0.0;   // W_e
  double source = 0.0;     // work done by the voltage sources, sum phi dQ
  double total() const { return kinetic + strain + electric - source; }
};

struct Trajectory {
  double voltage = 0.0;                // schedule amplitude
  std::vector<double> t, d, v;         // probe displacement (toward substrate) and velocity
  std::vector<EnergySample> energy;
  std::vector<std::pair<double, State>> snapshots;
  bool contact = false;
  bool inversion = false;
  double contact_time = 0.0;
  bool truncated = false;              // stopped by nonconvergence
  std::string diagnostic;
  double final_time() const { return t.empty() ? 0.0 : t.back(); }
  double max_displacement() const;
  /// max |E_total - E_total(0)| / max(E_kin + W_m)
  double energy_drift() const;
};

/// Implicit Newmark with full Newton at each step on
/// M a + C v + (1 + alpha) r(z, V(t)) - alpha r_n = 0 (alpha = 0: plain Newmark).
/// Potentials and relative vacuum unknowns carry no mass: they are solved as
/// constraints at every step, and also at t = 0+ before the initial
/// acceleration is formed. `velocity0` (free vector, may be empty) sets the
/// initial velocity of the structural unknowns.
Trajectory newmark_integrate(const CoupledModel& model, const State& state0, const Eigen::VectorXd& velocity0,
                             const VoltageSchedule& schedule, const Probe& probe, const NewmarkSettings& settings);

enum class TrajectoryClass { Bounded, PullIn, Indeterminate };
std::string to_string(TrajectoryClass c);

struct ClassifyRules {
  double gap = 0.0;
  double contact_fraction = 0.95;
  double horizon = 0.0;   // seconds; horizon_periods * fundamental period
};

TrajectoryClass classify_trajectory(const Trajectory& traj, const ClassifyRules& rules);

struct DynamicSearchSettings {
  NewmarkSettings newmark;
  ClassifyRules rules;
  double tol_V = 0.5;
  int prelude_samples = 0;      // evenly spaced classifications inside the bracket
};

struct DynamicPullInResult {
  bool ok = false;
  double V_dpi = 0.0;
  double V_stable = 0.0;
  double V_unstable = 0.0;
  std::vector<std::pair<double, TrajectoryClass>> samples;  // sorted by voltage
  std::vector<Trajectory> trajectories;                     // same order as tested
  std::string diagnostic;
};

/// Bisection on the step amplitude between a BOUNDED V_low and a PULL_IN
/// V_high. Non-monotone classifications are reported without a guess.
DynamicPullInResult dynamic_pullin_search(const CoupledModel& model, const State& state0, const Probe& probe,
                                          double V_low, double V_high, const DynamicSearchSettings& settings);

struct ModalResult {
  Eigen::VectorXd eigenvalues;     // lambda = omega^2, ascending
  Eigen::VectorXd frequencies_hz;  // sqrt(lambda) / 2 pi, 0 where unstable
  std::vector<bool> unstable;      // lambda < 0
  Eigen::MatrixXd shapes;          // free-vector mode shapes, mass-normalized
};

/// Coupled modes about an equilibrium: the massless unknowns (potentials and
/// relative vacuum motion) are condensed statically, then the dense
/// generalized problem K_red x = lambda M x is solved on the structure.
ModalResult modal_analysis(const CoupledModel& model, const State& equilibrium, int n_modes);

/// Fundamental period 2 pi / omega_1 about `state`.
double fundamental_period(const CoupledModel& model, const State& state);

/// Columns V, t, d_probe, v_probe; blocks separated by two blank lines.
/// Pull-in trajectories end at the contact time.
void export_phase_diagram(std::ostream& os, const std::vector<Trajectory>& trajs, const std::string& header = {});

}  // namespace elmech
