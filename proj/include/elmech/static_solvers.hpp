#pragma once

#include <string>
#include <vector>

#include "elmech/assembly.hpp"

namespace elmech {

/// Scalar observable: displacement of one node along a unit direction.
struct Probe {
  int node = 0;
  Eigen::Vector2d direction{0.0, -1.0};
  double value(const State& s) const { return direction.dot(s.u.segment<2>(2 * node)); }
};

/// Node of `set` closest to x, displacement measured toward -y (the substrate).
Probe make_probe(const Mesh& mesh, const std::string& set, double x);
/// Beam-bottom node nearest to mid-span.
Probe default_probe(const Mesh& mesh);

struct SolverSettings {
  double tol_residual = 1e-8;   // relative to the force and charge scales
  double tol_increment = 1e-6;  // relative size of the step preceding acceptance
  int max_iter = 25;
  int max_halvings = 6;         // step halving after element inversion
  double gap = 0.0;             // length scale of the continuation metric; 0: from mesh
  double initial_dV = 0.0;      // 0: lumped pre-estimate / 20
  double radius_min_factor = 1e-4;
  double radius_max_factor = 4.0;
  int target_iterations = 4;    // corrector iterations aimed for by radius adaptation
  int post_fold_points = 12;    // branch points traced past the fold
  int fold_refinements = 3;     // retreats with a quartered radius once the fold is straddled
  int max_steps = 400;
  int staggered_max_outer = 100;
  double staggered_tol = 1e-9;  // relative displacement increment of the outer loop
};

struct NewtonReport {
  State state;
  bool converged = false;
  int iterations = 0;                // residual evaluations
  std::vector<double> residuals;     // max of relative displacement/charge residuals
  std::vector<double> ratios;        // |r_{k+1}| / |r_k|^2 in relative units
  int negative_pivots = -1;          // inertia of the last factorized tangent
  std::string message;
};

/// Solves the (linear) potential block on the frozen geometry of `state`.
State relax_potentials(const CoupledModel& model, const State& state);

/// Monolithic Newton-Raphson on the coupled residual at a fixed applied
/// voltage, started from state0 with relaxed potentials. Element inversion
/// halves the step; nonconvergence is reported.
NewtonReport newton_solve(const CoupledModel& model, double voltage, const State& state0,
                          const SolverSettings& settings = {});

/// newton_solve at `voltage`; on failure the voltage increment from
/// state0.voltage is split in halves, up to `max_splits` levels deep.
NewtonReport incremental_solve(const CoupledModel& model, double voltage, const State& state0,
                               const SolverSettings& settings = {}, int max_splits = 8);

enum class StabilityKind { Stable, Unstable, AtFold };

struct StabilityReport {
  int negative = 0;          // negative eigenvalues of the displacement Schur complement
  StabilityKind kind = StabilityKind::Stable;
  double pivot_ratio = 0.0;
};

/// Inertia of K_uu - K_up K_pp^-1 K_pu from the factorization of the full
/// tangent: neg(S) = neg(K) - n_phi since K_pp is negative definite.
StabilityReport detect_stability(const CoupledModel& model, const State& state, double fold_pivot_ratio = 1e-12);
int schur_negative_count(const CoupledModel& model, int negative_pivots);

struct ContinuationPoint {
  double V = 0.0;
  double d_probe = 0.0;
  double s = 0.0;             // accumulated arc length (scaled metric)
  double dV_ds = 0.0;
  int inertia = 0;            // Schur-complement negative count
  bool at_fold = false;
  double residual_norm = 0.0;
  int iterations = 0;
  State state;
};

enum class FoldDetection { None, FoldSignChange, SingularTangent };

struct PullInResult {
  bool found = false;
  double V_pi = 0.0;
  double d_pi = 0.0;
  double s_pi = 0.0;
  double interpolation_error = 0.0;  // |interpolated - sampled| voltage at the fold
  FoldDetection detection = FoldDetection::None;
  int post_fold_points = 0;
  std::vector<ContinuationPoint> branch;
  std::string diagnostic;            // empty on a complete trace
};

std::string to_string(FoldDetection d);

/// Riks-Crisfield continuation in (free unknowns, V) from an equilibrium at
/// V = state0.voltage, with a spherical constraint in the scaled metric
/// |du|/gap, |dphi|/V_ref, |dV|/V_ref (root-mean-square within each class).
PullInResult riks_trace(const CoupledModel& model, const State& state0, const Probe& probe,
                        const SolverSettings& settings = {});

/// V_pi estimate of a parallel-plate equivalent from one small-voltage solve:
/// V_pi ~ V sqrt(4 gap / (27 x)) with x the probe displacement at V.
double lumped_pullin_estimate(const CoupledModel& model, const State& state0, const Probe& probe,
                              double gap, const SolverSettings& settings = {});

/// Equilibrium on the stable branch at `voltage`, started from the last
/// pre-fold branch point below it.
NewtonReport solve_on_branch(const CoupledModel& model, const PullInResult& trace, double voltage,
                             const SolverSettings& settings = {});

struct StaggeredReport {
  State state;
  bool converged = false;
  bool diverged = false;
  int outer_iterations = 0;
  std::vector<double> increments;    // relative displacement increment per outer iteration
  std::string message;
};

/// Block Gauss-Seidel: electric solve on the current geometry, then a
/// mechanical Newton solve under the frozen electrostatic loads, repeated
/// until the displacement increment falls below settings.staggered_tol.
StaggeredReport staggered_solve(const CoupledModel& model, double voltage, const State& state0,
                                const SolverSettings& settings = {});

struct StaggeredSweep {
  std::vector<double> converged_voltages;
  std::vector<double> converged_probe;
  double last_converged = 0.0;
  double first_failure = 0.0;   // bisection-refined breakdown voltage
  bool failed = false;
};

/// Upward sweep in steps of dV from 0 (each step warm-started), then
/// bisection between the last converged and the first failing voltage.
StaggeredSweep staggered_sweep(const CoupledModel& model, const Probe& probe, double dV, double V_max,
                               double refine_tol, const SolverSettings& settings = {});

}  // namespace elmech
