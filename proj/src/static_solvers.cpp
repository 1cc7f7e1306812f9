#include "elmech/static_solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "elmech/errors.hpp"
#include "elmech/linear_solver.hpp"

namespace elmech {

Probe make_probe(const Mesh& mesh, const std::string& set, double x) {
  const auto& nodes = mesh.node_set(set);
  if (nodes.empty()) throw ValidationError("probe set '" + set + "' is empty");
  Probe p;
  double best = std::numeric_limits<double>::infinity();
  for (int n : nodes) {
    const double d = std::abs(mesh.coords(0, n) - x);
    if (d < best - 1e-15) {
      best = d;
      p.node = n;
    }
  }
  return p;
}

Probe default_probe(const Mesh& mesh) {
  const double mid = 0.5 * (mesh.coords.row(0).minCoeff() + mesh.coords.row(0).maxCoeff());
  return make_probe(mesh, "beam_bottom", mid);
}

namespace {

double relative_residual(const CoupledModel& model, const TangentSystem& sys) {
  const auto n = model.residual_norms(sys.r);
  const double ru = sys.force_scale > 0 ? n.displacement / sys.force_scale : n.displacement;
  const double rp = sys.charge_scale > 0 ? n.potential / sys.charge_scale : n.potential;
  return std::max(ru, rp);
}

// Largest of the relative displacement and potential parts of a step.
double relative_increment(const CoupledModel& model, const Eigen::VectorXd& dz, const Eigen::VectorXd& z) {
  double d[2] = {0, 0}, v[2] = {0, 0};
  for (int i = 0; i < int(z.size()); ++i) {
    const int c = model.row_class()[i];
    d[c] += dz(i) * dz(i);
    v[c] += z(i) * z(i);
  }
  double rel = 0.0;
  for (int c = 0; c < 2; ++c)
    if (d[c] > 0) rel = std::max(rel, std::sqrt(d[c] / std::max(v[c], 1e-300)));
  return rel;
}

}  // namespace

State relax_potentials(const CoupledModel& model, const State& state) {
  const int n = model.num_free();
  std::vector<int> index, map(n, -1);
  for (int i = 0; i < n; ++i)
    if (model.row_class()[i] == 1) {
      map[i] = int(index.size());
      index.push_back(i);
    }
  if (index.empty()) return state;
  Eigen::VectorXd z = model.free(state);
  const auto sys = model.assemble(state);
  std::vector<Eigen::Triplet<double>> trip;
  for (int k = 0; k < sys.K.outerSize(); ++k) {
    if (map[k] < 0) continue;
    for (SparseMatrix::InnerIterator it(sys.K, k); it; ++it)
      if (map[it.row()] >= 0) trip.emplace_back(map[it.row()], map[k], it.value());
  }
  SparseMatrix Kpp(int(index.size()), int(index.size()));
  Kpp.setFromTriplets(trip.begin(), trip.end());
  const auto lin = linear_solve(Kpp, -sys.r(index));
  for (std::size_t k = 0; k < index.size(); ++k) z(index[k]) += lin.x(k);
  return model.state(z, state.voltage);
}

NewtonReport newton_solve(const CoupledModel& model, double voltage, const State& state0,
                          const SolverSettings& settings) {
  NewtonReport rep;
  Eigen::VectorXd z;
  TangentSystem sys;
  try {
    z = model.free(relax_potentials(model, with_voltage(model.dofs(), state0, voltage)));
    sys = model.assemble(model.state(z, voltage));
  } catch (const ElementInversion& e) {
    rep.state = model.state(z, voltage);
    rep.message = std::string("initial state inverted: ") + e.what();
    return rep;
  }

  double last_step = 0.0;
  for (int k = 0;; ++k) {
    const double rel = relative_residual(model, sys);
    rep.iterations = k + 1;
    if (!rep.residuals.empty()) {
      const double prev = rep.residuals.back();
      rep.ratios.push_back(prev > 0 ? rel / (prev * prev) : 0.0);
    }
    rep.residuals.push_back(rel);
    if (!std::isfinite(rel)) {
      rep.message = "residual is not finite";
      break;
    }
    // Accept once the residual is small and the step that led here was
    // already small, so one more quadratic step would change nothing.
    if (rel <= settings.tol_residual && (k == 0 ? rel <= 1e-3 * settings.tol_residual : last_step <= settings.tol_increment)) {
      rep.converged = true;
      break;
    }
    if (k >= settings.max_iter) {
      char buf[128];
      std::snprintf(buf, sizeof buf, "no convergence after %d iterations, relative residual %.3e", k, rel);
      rep.message = buf;
      break;
    }

    LinearSolveReport lin;
    try {
      SymmetricSolver solver(sys.K);
      lin = solver.solve(-sys.r);
    } catch (const SingularMatrixError& e) {
      rep.message = std::string("singular tangent: ") + e.what();
      break;
    }
    rep.negative_pivots = lin.negative_pivots;

    double alpha = 1.0;
    bool stepped = false;
    last_step = relative_increment(model, lin.x, z + lin.x);
    for (int h = 0; h <= settings.max_halvings; ++h, alpha *= 0.5) {
      try {
        const Eigen::VectorXd trial = z + alpha * lin.x;
        sys = model.assemble(model.state(trial, voltage));
        z = trial;
        stepped = true;
        break;
      } catch (const ElementInversion&) {
      }
    }
    if (!stepped) {
      rep.message = "element inversion persisted after step halving";
      break;
    }
  }
  rep.state = model.state(z, voltage);
  return rep;
}

NewtonReport incremental_solve(const CoupledModel& model, double voltage, const State& state0,
                               const SolverSettings& settings, int max_splits) {
  auto rep = newton_solve(model, voltage, state0, settings);
  if (rep.converged || max_splits <= 0) return rep;
  const double mid = 0.5 * (state0.voltage + voltage);
  auto half = incremental_solve(model, mid, state0, settings, max_splits - 1);
  if (!half.converged) return half;
  return incremental_solve(model, voltage, half.state, settings, max_splits - 1);
}

int schur_negative_count(const CoupledModel& model, int negative_pivots) {
  return negative_pivots - model.dofs().count(SlotKind::Potential);
}

StabilityReport detect_stability(const CoupledModel& model, const State& state, double fold_pivot_ratio) {
  StabilityReport rep;
  const auto sys = model.assemble(state);
  try {
    SymmetricSolver solver(sys.K);
    rep.pivot_ratio = solver.pivot_ratio();
    rep.negative = std::max(0, schur_negative_count(model, solver.negative_pivots()));
    if (rep.pivot_ratio < fold_pivot_ratio) rep.kind = StabilityKind::AtFold;
    else rep.kind = rep.negative > 0 ? StabilityKind::Unstable : StabilityKind::Stable;
  } catch (const SingularMatrixError&) {
    rep.kind = StabilityKind::AtFold;
  }
  return rep;
}

double lumped_pullin_estimate(const CoupledModel& model, const State& state0, const Probe& probe,
                              double gap, const SolverSettings& settings) {
  constexpr double kTestVoltage = 1.0;
  const auto rep = newton_solve(model, kTestVoltage, state0, settings);
  const double x = probe.value(rep.state) - probe.value(state0);
  if (!rep.converged || !(x > 0)) return 0.0;
  return kTestVoltage * std::sqrt(4.0 * gap / (27.0 * x));
}

NewtonReport solve_on_branch(const CoupledModel& model, const PullInResult& trace, double voltage,
                             const SolverSettings& settings) {
  if (trace.branch.empty()) throw std::invalid_argument("solve_on_branch: empty branch");
  const ContinuationPoint* start = &trace.branch.front();
  for (const auto& p : trace.branch) {
    if (p.dV_ds <= 0 && &p != &trace.branch.front()) break;
    if (p.V <= voltage) start = &p;
  }
  return newton_solve(model, voltage, start->state, settings);
}

std::string to_string(FoldDetection d) {
  switch (d) {
    case FoldDetection::FoldSignChange: return "FOLD_SIGN_CHANGE";
    case FoldDetection::SingularTangent: return "SINGULAR_TANGENT";
    case FoldDetection::None: break;
  }
  return "NONE";
}

}  // namespace elmech
