#include <algorithm>
#include <cmath>
#include <cstdio>

#include "elmech/errors.hpp"
#include "elmech/linear_solver.hpp"
#include "elmech/static_solvers.hpp"

namespace elmech {
namespace {

SparseMatrix submatrix(const SparseMatrix& K, const std::vector<int>& index, const std::vector<int>& map) {
  std::vector<Eigen::Triplet<double>> trip;
  for (int k = 0; k < K.outerSize(); ++k) {
    if (map[k] < 0) continue;
    for (SparseMatrix::InnerIterator it(K, k); it; ++it)
      if (map[it.row()] >= 0) trip.emplace_back(map[it.row()], map[k], it.value());
  }
  SparseMatrix S(int(index.size()), int(index.size()));
  S.setFromTriplets(trip.begin(), trip.end());
  return S;
}

struct Partition {
  std::vector<int> u, p;          // free indices of each class
  std::vector<int> u_map, p_map;  // free index -> position in class, or -1
};

Partition partition(const CoupledModel& model) {
  Partition part;
  const int n = model.num_free();
  part.u_map.assign(n, -1);
  part.p_map.assign(n, -1);
  for (int i = 0; i < n; ++i) {
    if (model.row_class()[i] == 0) {
      part.u_map[i] = int(part.u.size());
      part.u.push_back(i);
    } else {
      part.p_map[i] = int(part.p.size());
      part.p.push_back(i);
    }
  }
  return part;
}

// Mechanical Newton under fixed electrostatic loads on the displacement rows.
bool mechanical_stage(const CoupledModel& model, const Partition& part, Eigen::VectorXd& z, double voltage,
                      const Eigen::VectorXd& frozen, const SolverSettings& settings) {
  const int nu = int(part.u.size());
  for (int it = 0; it <= settings.max_iter; ++it) {
    const auto sys = model.assemble(model.state(z, voltage), true, CoupledModel::Parts::Mechanical);
    Eigen::VectorXd g(nu);
    for (int k = 0; k < nu; ++k) g(k) = sys.r_mech(part.u[k]) + frozen(k);
    const double scale = sys.r_mech(part.u).norm() + frozen.norm();
    if (g.norm() <= settings.tol_residual * 1e-2 * scale || scale == 0.0) return true;
    if (it == settings.max_iter) return false;
    const auto lin = linear_solve(submatrix(sys.K, part.u, part.u_map), -g);
    for (int k = 0; k < nu; ++k) z(part.u[k]) += lin.x(k);
    if (lin.x.norm() <= 1e-14 * std::max(z(part.u).norm(), 1e-300)) return true;
  }
  return false;
}

}  // namespace

StaggeredReport staggered_solve(const CoupledModel& model, double voltage, const State& state0,
                                const SolverSettings& settings) {
  StaggeredReport rep;
  const Partition part = partition(model);
  Eigen::VectorXd z = model.free(with_voltage(model.dofs(), state0, voltage));
  int growing = 0;

  try {
    for (int outer = 1; outer <= settings.staggered_max_outer; ++outer) {
      rep.outer_iterations = outer;
      // Electric stage: linear in phi on the frozen geometry.
      const auto sys = model.assemble(model.state(z, voltage));
      if (!part.p.empty()) {
        const auto lin = linear_solve(submatrix(sys.K, part.p, part.p_map), -sys.r(part.p));
        for (std::size_t k = 0; k < part.p.size(); ++k) z(part.p[k]) += lin.x(k);
      }
      // Mechanical stage under the field of the new potentials.
      const auto loaded = model.assemble(model.state(z, voltage), false);
      const Eigen::VectorXd frozen = (loaded.r - loaded.r_mech)(part.u);
      const Eigen::VectorXd before = z(part.u);
      if (!mechanical_stage(model, part, z, voltage, frozen, settings)) {
        rep.diverged = true;
        rep.message = "mechanical stage did not converge";
        break;
      }
      const double du = (z(part.u) - before).norm();
      const double ref = std::max(z(part.u).norm(), 1e-300);
      const double rel = du == 0.0 ? 0.0 : du / ref;
      if (!rep.increments.empty() && rel > rep.increments.back()) ++growing;
      else growing = 0;
      rep.increments.push_back(rel);
      if (rel <= settings.staggered_tol) {
        rep.converged = true;
        break;
      }
      if (growing >= 5 || !std::isfinite(rel)) {
        rep.diverged = true;
        rep.message = "displacement increments grow: staggered iteration diverges";
        break;
      }
    }
  } catch (const ElementInversion& e) {
    rep.diverged = true;
    rep.message = std::string("staggered iteration collapsed the gap: ") + e.what();
  } catch (const SingularMatrixError& e) {
    rep.diverged = true;
    rep.message = std::string("singular stage matrix: ") + e.what();
  }
  if (!rep.converged && rep.message.empty()) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "no convergence in %d outer iterations (last increment %.3e)",
                  rep.outer_iterations, rep.increments.empty() ? 0.0 : rep.increments.back());
    rep.message = buf;
  }
  rep.state = model.state(z, voltage);
  return rep;
}

StaggeredSweep staggered_sweep(const CoupledModel& model, const Probe& probe, double dV, double V_max,
                               double refine_tol, const SolverSettings& settings) {
  if (!(dV > 0)) throw std::invalid_argument("staggered_sweep: dV must be positive");
  StaggeredSweep sweep;
  State last = model.zero_state(0.0);
  double V_fail = 0.0;
  for (int k = 1; k * dV <= V_max + 1e-12 * V_max; ++k) {
    const double V = k * dV;
    const auto rep = staggered_solve(model, V, last, settings);
    if (!rep.converged) {
      V_fail = V;
      sweep.failed = true;
      break;
    }
    last = rep.state;
    sweep.last_converged = V;
    sweep.converged_voltages.push_back(V);
    sweep.converged_probe.push_back(probe.value(rep.state));
  }
  if (!sweep.failed) return sweep;

  double lo = sweep.last_converged, hi = V_fail;
  while (hi - lo > refine_tol) {
    const double mid = 0.5 * (lo + hi);
    const auto rep = staggered_solve(model, mid, last, settings);
    if (rep.converged) {
      lo = mid;
      last = rep.state;
    } else {
      hi = mid;
    }
  }
  sweep.last_converged = lo;
  sweep.first_failure = hi;
  return sweep;
}

}  // namespace elmech
