#include "elmech/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include <Eigen/SparseCholesky>

#include "elmech/errors.hpp"
#include "elmech/linear_solver.hpp"

namespace elmech {

double VoltageSchedule::operator()(double t) const {
  switch (kind) {
    case ScheduleKind::Step:
      return t > step_time || (step_time == 0.0 && t >= 0.0) ? amplitude : 0.0;
    case ScheduleKind::Ramp:
      return std::min(amplitude, ramp_rate * std::max(t, 0.0));
    case ScheduleKind::Table: {
      if (table.empty()) return 0.0;
      if (t <= table.front().first) return table.front().second;
      for (std::size_t k = 1; k < table.size(); ++k)
        if (t <= table[k].first) {
          const auto [t0, v0] = table[k - 1];
          const auto [t1, v1] = table[k];
          return t1 > t0 ? v0 + (v1 - v0) * (t - t0) / (t1 - t0) : v1;
        }
      return table.back().second;
    }
  }
  return 0.0;
}

double Trajectory::max_displacement() const {
  return d.empty() ? 0.0 : *std::max_element(d.begin(), d.end());
}

double Trajectory::energy_drift() const {
  if (energy.empty()) return 0.0;
  const double e0 = energy.front().total();
  double drift = 0.0, scale = 0.0;
  for (const auto& e : energy) {
    drift = std::max(drift, std::abs(e.total() - e0));
    scale = std::max(scale, e.kinetic + e.strain);
  }
  return scale > 0 ? drift / scale : drift;
}

std::string to_string(TrajectoryClass c) {
  switch (c) {
    case TrajectoryClass::Bounded: return "BOUNDED";
    case TrajectoryClass::PullIn: return "PULL_IN";
    case TrajectoryClass::Indeterminate: break;
  }
  return "INDETERMINATE";
}

namespace {

constexpr double kMaxContraction = 0.25;  // reused factorization must shrink the residual this much per iteration

struct Rows {
  std::vector<int> massive, massless;
  std::vector<bool> has_mass;
};

Rows split_rows(const CoupledModel& model) {
  Rows rows;
  const Eigen::VectorXd diag = model.mass().diagonal();
  rows.has_mass.resize(model.num_free());
  for (int i = 0; i < model.num_free(); ++i) {
    rows.has_mass[i] = diag(i) > 0;
    (rows.has_mass[i] ? rows.massive : rows.massless).push_back(i);
  }
  return rows;
}

SparseMatrix restrict_matrix(const SparseMatrix& K, const std::vector<int>& index, int n) {
  std::vector<int> map(n, -1);
  for (std::size_t k = 0; k < index.size(); ++k) map[index[k]] = int(k);
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

double rows_norm(const Eigen::VectorXd& r, const std::vector<int>& rows, const std::vector<int>& cls, int c) {
  double s = 0.0;
  for (int i : rows)
    if (cls[i] == c) s += r(i) * r(i);
  return std::sqrt(s);
}

// Newton on the massless rows with the massive unknowns held fixed.
bool relax_massless(const CoupledModel& model, const Rows& rows, Eigen::VectorXd& z, double V, double tol) {
  if (rows.massless.empty()) return true;
  const auto& cls = model.row_class();
  double last = 1.0;
  for (int it = 0; it < 30; ++it) {
    const auto sys = model.assemble(model.state(z, V));
    const double ru = rows_norm(sys.r, rows.massless, cls, 0) / std::max(sys.force_scale, 1e-300);
    const double rp = rows_norm(sys.r, rows.massless, cls, 1) / std::max(sys.charge_scale, 1e-300);
    const double rel = std::max(ru, rp);
    if (rel <= tol && (it > 0 ? last <= 1e-6 : rel <= 1e-3 * tol)) return true;
    const auto lin = linear_solve(restrict_matrix(sys.K, rows.massless, model.num_free()), -sys.r(rows.massless));
    double dn = 0.0, zn = 0.0;
    for (std::size_t k = 0; k < rows.massless.size(); ++k) {
      z(rows.massless[k]) += lin.x(k);
      dn += lin.x(k) * lin.x(k);
      zn += z(rows.massless[k]) * z(rows.massless[k]);
    }
    last = zn > 0 ? std::sqrt(dn / zn) : 0.0;
  }
  return false;
}

}  // namespace

Trajectory newmark_integrate(const CoupledModel& model, const State& state0, const Eigen::VectorXd& velocity0,
                             const VoltageSchedule& schedule, const Probe& probe, const NewmarkSettings& s) {
  if (!(s.dt > 0) || !(s.duration > 0)) throw std::invalid_argument("newmark_integrate: dt and duration must be positive");
  if (!(s.alpha >= -1.0 / 3.0 && s.alpha <= 0.0)) throw std::invalid_argument("newmark_integrate: alpha must lie in [-1/3, 0]");
  if (!(s.gamma >= 0.5 && 2.0 * s.beta >= s.gamma))
    throw std::invalid_argument("newmark_integrate: need 2 beta >= gamma >= 1/2");
  const int n = model.num_free();
  const Rows rows = split_rows(model);
  const auto& cls = model.row_class();
  const SparseMatrix& M = model.mass();
  const auto& dofs = model.dofs();

  Trajectory traj;
  traj.voltage = schedule.amplitude;

  SparseMatrix C(n, n);
  Eigen::VectorXd z = model.free(state0);
  if (s.rayleigh_mass != 0.0 || s.rayleigh_stiffness != 0.0) {
    C = s.rayleigh_mass * M;
    if (s.rayleigh_stiffness != 0.0) {
      const SparseMatrix K0 = model.assemble(state0).K;
      std::vector<Eigen::Triplet<double>> trip;
      for (int k = 0; k < K0.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(K0, k); it; ++it)
          if (rows.has_mass[it.row()] && rows.has_mass[k]) trip.emplace_back(int(it.row()), k, s.rayleigh_stiffness * it.value());
      SparseMatrix Ck(n, n);
      Ck.setFromTriplets(trip.begin(), trip.end());
      C += Ck;
    }
  }
  const bool damped = C.nonZeros() > 0;

  Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
  if (velocity0.size() == n)
    for (int i : rows.massive) v(i) = velocity0(i);

  // t = 0+: voltage applied, massless unknowns follow instantly.
  double t = 0.0;
  double V = schedule(0.0);
  try {
    z = model.free(relax_potentials(model, model.state(z, V)));
    if (!relax_massless(model, rows, z, V, s.tol_residual)) {
      traj.truncated = true;
      traj.diagnostic = "could not equilibrate the massless unknowns at t = 0";
      return traj;
    }
  } catch (const ElementInversion& e) {
    traj.inversion = traj.contact = true;
    traj.diagnostic = e.what();
    return traj;
  }
  TangentSystem sys = model.assemble(model.state(z, V));
  Eigen::VectorXd a = Eigen::VectorXd::Zero(n);
  if (!rows.massive.empty()) {
    Eigen::VectorXd rhs = -sys.r(rows.massive);
    if (damped) rhs -= (C * v)(rows.massive);
    Eigen::SimplicialLDLT<SparseMatrix> mass_solver(restrict_matrix(M, rows.massive, n));
    if (mass_solver.info() != Eigen::Success) throw ValidationError("structural mass matrix is singular");
    const Eigen::VectorXd a_s = mass_solver.solve(rhs);
    for (std::size_t k = 0; k < rows.massive.size(); ++k) a(rows.massive[k]) = a_s(k);
  }

  std::vector<int> fixed_phi;
  for (int node = 0; node < model.mesh().num_nodes(); ++node)
    if (dofs.has_potential(node) && dofs.is_fixed(DofMap::slot(node, 2))) fixed_phi.push_back(node);
  auto prescribed = [&](int node, double volts) { return dofs.potential_coefficient(DofMap::slot(node, 2)) * volts; };

  double source = 0.0;
  auto record = [&](double time, const TangentSystem& at) {
    const State st = model.state(z, V);
    traj.t.push_back(time);
    traj.d.push_back(probe.value(st));
    Eigen::VectorXd vel_u = Eigen::VectorXd::Zero(2 * dofs.num_nodes());
    for (int c = 0; c < 2; ++c)
      for (const auto& e : dofs.entries(DofMap::slot(probe.node, c))) vel_u(2 * probe.node + c) += e.weight * v(e.index);
    traj.v.push_back(probe.direction.dot(vel_u.segment<2>(2 * probe.node)));
    EnergySample e;
    e.kinetic = 0.5 * v.dot(M * v);
    e.strain = at.W_m;
    e.electric = at.W_e;
    e.source = source;
    traj.energy.push_back(e);
    if (s.snapshot_stride > 0 && (traj.t.size() - 1) % std::size_t(s.snapshot_stride) == 0)
      traj.snapshots.emplace_back(time, st);
  };
  record(0.0, sys);
  const double contact_d = s.contact_fraction * s.gap;

  const double c_beta = s.beta;
  double dt = s.dt;
  int halvings = 0;
  SymmetricSolver keff_solver;
  while (t < s.duration * (1 - 1e-12)) {
    const double h = std::min(dt, s.duration - t);
    const double V1 = schedule(t + h);
    Eigen::VectorXd z_pred = z + h * v + h * h * (0.5 - c_beta) * a;
    const Eigen::VectorXd v_pred = v + h * (1.0 - s.gamma) * a;
    Eigen::VectorXd z1 = z + h * v;
    for (int i : rows.massless) z_pred(i) = z1(i) = z(i);

    bool converged = false, inverted = false;
    Eigen::VectorXd a1, v1;
    TangentSystem sys1;
    double last_step = 1.0, last_rel = 0.0;
    bool refresh = true;
    try {
      for (int it = 0; it <= s.max_iter; ++it) {
        a1 = (z1 - z_pred) / (c_beta * h * h);
        for (int i : rows.massless) a1(i) = 0.0;
        v1 = v_pred + s.gamma * h * a1;
        sys1 = model.assemble(model.state(z1, V1), refresh);
        const Eigen::VectorXd inertia = M * a1;
        Eigen::VectorXd R = (1.0 + s.alpha) * sys1.r - s.alpha * sys.r + inertia;
        if (damped) R += C * ((1.0 + s.alpha) * v1 - s.alpha * v);
        const double fscale = sys1.force_scale + inertia.cwiseAbs().norm();
        const double ru = rows_norm(R, rows.massive, cls, 0) + rows_norm(R, rows.massless, cls, 0);
        const double rp = rows_norm(R, rows.massless, cls, 1);
        const double rel = std::max(fscale > 0 ? ru / fscale : ru, sys1.charge_scale > 0 ? rp / sys1.charge_scale : rp);
        if (rel <= s.tol_residual && (it > 0 ? last_step <= s.tol_increment : rel <= 1e-3 * s.tol_residual)) {
          converged = true;
          break;
        }
        if (it == s.max_iter) break;
        // Modified Newton: keep the step's first factorization while the
        // residual contracts fast enough, refresh the tangent otherwise.
        if (!refresh && rel > kMaxContraction * last_rel) {
          refresh = true;
          sys1 = model.assemble(model.state(z1, V1));
        }
        if (refresh) {
          SparseMatrix Keff = (1.0 + s.alpha) * sys1.K + (1.0 / (c_beta * h * h)) * M;
          if (damped) Keff += ((1.0 + s.alpha) * s.gamma / (c_beta * h)) * C;
          keff_solver.factorize(Keff);
        }
        refresh = false;
        last_rel = rel;
        const auto lin = keff_solver.solve(-R);
        z1 += lin.x;
        double dn[2] = {0, 0}, zn[2] = {0, 0};
        for (int i = 0; i < n; ++i) {
          dn[cls[i]] += lin.x(i) * lin.x(i);
          zn[cls[i]] += z1(i) * z1(i);
        }
        last_step = 0.0;
        for (int c = 0; c < 2; ++c)
          if (dn[c] > 0) last_step = std::max(last_step, std::sqrt(dn[c] / std::max(zn[c], 1e-300)));
      }
    } catch (const ElementInversion&) {
      inverted = true;
    } catch (const SingularMatrixError&) {
    }

    if (!converged) {
      if (halvings < s.max_halvings) {
        dt *= 0.5;
        ++halvings;
        continue;
      }
      if (inverted) {
        traj.inversion = traj.contact = true;
        traj.contact_time = t;
        traj.diagnostic = "element inversion: gap closed";
      } else {
        traj.truncated = true;
        char buf[128];
        std::snprintf(buf, sizeof buf, "Newton failed at t = %.6e s after %d step halvings", t, halvings);
        traj.diagnostic = buf;
      }
      break;
    }

    for (int node : fixed_phi) {
      const double dq = sys1.charges(node) - sys.charges(node);
      source += 0.5 * (prescribed(node, V) + prescribed(node, V1)) * dq;
    }
    const double d_prev = traj.d.back(), v_prev = traj.v.back();
    z = z1;
    v = v1;
    a = a1;
    t += h;
    V = V1;
    sys = std::move(sys1);
    record(t, sys);
    if (halvings > 0 && dt < s.dt) {
      dt = std::min(s.dt, 2.0 * dt);
      --halvings;
    }

    if (s.gap > 0 && traj.d.back() >= contact_d) {
      const double frac = (contact_d - d_prev) / (traj.d.back() - d_prev);
      traj.contact = true;
      traj.contact_time = t - h + frac * h;
      traj.t.back() = traj.contact_time;
      traj.d.back() = contact_d;
      traj.v.back() = v_prev + frac * (traj.v.back() - v_prev);
      break;
    }
  }
  return traj;
}

TrajectoryClass classify_trajectory(const Trajectory& traj, const ClassifyRules& rules) {
  if (traj.inversion) return TrajectoryClass::PullIn;
  const double contact = rules.contact_fraction * rules.gap;
  for (std::size_t k = 0; k < traj.t.size(); ++k)
    if (traj.d[k] >= contact * (1 - 1e-12) && (rules.horizon <= 0 || traj.t[k] <= rules.horizon))
      return TrajectoryClass::PullIn;
  if (traj.truncated) return TrajectoryClass::Indeterminate;
  if (traj.final_time() >= rules.horizon * (1 - 1e-9)) return TrajectoryClass::Bounded;
  return TrajectoryClass::Indeterminate;
}

DynamicPullInResult dynamic_pullin_search(const CoupledModel& model, const State& state0, const Probe& probe,
                                          double V_low, double V_high, const DynamicSearchSettings& settings) {
  DynamicPullInResult res;
  NewmarkSettings nm = settings.newmark;
  nm.duration = settings.rules.horizon;
  nm.contact_fraction = settings.rules.contact_fraction;
  nm.gap = settings.rules.gap;

  auto run = [&](double V) {
    auto traj = newmark_integrate(model, state0, {}, VoltageSchedule::step(V), probe, nm);
    const auto c = classify_trajectory(traj, settings.rules);
    res.samples.emplace_back(V, c);
    res.trajectories.push_back(std::move(traj));
    return c;
  };
  auto finish = [&]() {
    std::vector<std::size_t> order(res.samples.size());
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return res.samples[a].first < res.samples[b].first; });
    decltype(res.samples) samples;
    decltype(res.trajectories) trajs;
    for (auto k : order) {
      samples.push_back(res.samples[k]);
      trajs.push_back(std::move(res.trajectories[k]));
    }
    res.samples = std::move(samples);
    res.trajectories = std::move(trajs);
    return res;
  };

  if (!(V_low < V_high)) throw std::invalid_argument("dynamic_pullin_search: need V_low < V_high");
  const auto c_low = run(V_low);
  const auto c_high = run(V_high);
  if (c_low != TrajectoryClass::Bounded || c_high != TrajectoryClass::PullIn) {
    res.diagnostic = "bracket ends must classify BOUNDED (V_low) and PULL_IN (V_high); got " + to_string(c_low) +
                     " and " + to_string(c_high);
    return finish();
  }
  double lo = V_low, hi = V_high;
  for (int k = 1; k <= settings.prelude_samples; ++k) run(V_low + (V_high - V_low) * k / (settings.prelude_samples + 1));
  if (settings.prelude_samples > 0) {
    auto sorted = res.samples;
    std::sort(sorted.begin(), sorted.end());
    bool seen_pullin = false;
    for (const auto& [V, c] : sorted) {
      if (c == TrajectoryClass::Indeterminate || (seen_pullin && c == TrajectoryClass::Bounded)) {
        res.diagnostic = "non-monotone or indeterminate classifications inside the bracket";
        return finish();
      }
      if (c == TrajectoryClass::PullIn) {
        if (!seen_pullin) hi = V;
        seen_pullin = true;
      } else {
        lo = V;
      }
    }
  }
  while (hi - lo > settings.tol_V) {
    const double mid = 0.5 * (lo + hi);
    const auto c = run(mid);
    if (c == TrajectoryClass::Bounded) lo = mid;
    else if (c == TrajectoryClass::PullIn) hi = mid;
    else {
      res.diagnostic = "indeterminate classification at V = " + std::to_string(mid);
      res.V_stable = lo;
      res.V_unstable = hi;
      return finish();
    }
  }
  res.ok = true;
  res.V_stable = lo;
  res.V_unstable = hi;
  res.V_dpi = 0.5 * (lo + hi);
  return finish();
}

void export_phase_diagram(std::ostream& os, const std::vector<Trajectory>& trajs, const std::string& header) {
  if (!header.empty()) os << header;
  os << "# V [V], t [s], d_probe [m], v_probe [m/s]\n";
  char buf[160];
  bool first = true;
  for (const auto& tr : trajs) {
    if (!first) os << "\n\n";
    first = false;
    for (std::size_t k = 0; k < tr.t.size(); ++k) {
      if (tr.contact && tr.t[k] > tr.contact_time) break;
      std::snprintf(buf, sizeof buf, "%.10g,%.10g,%.10g,%.10g\n", tr.voltage, tr.t[k], tr.d[k], tr.v[k]);
      os << buf;
    }
  }
}

}  // namespace elmech
