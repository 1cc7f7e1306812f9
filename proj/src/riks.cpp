#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>

#include "elmech/errors.hpp"
#include "elmech/linear_solver.hpp"
#include "elmech/static_solvers.hpp"

namespace elmech {
namespace {

// Scaled inner product on (dz, dV).
struct Metric {
  Eigen::VectorXd w;
  double wV = 1.0;

  double dot(const Eigen::VectorXd& a, double aV, const Eigen::VectorXd& b, double bV) const {
    return (w.array() * a.array() * b.array()).sum() + wV * aV * bV;
  }
  double norm(const Eigen::VectorXd& a, double aV) const { return std::sqrt(dot(a, aV, a, aV)); }
};

Metric make_metric(const CoupledModel& model, double gap, double V_ref) {
  Metric m;
  const int n = model.num_free();
  const int np = model.dofs().count(SlotKind::Potential);
  const int nu = n - np;
  m.w.resize(n);
  for (int i = 0; i < n; ++i)
    m.w(i) = model.row_class()[i] == 0 ? 1.0 / (std::max(nu, 1) * gap * gap) : 1.0 / (std::max(np, 1) * V_ref * V_ref);
  m.wV = 1.0 / (V_ref * V_ref);
  return m;
}

double relative_residual(const CoupledModel& model, const TangentSystem& sys) {
  const auto n = model.residual_norms(sys.r);
  const double ru = sys.force_scale > 0 ? n.displacement / sys.force_scale : n.displacement;
  const double rp = sys.charge_scale > 0 ? n.potential / sys.charge_scale : n.potential;
  return std::max(ru, rp);
}

struct PointTangent {
  Eigen::VectorXd t;  // dz/dV
  int negative = 0;
  double pivot_ratio = 0.0;
  bool singular = false;
};

PointTangent tangent_at(const TangentSystem& sys) {
  PointTangent pt;
  try {
    SymmetricSolver solver(sys.K);
    pt.negative = solver.negative_pivots();
    pt.pivot_ratio = solver.pivot_ratio();
    pt.t = solver.solve(-sys.dr_dV).x;
  } catch (const SingularMatrixError& e) {
    pt.singular = true;
    pt.t = e.null_direction();
  }
  return pt;
}

struct Step {
  bool ok = false;
  Eigen::VectorXd z;
  double V = 0.0;
  int iterations = 0;
  double residual = 0.0;
  TangentSystem sys;
};

Step corrector(const CoupledModel& model, const Metric& metric, const Eigen::VectorXd& z0, double V0,
               const Eigen::VectorXd& dz_pred, double dV_pred, double radius, const SolverSettings& settings) {
  Step st;
  Eigen::VectorXd dz = dz_pred;
  double dV = dV_pred;
  double last_correction = radius;
  for (int it = 0; it <= settings.max_iter; ++it) {
    try {
      st.sys = model.assemble(model.state(z0 + dz, V0 + dV));
    } catch (const ElementInversion&) {
      return st;
    }
    st.residual = relative_residual(model, st.sys);
    st.iterations = it + 1;
    if (!std::isfinite(st.residual)) return st;
    if (st.residual <= settings.tol_residual && it > 0 && last_correction <= settings.tol_increment * radius) {
      st.ok = true;
      st.z = z0 + dz;
      st.V = V0 + dV;
      return st;
    }
    if (it == settings.max_iter) return st;

    Eigen::VectorXd da, db;
    try {
      SymmetricSolver solver(st.sys.K);
      da = solver.solve(-st.sys.r).x;
      db = solver.solve(-st.sys.dr_dV).x;
    } catch (const SingularMatrixError&) {
      return st;
    }

    // |dz + da + l db, dV + l|^2 = radius^2
    const Eigen::VectorXd base = dz + da;
    const double a1 = metric.dot(db, 1.0, db, 1.0);
    const double a2 = 2.0 * metric.dot(base, dV, db, 1.0);
    const double a3 = metric.dot(base, dV, base, dV) - radius * radius;
    const double disc = a2 * a2 - 4.0 * a1 * a3;
    double lambda;
    if (disc >= 0 && a1 > 0) {
      const double sq = std::sqrt(disc);
      const double q = -0.5 * (a2 + std::copysign(sq, a2));
      const double l1 = q / a1;
      const double l2 = q != 0.0 ? a3 / q : -a2 / a1 - l1;
      // Root whose new increment is closest in angle to the current one.
      auto cosine = [&](double l) { return metric.dot(base + l * db, dV + l, dz, dV); };
      lambda = cosine(l1) >= cosine(l2) ? l1 : l2;
    } else {
      // Normal-plane (Riks) correction orthogonal to the current increment.
      const double den = metric.dot(dz, dV, db, 1.0);
      if (den == 0.0) return st;
      lambda = -metric.dot(dz, dV, da, 0.0) / den;
    }
    last_correction = metric.norm(da + lambda * db, lambda);
    dz = base + lambda * db;
    dV += lambda;
  }
  return st;
}

// Vertex of the parabola through three (s, V) samples, with d interpolated at it.
void interpolate_fold(const std::vector<ContinuationPoint>& b, int i, PullInResult& res) {
  const double s0 = b[i - 1].s, s1 = b[i].s, s2 = b[i + 1].s;
  const double V0 = b[i - 1].V, V1 = b[i].V, V2 = b[i + 1].V;
  const double d0 = b[i - 1].d_probe, d1 = b[i].d_probe, d2 = b[i + 1].d_probe;
  auto lagrange = [&](double f0, double f1, double f2, double s) {
    return f0 * (s - s1) * (s - s2) / ((s0 - s1) * (s0 - s2)) + f1 * (s - s0) * (s - s2) / ((s1 - s0) * (s1 - s2)) +
           f2 * (s - s0) * (s - s1) / ((s2 - s0) * (s2 - s1));
  };
  // V(s) = A s^2 + B s + C
  const double A = (V0 / ((s0 - s1) * (s0 - s2)) + V1 / ((s1 - s0) * (s1 - s2)) + V2 / ((s2 - s0) * (s2 - s1)));
  const double B = -(V0 * (s1 + s2) / ((s0 - s1) * (s0 - s2)) + V1 * (s0 + s2) / ((s1 - s0) * (s1 - s2)) +
                     V2 * (s0 + s1) / ((s2 - s0) * (s2 - s1)));
  double s_star = s1;
  if (A < 0) s_star = std::clamp(-B / (2 * A), s0, s2);
  res.s_pi = s_star;
  res.V_pi = lagrange(V0, V1, V2, s_star);
  res.d_pi = lagrange(d0, d1, d2, s_star);
  res.interpolation_error = std::abs(res.V_pi - V1);
}

}  // namespace

PullInResult riks_trace(const CoupledModel& model, const State& state0, const Probe& probe,
                        const SolverSettings& settings) {
  PullInResult res;
  double gap = settings.gap;
  if (!(gap > 0)) {
    const auto& sub = model.mesh().node_set("substrate");
    const auto& bot = model.mesh().node_set("beam_bottom");
    gap = model.mesh().coords(1, bot.front()) - model.mesh().coords(1, sub.front());
  }

  double dV0 = settings.initial_dV;
  double V_ref = 0.0;
  if (!(dV0 > 0)) {
    V_ref = lumped_pullin_estimate(model, state0, probe, gap, settings);
    if (!(V_ref > 0)) {
      res.diagnostic = "lumped pre-estimate failed; set initial_dV";
      return res;
    }
    dV0 = V_ref / 20.0;
  } else {
    V_ref = 20.0 * dV0;
  }
  const Metric metric = make_metric(model, gap, V_ref);

  Eigen::VectorXd z = model.free(state0);
  double V = state0.voltage;
  TangentSystem sys = model.assemble(model.state(z, V));
  PointTangent pt = tangent_at(sys);
  if (pt.singular) {
    res.diagnostic = "tangent singular at the initial state";
    return res;
  }

  ContinuationPoint p0;
  p0.V = V;
  p0.state = model.state(z, V);
  p0.d_probe = probe.value(p0.state);
  p0.inertia = schur_negative_count(model, pt.negative);
  p0.dV_ds = 1.0 / metric.norm(pt.t, 1.0);
  p0.residual_norm = relative_residual(model, sys);
  res.branch.push_back(p0);

  double radius = dV0 * metric.norm(pt.t, 1.0);
  const double r_min = radius * settings.radius_min_factor;
  const double r_max = radius * settings.radius_max_factor;
  std::optional<Eigen::VectorXd> prev_dz;
  double prev_dV = 0.0;
  int fold_index = -1;
  int refinements = 0;
  double r_cap = r_max;

  for (int step = 0; step < settings.max_steps; ++step) {
    Eigen::VectorXd dz_pred;
    double dV_pred;
    if (prev_dz) {
      const double scale = radius / metric.norm(*prev_dz, prev_dV);
      dz_pred = scale * *prev_dz;
      dV_pred = scale * prev_dV;
    } else {
      const double scale = radius / metric.norm(pt.t, 1.0);
      dz_pred = scale * pt.t;
      dV_pred = scale;
    }

    Step st = corrector(model, metric, z, V, dz_pred, dV_pred, radius, settings);
    // A step pointing against the previous one has turned back along the
    // branch; retry with a smaller sphere.
    if (st.ok && prev_dz && metric.dot(st.z - z, st.V - V, *prev_dz, prev_dV) <= 0) st.ok = false;
    if (!st.ok) {
      radius *= 0.5;
      if (radius < r_min) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "arc-length radius collapsed below %.3e at V = %.6g V after %d points",
                      r_min, V, int(res.branch.size()));
        res.diagnostic = buf;
        break;
      }
      --step;  // retries do not count as branch steps
      continue;
    }

    const Eigen::VectorXd inc = st.z - z;
    const double incV = st.V - V;
    const Eigen::VectorXd z_prev = z;
    const double V_prev = V;
    const PointTangent pt_prev = pt;
    z = st.z;
    V = st.V;
    pt = tangent_at(st.sys);

    ContinuationPoint p;
    p.V = V;
    p.state = model.state(z, V);
    p.d_probe = probe.value(p.state);
    p.s = res.branch.back().s + metric.norm(inc, incV);
    p.iterations = st.iterations;
    p.residual_norm = st.residual;
    p.inertia = std::max(0, schur_negative_count(model, pt.negative));
    if (pt.singular) {
      p.at_fold = true;
      p.dV_ds = 0.0;
      if (fold_index < 0) {
        fold_index = int(res.branch.size());
        res.detection = FoldDetection::SingularTangent;
        res.V_pi = V;
        res.d_pi = p.d_probe;
        res.s_pi = p.s;
        res.found = true;
      }
    } else {
      const double n = metric.norm(pt.t, 1.0);
      const double orient = metric.dot(pt.t, 1.0, inc, incV) >= 0 ? 1.0 : -1.0;
      p.dV_ds = orient / n;
      p.at_fold = std::abs(p.dV_ds) < 1e-3 * V_ref;
    }
    res.branch.push_back(std::move(p));

    const int last = int(res.branch.size()) - 1;
    if (fold_index < 0 && res.branch[last - 1].dV_ds > 0 && res.branch[last].dV_ds <= 0) {
      // Re-approach a coarsely bracketed fold with a smaller sphere.
      if (refinements < settings.fold_refinements) {
        ++refinements;
        res.branch.pop_back();
        z = z_prev;
        V = V_prev;
        pt = pt_prev;
        radius *= 0.25;
        r_cap = radius;
        --step;
        continue;
      }
      fold_index = last;
      res.detection = FoldDetection::FoldSignChange;
    }
    if (fold_index >= 0) {
      res.post_fold_points = last - fold_index + 1;
      if (res.post_fold_points >= settings.post_fold_points) break;
    }

    prev_dz = inc;
    prev_dV = incV;
    const double factor = std::sqrt(double(settings.target_iterations) / std::max(st.iterations - 1, 1));
    radius = std::clamp(radius * std::clamp(factor, 0.5, 2.0), r_min, fold_index < 0 ? r_cap : r_max);
  }

  if (res.detection == FoldDetection::FoldSignChange) {
    int imax = 0;
    for (int i = 0; i <= fold_index && i < int(res.branch.size()); ++i)
      if (res.branch[i].V > res.branch[imax].V) imax = i;
    if (imax > 0 && imax + 1 < int(res.branch.size())) {
      interpolate_fold(res.branch, imax, res);
    } else {
      res.V_pi = res.branch[imax].V;
      res.d_pi = res.branch[imax].d_probe;
      res.s_pi = res.branch[imax].s;
    }
    res.found = true;
  }
  if (res.found && res.post_fold_points < settings.post_fold_points && res.diagnostic.empty())
    res.diagnostic = "fewer post-fold points than requested";
  if (!res.found && res.diagnostic.empty()) res.diagnostic = "no fold found within max_steps";
  return res;
}

}  // namespace elmech
