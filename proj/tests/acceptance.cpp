// Acceptance run: one PASS/FAIL line per criterion. Exits 0 when the set of
// failing criteria equals --expect-fail (empty by default).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <optional>
#include <set>
#include <string>

#include <CLI11.hpp>

#include "elmech/dynamics.hpp"
#include "elmech/lumped.hpp"
#include "elmech/static_solvers.hpp"
#include "fd_checks.hpp"

using namespace elmech;

namespace {

// Criterion 1
constexpr double kFoldSearchTol = 1e-9;
constexpr double kOdeRatioTol = 1e-3;
constexpr double kPaperRatio = 0.918559;
constexpr double kPaperRatioDigits = 5e-7;
constexpr double kOracleSeconds = 1.0;
// Criterion 2
constexpr double kPlateTol = 0.01;
constexpr double kPlateSeconds = 10.0;
// Criterion 3
constexpr int kRandomConfigurations = 24;
constexpr double kFdForceTol = 1e-6;
constexpr double kFdTangentTol = 1e-5;
constexpr double kSymmetryTol = 1e-12;
// Criterion 4
constexpr double kRigidStaticTol = 0.02;
constexpr double kRigidRatioTol = 0.015;
// Criterion 5
constexpr double kBandLow = 0.08, kBandHigh = 0.13;
constexpr int kMaxDofs = 5000;
constexpr double kBeamSeconds = 300.0;
constexpr double kBeamHht = -0.05;           // damps only the unresolved through-thickness modes
constexpr int kBeamStepsPerPeriod = 100;
constexpr double kBeamHorizonPeriods = 10.0;
constexpr double kBeamBracketLow = 0.80, kBeamBracketHigh = 0.95;
constexpr double kBeamTolV = 0.5;
// Criterion 6
constexpr double kStaggeredAgreeTol = 1e-6;
constexpr int kPostFoldPoints = 10;
// Criterion 7
constexpr double kOrderTol = 0.005;
constexpr double kOrderVoltage = 100.0;
// Criterion 8
constexpr double kDriftTol = 0.01;
constexpr double kDriftVoltage = 150.0;
constexpr int kDriftStepsPerPeriod = 200;
constexpr double kDriftPeriods = 10.0;
constexpr double kContactTol = 0.02;
constexpr double kContactPeriods = 3.0;
// Criterion 9
constexpr double kSofteningTol = 0.05;
// Criterion 10
constexpr double kMorphTol = 0.005;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

struct Beam {
  RunConfig cfg;
  CoupledModel model;
  Probe probe;
  PullInResult trace;
  double T1 = 0.0;
  std::optional<DynamicPullInResult> dynamic;
};

Beam make_beam(const std::string& name, const std::vector<std::string>& overrides = {}) {
  RunConfig cfg = load_config(name, overrides);
  CoupledModel model = build_model(cfg);
  const Probe probe = build_probe(cfg, model.mesh());
  auto trace = riks_trace(model, model.zero_state(0.0), probe, cfg.statics.solver);
  const double T1 = fundamental_period(model, model.zero_state(0.0));
  return {std::move(cfg), std::move(model), probe, std::move(trace), T1, std::nullopt};
}

Beam& centred() {
  static Beam b = make_beam("beam_center_electrode");
  return b;
}

Beam& two_electrodes() {
  static Beam b = make_beam("beam_two_electrodes");
  return b;
}

const DynamicPullInResult& beam_dynamic(Beam& b) {
  if (!b.dynamic) {
    DynamicSearchSettings ds;
    ds.newmark.set_hht(kBeamHht);
    ds.newmark.dt = b.T1 / kBeamStepsPerPeriod;
    ds.newmark.duration = kBeamHorizonPeriods * b.T1;
    ds.newmark.gap = b.cfg.geometry.beam.gap;
    ds.rules = {b.cfg.geometry.beam.gap, ds.newmark.contact_fraction, kBeamHorizonPeriods * b.T1};
    ds.tol_V = kBeamTolV;
    b.dynamic = dynamic_pullin_search(b.model, b.model.zero_state(0.0), b.probe, kBeamBracketLow * b.trace.V_pi,
                                      kBeamBracketHigh * b.trace.V_pi, ds);
  }
  return *b.dynamic;
}

LumpedPlate rigid_plate_oracle(const RunConfig& cfg) {
  LumpedPlate p;
  p.k = cfg.bcs.spring_stiffness;
  p.g = cfg.geometry.beam.gap;
  p.A = cfg.geometry.beam.length;
  p.m = cfg.materials.mechanical.at(cfg.geometry.beam.beam_material).rho * cfg.geometry.beam.length *
        cfg.geometry.beam.thickness;
  return p;
}

Outcome lumped_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  const LumpedPlate rigid = rigid_plate_oracle(load_config("rigid_plate"));
  double fold_err = 0, ode_err = 0;
  for (const LumpedPlate& p : {LumpedPlate{}, rigid}) {
    const auto exact = lumped_static_pullin(p);
    const auto search = lumped_static_pullin_search(p);
    fold_err = std::max({fold_err, rel(search.V_pi, exact.V_pi), rel(search.x_pi, exact.x_pi),
                         rel(exact.x_pi, p.g / 3)});
    const double ratio = lumped_dynamic_pullin(p) / exact.V_pi;
    const double ode_ratio = lumped_dynamic_pullin_ode(p).V_dpi / exact.V_pi;
    ode_err = std::max(ode_err, rel(ode_ratio, ratio));
  }
  const double ratio = lumped_dynamic_pullin(LumpedPlate{}) / lumped_static_pullin(LumpedPlate{}).V_pi;
  const double secs = seconds_since(t0);
  return {fold_err <= kFoldSearchTol && ode_err <= kOdeRatioTol && std::abs(ratio - kPaperRatio) <= kPaperRatioDigits &&
              secs < kOracleSeconds,
          "fold vs search " + fmt("%.1e", fold_err) + ", ratio " + fmt("%.6f", ratio) + ", ODE bisection " +
              fmt("%.1e", ode_err) + ", " + fmt("%.2f", secs) + " s"};
}

Outcome parallel_plate() {
  const auto t0 = std::chrono::steady_clock::now();
  double force_err = 0, cap_err = 0, first_force = 0, first_cap = 0, F = 0;
  const auto base = load_config("parallel_plate");
  const double V = base.statics.voltage, L = base.geometry.beam.length, g = base.geometry.beam.gap;
  const double eps = kVacuumPermittivity;
  const double F_exact = 0.5 * eps * L * V * V / (g * g), C_exact = eps * L / g;
  for (int r : {1, 2, 4}) {
    const auto cfg = load_config("parallel_plate", {"geometry.nx=" + std::to_string(base.geometry.beam.nx * r),
                                                    "geometry.ny_gap=" + std::to_string(base.geometry.beam.ny_gap * r)});
    const CoupledModel model = build_model(cfg);
    const auto sys = model.assemble(relax_potentials(model, model.zero_state(V)), false);
    F = std::abs(model.set_force(sys, "beam_bottom").y());
    force_err = rel(F, F_exact);
    cap_err = rel(std::abs(model.set_charge(sys, "beam_bottom")) / V, C_exact);
    if (r == 1) first_force = force_err, first_cap = cap_err;
  }
  const double secs = seconds_since(t0);
  const bool converging = force_err <= first_force + 1e-12 && cap_err <= first_cap + 1e-12;
  return {force_err < kPlateTol && cap_err < kPlateTol && converging && secs < kPlateSeconds,
          "force " + fmt("%.5f", F) + " N/m (error " + fmt("%.1e", force_err) +
              "), capacitance error " + fmt("%.1e", cap_err) + ", " + fmt("%.2f", secs) + " s"};
}

Outcome variational_consistency() {
  test::FdErrors worst;
  for (int s = 0; s < kRandomConfigurations; ++s) {
    const auto e = test::random_configuration_check(2000 + s);
    worst.element_force = std::max(worst.element_force, e.element_force);
    worst.element_tangent = std::max(worst.element_tangent, e.element_tangent);
    worst.global_force = std::max(worst.global_force, e.global_force);
    worst.global_tangent = std::max(worst.global_tangent, e.global_tangent);
    worst.symmetry = std::max(worst.symmetry, e.symmetry);
  }
  return {worst.element_force < kFdForceTol && worst.global_force < kFdForceTol &&
              worst.element_tangent < kFdTangentTol && worst.global_tangent < kFdTangentTol &&
              worst.symmetry <= kSymmetryTol,
          std::to_string(kRandomConfigurations) + " configurations; forces " +
              fmt("%.1e", std::max(worst.element_force, worst.global_force)) + ", tangents " +
              fmt("%.1e", std::max(worst.element_tangent, worst.global_tangent)) + ", asymmetry " +
              fmt("%.1e", worst.symmetry)};
}

Outcome rigid_plate() {
  const auto cfg = load_config("rigid_plate");
  const CoupledModel model = build_model(cfg);
  const Probe probe = build_probe(cfg, model.mesh());
  const LumpedPlate p = rigid_plate_oracle(cfg);
  const auto trace = riks_trace(model, model.zero_state(0.0), probe, cfg.statics.solver);
  if (!trace.found) return {false, "no fold: " + trace.diagnostic};
  const double T1 = fundamental_period(model, model.zero_state(0.0));
  DynamicSearchSettings ds;
  ds.newmark = cfg.dynamic.newmark;
  ds.newmark.dt = T1 / cfg.dynamic.steps_per_period;
  ds.newmark.duration = cfg.dynamic.horizon_periods * T1;
  ds.rules = {cfg.geometry.beam.gap, ds.newmark.contact_fraction, cfg.dynamic.horizon_periods * T1};
  ds.tol_V = cfg.dynamic.tol_V;
  const auto dyn = dynamic_pullin_search(model, model.zero_state(0.0), probe, cfg.dynamic.v_low, cfg.dynamic.v_high, ds);
  if (!dyn.ok) return {false, "dynamic search: " + dyn.diagnostic};
  const double V_pi = lumped_static_pullin(p).V_pi;
  const double ratio = dyn.V_dpi / trace.V_pi, ratio_exact = lumped_dynamic_pullin(p) / V_pi;
  return {rel(trace.V_pi, V_pi) <= kRigidStaticTol && rel(ratio, ratio_exact) <= kRigidRatioTol,
          "V_pi " + fmt("%.3f", trace.V_pi) + " V (oracle " + fmt("%.3f", V_pi) + "), V_dpi/V_pi " + fmt("%.5f", ratio) +
              " (oracle " + fmt("%.5f", ratio_exact) + ")"};
}

Outcome beam_ratios() {
  const auto t0 = std::chrono::steady_clock::now();
  Beam& c = centred();
  Beam& t = two_electrodes();
  if (!c.trace.found || !t.trace.found) return {false, "no static fold found"};
  const auto& dc = beam_dynamic(c);
  const auto& dt = beam_dynamic(t);
  const double secs = seconds_since(t0);
  if (!dc.ok || !dt.ok) return {false, "dynamic search: " + dc.diagnostic + " " + dt.diagnostic};
  const double below_c = 1 - dc.V_dpi / c.trace.V_pi, below_t = 1 - dt.V_dpi / t.trace.V_pi;
  const int dofs = std::max(c.model.num_free(), t.model.num_free());
  const bool band = below_c >= kBandLow && below_c <= kBandHigh && below_t >= kBandLow && below_t <= kBandHigh;
  return {band && t.trace.V_pi > c.trace.V_pi && t.trace.d_pi > c.trace.d_pi && dofs <= kMaxDofs && secs < kBeamSeconds,
          "centred V_pi " + fmt("%.2f", c.trace.V_pi) + " V, V_dpi " + fmt("%.2f", dc.V_dpi) + " V (" +
              fmt("%.2f", 100 * below_c) + "% below); two electrodes V_pi " + fmt("%.2f", t.trace.V_pi) + " V, V_dpi " +
              fmt("%.2f", dt.V_dpi) + " V (" + fmt("%.2f", 100 * below_t) + "% below); d_pi " +
              fmt("%.3e", c.trace.d_pi) + " < " + fmt("%.3e", t.trace.d_pi) + " m; " + std::to_string(dofs) +
              " DOFs, " + fmt("%.0f", secs) + " s"};
}

Outcome monolithic_vs_staggered() {
  Beam& c = centred();
  if (!c.trace.found) return {false, "no static fold found"};
  const auto& s = c.cfg.statics;
  const double V = 0.5 * c.trace.V_pi;
  const auto mono = solve_on_branch(c.model, c.trace, V, s.solver);
  const auto stag = staggered_solve(c.model, V, c.model.zero_state(0.0), s.solver);
  if (!mono.converged || !stag.converged) return {false, "no solution at 0.5 V_pi"};
  const double agree = rel(c.probe.value(stag.state), c.probe.value(mono.state));
  const auto sweep = staggered_sweep(c.model, c.probe, s.staggered_dV, 1.2 * c.trace.V_pi, s.staggered_refine, s.solver);
  return {agree <= kStaggeredAgreeTol && sweep.failed && sweep.first_failure <= c.trace.V_pi &&
              c.trace.post_fold_points >= kPostFoldPoints,
          "agreement " + fmt("%.1e", agree) + ", staggered fails at " + fmt("%.2f", sweep.first_failure) +
              " V (fold " + fmt("%.2f", c.trace.V_pi) + " V), " + std::to_string(c.trace.post_fold_points) +
              " points past the fold"};
}

// Richardson limit from the three finest levels of a halving sequence.
double extrapolate(const std::vector<double>& f) {
  const std::size_t n = f.size();
  const double d1 = f[n - 2] - f[n - 3], d2 = f[n - 1] - f[n - 2];
  const double ratio = d1 / d2;
  return ratio > 1 ? f[n - 1] + d2 / (ratio - 1) : f[n - 1];
}

Outcome element_orders() {
  std::vector<double> F[2];
  for (int order : {1, 2})
    for (int r : {1, 2, 4, 8}) {
      const auto cfg = load_config("beam_center_electrode",
                                   {"geometry.order=" + std::to_string(order), "geometry.nx=" + std::to_string(30 * r),
                                    "geometry.ny_beam=" + std::to_string(r), "geometry.ny_gap=" + std::to_string(2 * r)});
      const CoupledModel model = build_model(cfg);
      const auto sys = model.assemble(relax_potentials(model, model.zero_state(kOrderVoltage)), false);
      F[order - 1].push_back(std::abs(model.set_force(sys, "beam_bottom").y()));
    }
  const double l3 = extrapolate(F[0]), l6 = extrapolate(F[1]);
  const double gap = rel(l3, l6);
  return {gap < kOrderTol, "limits TRI3 " + fmt("%.5e", l3) + ", TRI6 " + fmt("%.5e", l6) + " N/m (" +
                               fmt("%.2f", 100 * gap) + "%); finest meshes differ by " +
                               fmt("%.2f", 100 * rel(F[0].back(), F[1].back())) + "%"};
}

Outcome transient_integrity() {
  Beam& c = centred();
  const auto& dc = beam_dynamic(c);
  NewmarkSettings nm;  // beta 1/4, gamma 1/2, undamped
  nm.gap = c.cfg.geometry.beam.gap;
  nm.dt = c.T1 / kDriftStepsPerPeriod;
  nm.duration = kDriftPeriods * c.T1;
  const auto tr = newmark_integrate(c.model, c.model.zero_state(0.0), {}, VoltageSchedule::step(kDriftVoltage), c.probe, nm);
  const double drift = tr.energy_drift();
  const bool below = dc.ok && kDriftVoltage < dc.V_stable && !tr.contact && !tr.truncated;

  double tc[2] = {0, 0};
  bool contact = true;
  for (int k = 0; k < 2; ++k) {
    NewmarkSettings n2 = nm;
    n2.dt = c.T1 / (kBeamStepsPerPeriod << k);
    n2.duration = kContactPeriods * c.T1;
    const auto p = newmark_integrate(c.model, c.model.zero_state(0.0), {}, VoltageSchedule::step(c.trace.V_pi), c.probe, n2);
    contact &= p.contact;
    tc[k] = p.contact_time;
  }
  const double tc_change = contact ? rel(tc[0], tc[1]) : 1.0;
  return {below && drift < kDriftTol && contact && tc_change < kContactTol,
          "drift " + fmt("%.2f", 100 * drift) + "% over 10 periods at " + fmt("%.0f", kDriftVoltage) +
              " V; contact time " + fmt("%.4e", tc[1]) + " s at V_pi, change " + fmt("%.2f", 100 * tc_change) +
              "% under dt halving"};
}

Outcome modal_softening() {
  Beam& c = centred();
  if (!c.trace.found) return {false, "no static fold found"};
  std::vector<double> lam;
  std::string list;
  for (double f : {0.0, 0.25, 0.5, 0.75, 0.95, 0.99}) {
    const auto eq = solve_on_branch(c.model, c.trace, f * c.trace.V_pi, c.cfg.statics.solver);
    if (!eq.converged) return {false, "no equilibrium at " + fmt("%.2f", f) + " V_pi"};
    lam.push_back(modal_analysis(c.model, eq.state, 1).eigenvalues(0));
    list += (list.empty() ? "" : " ") + fmt("%.3f", lam.back() / lam.front());
  }
  bool monotone = true;
  for (std::size_t i = 1; i < lam.size(); ++i) monotone &= lam[i] < lam[i - 1];
  const double ratio = lam.back() / lam.front();
  return {monotone && ratio < kSofteningTol,
          std::string("omega1^2 / omega1^2(0) = ") + list + (monotone ? "" : " (not monotone)")};
}

Outcome morph_insensitivity() {
  Beam& c = centred();
  const double base = c.cfg.bcs.morph.scale;
  double worst = 0;
  std::string list;
  for (double f : {10.0, 0.1}) {
    char s[64];
    std::snprintf(s, sizeof s, "bcs.morph_scale=%.6g", f * base);
    const Beam b = make_beam("beam_center_electrode", {s});
    if (!b.trace.found) return {false, std::string("no fold at ") + s};
    worst = std::max(worst, rel(b.trace.V_pi, c.trace.V_pi));
    list += " " + fmt("%.4f", b.trace.V_pi);
  }
  return {worst < kMorphTol, "V_pi " + fmt("%.4f", c.trace.V_pi) + " V; x10, /10:" + list + " V (max shift " +
                                 fmt("%.3f", 100 * worst) + "%)"};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app("acceptance criteria");
  std::vector<int> expected;
  std::vector<int> only;
  app.add_option("--expect-fail", expected, "criteria known to fail");
  app.add_option("--only", only, "run only these criteria");
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"lumped oracle exactness", lumped_oracle},
      {"parallel-plate electrostatics", parallel_plate},
      {"variational consistency", variational_consistency},
      {"rigid plate vs lumped oracle", rigid_plate},
      {"beam dynamic/static ratios", beam_ratios},
      {"monolithic vs staggered", monolithic_vs_staggered},
      {"element-order robustness", element_orders},
      {"transient integrity", transient_integrity},
      {"modal softening", modal_softening},
      {"mesh-morphing insensitivity", morph_insensitivity},
  };
  std::set<int> failed;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = int(i) + 1;
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) failed.insert(id);
    std::printf("criterion %2d %s  %s: %s [%.1f s]\n", id, o.pass ? "PASS" : "FAIL", criteria[i].first,
                o.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
  }
  std::set<int> expect;
  for (int id : expected)
    if (only.empty() || std::find(only.begin(), only.end(), id) != only.end()) expect.insert(id);
  if (failed != expect) {
    std::printf("failing criteria differ from the expected set\n");
    return 1;
  }
  return 0;
}
