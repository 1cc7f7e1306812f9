#include "elmech/cli.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "elmech/errors.hpp"
#include "elmech/lumped.hpp"
#include "elmech/output.hpp"
#include "elmech/scenario.hpp"

namespace elmech {

namespace {

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

struct Common {
  std::string config;
  std::vector<std::string> sets;
  std::string out_dir;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config,-c", c.config, "config file, or the name of a shipped config")->required();
  sub->add_option("--set", c.sets, "override a config key: section.key=value")->take_all();
  sub->add_option("--out,-o", c.out_dir, "output directory (overrides output.directory)");
}

// Output paths and the shared header of every artifact of one run.
struct Session {
  RunConfig cfg;
  std::string command;
  RunLog log;
  std::string base;

  Session(RunConfig c, std::string cmd)
      : cfg(std::move(c)), command(std::move(cmd)), log(command, cfg.hash(), cfg.dump()) {
    std::filesystem::create_directories(cfg.output.directory);
    base = (std::filesystem::path(cfg.output.directory) / cfg.output.prefix).string();
  }
  std::vector<std::string> header(const std::string& what) const {
    return {std::string("elmech ") + kVersion + " " + command + ": " + what, "config " + cfg.name + " hash " + cfg.hash()};
  }
  std::string path(const std::string& suffix) const { return base + "_" + suffix; }
};

Session open_session(const Common& c, const std::string& command) {
  auto cfg = load_config(c.config, c.sets);
  if (!c.out_dir.empty()) cfg.output.directory = c.out_dir;
  return Session(std::move(cfg), command);
}

int finish(Session& s, std::ostream& out, int code) {
  s.log.line(code == kExitOk ? "status: ok" : "status: solver did not converge (partial outputs written)");
  s.log.write(s.path(s.command + ".log"));
  out << "log: " << s.path(s.command + ".log") << "\n";
  return code;
}

void log_newton(RunLog& log, const NewtonReport& rep) {
  std::ostringstream os;
  os << "newton: " << (rep.converged ? "converged" : "failed") << " in " << rep.iterations << " evaluations; residuals";
  for (double r : rep.residuals) os << " " << fmt("%.3e", r);
  log.line(os.str());
  if (!rep.message.empty()) log.line("newton message: " + rep.message);
}

void write_nodal(Session& s, const CoupledModel& model, const State& st, const std::string& tag) {
  const auto& mesh = model.mesh();
  std::vector<std::vector<double>> rows;
  for (int n = 0; n < mesh.num_nodes(); ++n)
    rows.push_back({double(n), mesh.coords(0, n), mesh.coords(1, n), st.u(2 * n), st.u(2 * n + 1), st.phi(n)});
  write_csv_file(s.path(tag + ".csv"), s.header("nodal fields at V = " + fmt("%.10g", st.voltage) + " V"),
                 {"node", "x [m]", "y [m]", "u_x [m]", "u_y [m]", "phi [V]"}, rows);
  if (s.cfg.output.vtk) write_vtk_file(s.path(tag + ".vtk"), mesh, st, "elmech " + tag + " " + s.cfg.hash());
}

int cmd_static(const Common& c, double voltage, std::ostream& out) {
  auto s = open_session(c, "static");
  const double V = std::isnan(voltage) ? s.cfg.statics.voltage : voltage;
  const auto model = build_model(s.cfg);
  for (const auto& w : model.warnings()) s.log.warning(w);
  const auto probe = build_probe(s.cfg, model.mesh());
  const auto rep = incremental_solve(model, V, model.zero_state(0.0), s.cfg.statics.solver);
  log_newton(s.log, rep);
  write_nodal(s, model, rep.state, "static");
  const double d = probe.value(rep.state);
  s.log.line("probe node " + std::to_string(probe.node) + " displacement " + fmt("%.10e", d) + " m");
  out << "V = " << V << " V, probe displacement " << fmt("%.6e", d) << " m"
      << (rep.converged ? "" : " (NOT CONVERGED)") << "\n";
  return finish(s, out, rep.converged ? kExitOk : kExitNonconvergence);
}

int cmd_pullin(const Common& c, bool staggered, std::ostream& out) {
  auto s = open_session(c, "pullin");
  const auto model = build_model(s.cfg);
  for (const auto& w : model.warnings()) s.log.warning(w);
  const auto probe = build_probe(s.cfg, model.mesh());
  const auto res = riks_trace(model, model.zero_state(0.0), probe, s.cfg.statics.solver);
  std::vector<std::vector<double>> rows;
  for (const auto& p : res.branch)
    rows.push_back({p.V, p.d_probe, p.s, p.dV_ds, double(p.inertia), p.at_fold ? 1.0 : 0.0, p.residual_norm, double(p.iterations)});
  write_csv_file(s.path("branch.csv"), s.header("equilibrium branch"),
                 {"V [V]", "d_probe [m]", "s [-]", "dV_ds [V]", "negative_eigenvalues", "at_fold", "residual [-]", "iterations"},
                 rows);
  s.log.line("branch points: " + std::to_string(res.branch.size()) + ", past fold: " + std::to_string(res.post_fold_points));
  if (res.found) {
    s.log.line("V_pi = " + fmt("%.10g", res.V_pi) + " V, d_pi = " + fmt("%.10e", res.d_pi) + " m, detection " +
               to_string(res.detection) + ", interpolation error " + fmt("%.3e", res.interpolation_error) + " V");
    out << "V_pi = " << fmt("%.6f", res.V_pi) << " V, d_pi = " << fmt("%.6e", res.d_pi) << " m ("
        << to_string(res.detection) << ")\n";
    const ContinuationPoint* fold = &res.branch.front();
    for (const auto& p : res.branch)
      if (std::abs(p.V - res.V_pi) < std::abs(fold->V - res.V_pi)) fold = &p;
    if (s.cfg.output.vtk) write_vtk_file(s.path("fold.vtk"), model.mesh(), fold->state, "elmech fold " + s.cfg.hash());
  } else {
    out << "no fold found: " << res.diagnostic << "\n";
  }
  if (!res.diagnostic.empty()) s.log.warning(res.diagnostic);
  if (staggered) {
    const double vmax = res.found ? 1.5 * res.V_pi : 2.0 * s.cfg.statics.voltage;
    const auto sw = staggered_sweep(model, probe, s.cfg.statics.staggered_dV, vmax, s.cfg.statics.staggered_refine,
                                    s.cfg.statics.solver);
    std::vector<std::vector<double>> srows;
    for (std::size_t k = 0; k < sw.converged_voltages.size(); ++k)
      srows.push_back({sw.converged_voltages[k], sw.converged_probe[k]});
    write_csv_file(s.path("staggered.csv"), s.header("staggered sweep"), {"V [V]", "d_probe [m]"}, srows);
    const std::string msg = sw.failed ? "staggered breakdown at V = " + fmt("%.6f", sw.first_failure) + " V"
                                      : "staggered converged up to " + fmt("%.6f", sw.last_converged) + " V";
    s.log.line(msg);
    out << msg << "\n";
  }
  return finish(s, out, res.found ? kExitOk : kExitNonconvergence);
}

NewmarkSettings timed_settings(const RunConfig& cfg, double period) {
  NewmarkSettings nm = cfg.dynamic.newmark;
  if (nm.dt <= 0) nm.dt = period / cfg.dynamic.steps_per_period;
  nm.duration = cfg.dynamic.duration_periods * period;
  return nm;
}

int cmd_transient(const Common& c, double voltage, std::ostream& out) {
  auto s = open_session(c, "transient");
  const auto model = build_model(s.cfg);
  for (const auto& w : model.warnings()) s.log.warning(w);
  const auto probe = build_probe(s.cfg, model.mesh());
  const State rest = model.zero_state(0.0);
  const double T1 = fundamental_period(model, rest);
  auto nm = timed_settings(s.cfg, T1);
  auto schedule = s.cfg.dynamic.schedule;
  if (!std::isnan(voltage)) schedule.amplitude = voltage;
  s.log.line("fundamental period " + fmt("%.10e", T1) + " s, dt " + fmt("%.10e", nm.dt) + " s, duration " +
             fmt("%.10e", nm.duration) + " s");
  const auto tr = newmark_integrate(model, rest, {}, schedule, probe, nm);
  std::vector<std::vector<double>> rows;
  for (std::size_t k = 0; k < tr.t.size(); ++k) {
    const auto& e = tr.energy[std::min(k, tr.energy.size() - 1)];
    rows.push_back({tr.t[k], tr.d[k], tr.v[k], e.kinetic, e.strain, e.electric, e.source});
  }
  write_csv_file(s.path("trajectory.csv"), s.header("transient, amplitude " + fmt("%.10g", schedule.amplitude) + " V"),
                 {"t [s]", "d [m]", "v [m/s]", "E_kin [J/m]", "E_strain [J/m]", "E_elec [J/m]", "W_source [J/m]"}, rows);
  for (std::size_t k = 0; k < tr.snapshots.size(); ++k) {
    char tag[32];
    std::snprintf(tag, sizeof tag, "snapshot_%04zu.vtk", k);
    write_vtk_file(s.path(tag), model.mesh(), tr.snapshots[k].second,
                   "elmech t = " + fmt("%.10e", tr.snapshots[k].first) + " " + s.cfg.hash());
  }
  ClassifyRules rules{s.cfg.geometry.beam.gap, nm.contact_fraction, nm.duration};
  const auto kind = classify_trajectory(tr, rules);
  s.log.line("classification " + to_string(kind) + ", max displacement " + fmt("%.10e", tr.max_displacement()) +
             " m, energy drift " + fmt("%.3e", tr.energy_drift()));
  if (tr.contact) s.log.line("contact time " + fmt("%.10e", tr.contact_time) + " s");
  if (!tr.diagnostic.empty()) s.log.line("diagnostic: " + tr.diagnostic);
  out << to_string(kind) << ", max displacement " << fmt("%.6e", tr.max_displacement()) << " m";
  if (tr.contact) out << ", contact at " << fmt("%.6e", tr.contact_time) << " s";
  out << "\n";
  return finish(s, out, tr.truncated ? kExitNonconvergence : kExitOk);
}

int cmd_dpullin(const Common& c, double vlow, double vhigh, std::ostream& out, std::ostream& err) {
  auto s = open_session(c, "dpullin");
  const double lo = std::isnan(vlow) ? s.cfg.dynamic.v_low : vlow;
  const double hi = std::isnan(vhigh) ? s.cfg.dynamic.v_high : vhigh;
  if (!(lo > 0 && hi > lo)) {
    err << "dpullin needs 0 < v_low < v_high (--vlow/--vhigh or dynamic.v_low/v_high)\n";
    return kExitUsage;
  }
  const auto model = build_model(s.cfg);
  for (const auto& w : model.warnings()) s.log.warning(w);
  const auto probe = build_probe(s.cfg, model.mesh());
  const State rest = model.zero_state(0.0);
  const double T1 = fundamental_period(model, rest);
  DynamicSearchSettings ds;
  ds.newmark = timed_settings(s.cfg, T1);
  ds.rules = {s.cfg.geometry.beam.gap, ds.newmark.contact_fraction, s.cfg.dynamic.horizon_periods * T1};
  ds.tol_V = s.cfg.dynamic.tol_V;
  ds.prelude_samples = s.cfg.dynamic.prelude_samples;
  s.log.line("fundamental period " + fmt("%.10e", T1) + " s, dt " + fmt("%.10e", ds.newmark.dt) + " s, horizon " +
             fmt("%.10e", ds.rules.horizon) + " s");
  const auto res = dynamic_pullin_search(model, rest, probe, lo, hi, ds);
  std::ofstream phase(s.path("phase.csv"));
  if (!phase) throw IoError("cannot write '" + s.path("phase.csv") + "'");
  std::string header;
  for (const auto& h : s.header("phase diagram")) header += "# " + h + "\n";
  export_phase_diagram(phase, res.trajectories, header);
  std::vector<std::vector<double>> rows;
  for (std::size_t k = 0; k < res.samples.size(); ++k) {
    const auto& tr = res.trajectories[k];
    rows.push_back({res.samples[k].first, double(int(res.samples[k].second)), tr.max_displacement(),
                    tr.contact ? tr.contact_time : -1.0});
  }
  write_csv_file(s.path("samples.csv"), s.header("step-voltage classifications (0 BOUNDED, 1 PULL_IN, 2 INDETERMINATE)"),
                 {"V [V]", "class", "max_d [m]", "contact_time [s]"}, rows);
  for (const auto& [V, kind] : res.samples) s.log.line("V = " + fmt("%.10g", V) + " V: " + to_string(kind));
  if (res.ok) {
    s.log.line("V_dpi = " + fmt("%.10g", res.V_dpi) + " V in [" + fmt("%.10g", res.V_stable) + ", " +
               fmt("%.10g", res.V_unstable) + "]");
    out << "V_dpi = " << fmt("%.4f", res.V_dpi) << " V, bracket [" << fmt("%.4f", res.V_stable) << ", "
        << fmt("%.4f", res.V_unstable) << "]\n";
  } else {
    s.log.warning(res.diagnostic);
    out << "no dynamic pull-in voltage: " << res.diagnostic << "\n";
  }
  return finish(s, out, res.ok ? kExitOk : kExitNonconvergence);
}

int cmd_modal(const Common& c, double voltage, std::ostream& out) {
  auto s = open_session(c, "modal");
  const double V = std::isnan(voltage) ? s.cfg.modal.voltage : voltage;
  const auto model = build_model(s.cfg);
  for (const auto& w : model.warnings()) s.log.warning(w);
  State eq = model.zero_state(0.0);
  if (V != 0.0) {
    const auto rep = incremental_solve(model, V, eq, s.cfg.statics.solver);
    log_newton(s.log, rep);
    if (!rep.converged) {
      out << "no equilibrium at V = " << V << " V\n";
      return finish(s, out, kExitNonconvergence);
    }
    eq = rep.state;
  }
  const auto modes = modal_analysis(model, eq, s.cfg.modal.n_modes);
  std::ostringstream rep;
  rep << "# " << s.header("coupled modes at V = " + fmt("%.10g", V) + " V")[0] << "\n# "
      << s.header("")[1] << "\n# mode frequency_hz lambda_rad2_per_s2 stability\n";
  for (int k = 0; k < modes.eigenvalues.size(); ++k) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%d %.10e %.10e %s\n", k + 1, modes.frequencies_hz(k), modes.eigenvalues(k),
                  modes.unstable[k] ? "UNSTABLE" : "STABLE");
    rep << buf;
  }
  std::ofstream f(s.path("modal.txt"));
  if (!f) throw IoError("cannot write '" + s.path("modal.txt") + "'");
  f << rep.str();
  out << rep.str();
  return finish(s, out, kExitOk);
}

int cmd_oracle(const LumpedPlate& p, bool ode, double traj_V, const std::string& csv, std::ostream& out) {
  const auto fold = lumped_static_pullin(p);
  const auto search = lumped_static_pullin_search(p);
  const double vd = lumped_dynamic_pullin(p);
  char buf[256];
  out << "quantity value\n";
  std::snprintf(buf, sizeof buf, "V_pi %.10g\nx_pi %.10g\nV_pi_search %.10g\nx_pi_search %.10g\nV_dpi %.10g\nratio %.10f\n",
                fold.V_pi, fold.x_pi, search.V_pi, search.x_pi, vd, vd / fold.V_pi);
  out << buf;
  if (ode) {
    const auto b = lumped_dynamic_pullin_ode(p);
    std::snprintf(buf, sizeof buf, "V_dpi_ode %.10g\nratio_ode %.10f\n", b.V_dpi, b.V_dpi / fold.V_pi);
    out << buf;
  }
  if (!std::isnan(traj_V)) {
    const auto tr = lumped_integrate(p, traj_V, p.period() / 1000, 10 * p.period());
    out << "trajectory " << to_string(tr.kind) << " max_x " << fmt("%.10g", tr.max_x) << "\n";
    if (!csv.empty()) {
      std::vector<std::vector<double>> rows;
      for (std::size_t k = 0; k < tr.t.size(); ++k) rows.push_back({tr.t[k], tr.x[k], tr.v[k], tr.energy[k]});
      write_csv_file(csv, {std::string("elmech ") + kVersion + " oracle trajectory at V = " + fmt("%.10g", traj_V) + " V"},
                     {"t [s]", "x [m]", "v [m/s]", "E [J]"}, rows);
    }
  }
  return kExitOk;
}

int cmd_mesh(const Common& c, std::ostream& out) {
  auto s = open_session(c, "mesh");
  auto setup = build_setup(s.cfg);
  const auto diags = validate(setup.mesh);
  for (const auto& d : diags) s.log.warning(d.message);
  std::ofstream f(s.path("mesh.txt"));
  if (!f) throw IoError("cannot write '" + s.path("mesh.txt") + "'");
  f << write_mesh(setup.mesh);
  const CoupledModel model(setup.mesh, s.cfg.materials, setup.bcs, s.cfg.bcs.morph);
  if (s.cfg.output.vtk) write_vtk_file(s.path("mesh.vtk"), model.mesh(), model.zero_state(0.0), "elmech mesh " + s.cfg.hash());
  const std::string summary = std::to_string(setup.mesh.num_nodes()) + " nodes, " +
                              std::to_string(setup.mesh.num_elements()) + " elements, " +
                              std::to_string(model.num_free()) + " free unknowns, " + std::to_string(diags.size()) +
                              " diagnostics";
  s.log.line(summary);
  out << summary << "\n";
  return finish(s, out, kExitOk);
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Coupled electro-mechanical finite elements for electrostatic micro-actuators"};
  app.require_subcommand(1);
  Common common;
  double voltage = std::nan(""), vlow = std::nan(""), vhigh = std::nan("");
  bool staggered = false, ode = false;
  LumpedPlate plate;
  double traj_V = std::nan("");
  std::string csv;

  auto* st = app.add_subcommand("static", "equilibrium at one voltage");
  add_common(st, common);
  st->add_option("--voltage,-V", voltage, "applied voltage [V]");
  auto* pi = app.add_subcommand("pullin", "arc-length trace through the static pull-in fold");
  add_common(pi, common);
  pi->add_flag("--staggered", staggered, "also run the staggered sweep");
  auto* tr = app.add_subcommand("transient", "Newmark response to the configured voltage schedule");
  add_common(tr, common);
  tr->add_option("--voltage,-V", voltage, "schedule amplitude [V]");
  auto* dp = app.add_subcommand("dpullin", "dynamic pull-in voltage by step-voltage bisection");
  add_common(dp, common);
  dp->add_option("--vlow", vlow, "voltage classified BOUNDED [V]");
  dp->add_option("--vhigh", vhigh, "voltage classified PULL_IN [V]");
  auto* mo = app.add_subcommand("modal", "coupled modes about an equilibrium");
  add_common(mo, common);
  mo->add_option("--voltage,-V", voltage, "voltage of the equilibrium [V]");
  auto* orc = app.add_subcommand("oracle", "closed-form lumped parallel-plate actuator");
  orc->add_option("--k", plate.k, "spring stiffness [N/m]");
  orc->add_option("--m", plate.m, "mass [kg]");
  orc->add_option("--g", plate.g, "gap [m]");
  orc->add_option("--A", plate.A, "plate area [m^2]");
  orc->add_option("--eps", plate.eps, "permittivity [F/m]");
  orc->add_flag("--ode", ode, "also bisect the step response of the ODE");
  orc->add_option("--trajectory", traj_V, "integrate a voltage step of this amplitude [V]");
  orc->add_option("--csv", csv, "trajectory CSV path");
  auto* me = app.add_subcommand("mesh", "write and check the configured mesh");
  add_common(me, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*st) return cmd_static(common, voltage, out);
    if (*pi) return cmd_pullin(common, staggered, out);
    if (*tr) return cmd_transient(common, voltage, out);
    if (*dp) return cmd_dpullin(common, vlow, vhigh, out, err);
    if (*mo) return cmd_modal(common, voltage, out);
    if (*orc) {
      if (!plate.valid()) {
        err << "oracle: k, m, g, A and eps must be positive\n";
        return kExitUsage;
      }
      return cmd_oracle(plate, ode, traj_V, csv, out);
    }
    if (*me) return cmd_mesh(common, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const GeometryError& e) {
    err << "geometry error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ValidationError& e) {
    err << "invalid model: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    err << "invalid argument: " << e.what() << "\n";
    return kExitUsage;
  } catch (const SingularMatrixError& e) {
    err << "solver failure: " << e.what() << "\n";
    return kExitNonconvergence;
  } catch (const ElementInversion& e) {
    err << "solver failure: " << e.what() << "\n";
    return kExitNonconvergence;
  }
  return kExitUsage;
}

}  // namespace elmech
